"""Bogoliubov diagonalisation of the per-mode quadratic form.

Three independent computations of the kernel ``K`` and of the excitation
matrix ``curlyK``:

* route A (:func:`diagonalize_mode`) follows the definitions through ``E``,
  ``S1``, the polar factor ``O`` and ``K = log(S1 S1^T) / 2``;
* route B (:func:`curlyK_hyperbolic`) conjugates ``D + W`` and ``Wt`` with
  ``cosh K`` and ``sinh K``;
* route C (:func:`block_route_K`) works in half dimension after rotating into
  the symmetric/antisymmetric antipodal basis.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .effham import ModeMatrices, block_components
from .errors import RouteDisagreementError, SingularityError

PD_TOL = 1e-12
ROUTE_TOL = 1e-9


@dataclass(frozen=True)
class SymEig:
    """Cached eigendecomposition of a real symmetric matrix (ascending)."""

    values: np.ndarray
    vectors: np.ndarray

    @classmethod
    def of(cls, A: np.ndarray) -> "SymEig":
        A = np.asarray(A, dtype=np.float64)
        w, V = np.linalg.eigh(0.5 * (A + A.T))
        return cls(w, V)

    def apply(self, f: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
        out = (self.vectors * f(self.values)) @ self.vectors.T
        return 0.5 * (out + out.T)

    def require_positive(self, what: str = "matrix") -> None:
        scale = max(float(np.abs(self.values).max(initial=0.0)), 1.0)
        lo = float(self.values[0]) if len(self.values) else 1.0
        if lo <= PD_TOL * scale:
            raise SingularityError(f"{what} not positive definite: smallest eigenvalue {lo:.3e}")


def sym_fn(A: np.ndarray, f: Callable[[np.ndarray], np.ndarray], positive: bool = False) -> np.ndarray:
    """``V f(Λ) V^T`` for symmetric ``A = V Λ V^T``.

    With ``positive=True`` the spectrum must be bounded below by ``1e-12``
    times the spectral radius, as needed for square roots and logarithms.
    """
    eig = SymEig.of(A)
    if positive:
        eig.require_positive()
    return eig.apply(f)


def sqrtm_sym(A):
    return sym_fn(A, np.sqrt, positive=True)


def inv_sqrtm_sym(A):
    return sym_fn(A, lambda w: 1.0 / np.sqrt(w), positive=True)


def logm_sym(A):
    return sym_fn(A, np.log, positive=True)


@dataclass(frozen=True)
class BogoliubovData:
    k: tuple
    S1: np.ndarray
    S2: np.ndarray
    E: np.ndarray
    O: np.ndarray
    K: np.ndarray
    curlyK: np.ndarray
    ground_constant: float

    @property
    def dim(self) -> int:
        return self.E.shape[0]

    @property
    def norm_k(self) -> float:
        return math.sqrt(sum(c * c for c in self.k))


def diagonalize_mode(mm: ModeMatrices) -> BogoliubovData:
    """Route A: ``E``, ``S1``, ``S2``, ``O``, ``K``, ``curlyK`` from their definitions."""
    A, B = mm.A, mm.B
    minus = SymEig.of(A - B)
    plus = SymEig.of(A + B)
    minus.require_positive("D + W - Wt")
    plus.require_positive("D + W + Wt")
    root_minus = minus.apply(np.sqrt)
    E = sqrtm_sym(root_minus @ (A + B) @ root_minus)
    S1 = root_minus @ inv_sqrtm_sym(E)
    S2 = np.linalg.inv(S1.T)
    O = S1 @ inv_sqrtm_sym(S1.T @ S1)
    K = 0.5 * logm_sym(S1 @ S1.T)
    # O E O^T, not O^T E O: this is the ordering the cosh/sinh conjugation
    # produces with S1 = O |S1|; the two differ whenever D is degenerate.
    curlyK = O @ E @ O.T
    curlyK = 0.5 * (curlyK + curlyK.T)
    ground = 0.5 * float(np.trace(E - mm.D - mm.W))
    return BogoliubovData(mm.k, S1, S2, E, O, K, curlyK, ground)


def _check(name: str, got: np.ndarray, want: np.ndarray, tol: float) -> float:
    err = float(np.abs(got - want).max(initial=0.0))
    if err > tol:
        raise RouteDisagreementError(f"{name}: routes differ by {err:.3e} > {tol:g}")
    return err


def curlyK_hyperbolic(mm: ModeMatrices, bd: BogoliubovData, tol: float = ROUTE_TOL) -> np.ndarray:
    """Route B: ``curlyK`` from ``cosh K`` and ``sinh K`` acting on ``D + W`` and ``Wt``."""
    eig = SymEig.of(bd.K)
    ch = eig.apply(np.cosh)
    sh = eig.apply(np.sinh)
    A, B = mm.A, mm.B
    out = ch @ A @ ch + sh @ A @ sh + ch @ B @ sh + sh @ B @ ch
    out = 0.5 * (out + out.T)
    _check("curlyK (route A vs B)", out, bd.curlyK, tol)
    return out


@dataclass(frozen=True)
class BlockRoute:
    K: np.ndarray
    L1: np.ndarray
    L2: np.ndarray
    K1: np.ndarray
    K2: np.ndarray


def block_route(mm: ModeMatrices) -> BlockRoute:
    """Route C in half dimension; see :func:`block_route_K`."""
    bc = block_components(mm)
    d = np.diag(bc.d)
    d_half = np.diag(np.sqrt(bc.d))
    I = np.eye(len(bc.d))
    dp = d + 2.0 * bc.b
    L1 = d_half @ inv_sqrtm_sym(d_half @ dp @ d_half) @ d_half - I
    dp_half = sqrtm_sym(dp)
    L2 = dp_half @ inv_sqrtm_sym(dp_half @ d @ dp_half) @ dp_half - I
    K1 = 0.5 * logm_sym(L1 + I)
    K2 = 0.5 * logm_sym(L2 + I)
    K = 0.5 * np.block([[K1 + K2, K1 - K2], [K1 - K2, K1 + K2]])
    return BlockRoute(K, L1, L2, K1, K2)


def block_route_K(mm: ModeMatrices, bd: BogoliubovData | None = None, tol: float = ROUTE_TOL) -> np.ndarray:
    """Route C: ``K`` assembled from the half-size kernels ``K1``, ``K2``.

    When ``bd`` is given the result is checked against route A.
    """
    br = block_route(mm)
    if bd is not None:
        _check("K (route A vs C)", br.K, bd.K, tol)
    return br.K


def hyperbolic_pair(bd: BogoliubovData) -> tuple:
    eig = SymEig.of(bd.K)
    return eig.apply(np.cosh), eig.apply(np.sinh)


@dataclass(frozen=True)
class QuadraticFormResiduals:
    offdiag: float
    diag: float
    ground: float


def quadratic_form_check(mm: ModeMatrices, bd: BogoliubovData) -> QuadraticFormResiduals:
    """Conjugate the doubled coefficient matrix with the Bogoliubov map.

    ``S = [[cosh K, sinh K], [sinh K, cosh K]]`` and ``H = [[A, B], [B, A]]``
    with ``A = D + W``, ``B = Wt``. The pairing blocks of ``S^T H S`` must
    vanish, its number-conserving block must equal ``curlyK``, and
    ``(tr curlyK - tr A) / 2`` must reproduce the ground constant.
    """
    ch, sh = hyperbolic_pair(bd)
    S = np.block([[ch, sh], [sh, ch]])
    A, B = mm.A, mm.B
    H = np.block([[A, B], [B, A]])
    T = S.T @ H @ S
    n = mm.dim
    off = np.linalg.norm(T[:n, n:]) + np.linalg.norm(T[n:, :n])
    diag = np.linalg.norm(T[:n, :n] - bd.curlyK) + np.linalg.norm(T[n:, n:] - bd.curlyK)
    ground = abs(0.5 * (np.trace(T[:n, :n]) - np.trace(A)) - bd.ground_constant)
    return QuadraticFormResiduals(float(off), float(diag), float(ground))


def verify_mode(mm: ModeMatrices, bd: BogoliubovData | None = None, tol: float = ROUTE_TOL) -> dict:
    """Run all cross-checks for one mode; raises on any disagreement."""
    bd = diagonalize_mode(mm) if bd is None else bd
    ck = curlyK_hyperbolic(mm, bd, tol)
    Kc = block_route_K(mm, bd, tol)
    qf = quadratic_form_check(mm, bd)
    for name, val in (("offdiag", qf.offdiag), ("diag", qf.diag), ("ground", qf.ground)):
        if val > tol:
            raise RouteDisagreementError(f"quadratic form {name} residual {val:.3e}")
    exp2K = sym_fn(bd.K, lambda w: np.exp(2 * w))
    return {
        "exp2K": float(np.abs(exp2K - bd.S1 @ bd.S1.T).max()),
        "curlyK_AB": float(np.abs(ck - bd.curlyK).max()),
        "K_AC": float(np.abs(Kc - bd.K).max()),
        "spectrum": float(np.abs(np.linalg.eigvalsh(bd.curlyK) - np.linalg.eigvalsh(bd.E)).max()),
        "offdiag": qf.offdiag,
    }


def write_mode_summary(path, rows) -> None:
    """Per-mode CSV: ``k,dim,ground_constant,minEigE,maxEigE,normK_HS,maxAbsK_times_M``."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("k,dim,ground_constant,minEigE,maxEigE,normK_HS,maxAbsK_times_M\n")
        for r in rows:
            k = " ".join(str(c) for c in r["k"])
            fh.write(
                f"{k},{r['dim']},{r['ground_constant']:.17g},{r['minEigE']:.17g},{r['maxEigE']:.17g},"
                f"{r['normK_HS']:.17g},{r['maxAbsK_times_M']:.17g}\n"
            )


def mode_summary(mm: ModeMatrices, bd: BogoliubovData, vhat: float) -> dict:
    eigE = np.linalg.eigvalsh(bd.E)
    scaled = float(np.abs(bd.K).max()) * mm.M / vhat if vhat > 0 else 0.0
    return {
        "k": mm.k,
        "dim": mm.dim,
        "ground_constant": bd.ground_constant,
        "minEigE": float(eigE[0]),
        "maxEigE": float(eigE[-1]),
        "normK_HS": float(np.linalg.norm(bd.K)),
        "maxAbsK_times_M": scaled,
    }
