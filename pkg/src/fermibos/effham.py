"""Coefficient matrices of the effective quadratic Hamiltonian per mode ``k``."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import EmptyModeError, StructuralError
from .lattice import FermiSystem, Momentum, PotentialSpec
from .patches import ModeIndex, PatchDecomposition


@dataclass(frozen=True)
class ModeMatrices:
    """Kinetic ``D``, same-side ``W`` and pairing ``Wt`` blocks for one ``k``.

    Rows are ordered ``I_k^+`` first and ``I_k^-`` second, with the antipodal
    partner of row ``i`` at row ``i + dim/2``.
    """

    k: Momentum
    alphas: tuple
    D: np.ndarray
    W: np.ndarray
    Wt: np.ndarray
    u: np.ndarray
    v: np.ndarray
    g: float
    M: int

    @property
    def dim(self) -> int:
        return len(self.alphas)

    @property
    def half(self) -> int:
        return self.dim // 2

    @property
    def norm_k(self) -> float:
        return math.sqrt(sum(c * c for c in self.k))

    @property
    def A(self) -> np.ndarray:
        """Number-conserving coefficient matrix ``D + W``."""
        return self.D + self.W

    @property
    def B(self) -> np.ndarray:
        """Pairing coefficient matrix ``Wt``."""
        return self.Wt


def assemble_mode_matrices(sys: FermiSystem, pd: PatchDecomposition, mi: ModeIndex, V: PotentialSpec,
                           k=None) -> ModeMatrices:
    k = mi.k if k is None else tuple(int(c) for c in k)
    if k != mi.k:
        raise StructuralError(f"index data is for k={mi.k}, not {k}")
    if mi.dim == 0:
        raise EmptyModeError(f"I_k is empty for k={k}")
    kvec = np.asarray(k, dtype=np.float64)
    knorm = float(np.linalg.norm(kvec))
    omegas = pd.centers[list(mi.alphas)]
    dvals = np.abs(omegas @ (kvec / knorm))
    n = mi.n
    h = mi.dim // 2

    coupling = V(k) / (2.0 * sys.hbar * sys.kappa * sys.N * knorm)
    outer = coupling * np.outer(n, n)
    same = np.zeros((mi.dim, mi.dim), dtype=bool)
    same[:h, :h] = True
    same[h:, h:] = True
    W = np.where(same, outer, 0.0)
    Wt = np.where(same, 0.0, outer)
    return ModeMatrices(
        k=k,
        alphas=mi.alphas,
        D=np.diag(dvals),
        W=W,
        Wt=Wt,
        u=np.sqrt(dvals),
        v=sys.hbar / (sys.kappa * math.sqrt(knorm)) * n,
        g=0.5 * sys.kappa * V(k),
        M=pd.M,
    )


def hs_norm_check(mm: ModeMatrices) -> dict:
    """Frobenius norms of ``D``, ``W`` and ``Wt``; ``||D||_HS <= sqrt(M)`` is enforced."""
    norms = {
        "D": float(np.linalg.norm(mm.D)),
        "W": float(np.linalg.norm(mm.W)),
        "Wt": float(np.linalg.norm(mm.Wt)),
    }
    if norms["D"] > math.sqrt(mm.M) * (1 + 1e-15):
        raise StructuralError(f"||D||_HS = {norms['D']} exceeds sqrt(M) = {math.sqrt(mm.M)}")
    return norms


@dataclass(frozen=True)
class BlockComponents:
    d: np.ndarray  # diagonal entries of the half-size kinetic block
    b: np.ndarray
    v_half: np.ndarray


def block_components(mm: ModeMatrices, tol: float = 1e-14) -> BlockComponents:
    """Split ``D, W, Wt`` into the half-size blocks ``d`` and ``b``.

    In the antipodal ordering ``D = diag(d, d)``, ``W = diag(b, b)`` and
    ``Wt = [[0, b], [b, 0]]``; anything else is a structural error.
    """
    if mm.dim % 2:
        raise StructuralError(f"odd mode dimension {mm.dim}")
    h = mm.half
    d = np.diag(mm.D)[:h].copy()
    b = mm.W[:h, :h].copy()
    Z = np.zeros((h, h))
    D_re = np.block([[np.diag(d), Z], [Z, np.diag(d)]])
    W_re = np.block([[b, Z], [Z, b]])
    Wt_re = np.block([[Z, b], [b, Z]])
    scale = max(1.0, float(np.abs(mm.D).max()), float(np.abs(mm.W).max(initial=0.0)))
    for name, got, want in (("D", D_re, mm.D), ("W", W_re, mm.W), ("Wt", Wt_re, mm.Wt)):
        if np.abs(got - want).max(initial=0.0) > tol * scale:
            raise StructuralError(f"{name} is not in antipodal block form for k={mm.k}")
    return BlockComponents(d=d, b=b, v_half=mm.v[:h].copy())


def write_matrix(path, mat: np.ndarray, k) -> None:
    """Dump a square matrix as plain text with a ``# k=..., dim=...`` header."""
    mat = np.asarray(mat)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# k={tuple(int(c) for c in k)}, dim={mat.shape[0]}\n")
        for row in mat:
            fh.write(" ".join(f"{x:.17g}" for x in row) + "\n")


def read_matrix(path) -> tuple:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline()
    k_txt = header.split("k=")[1].split(")")[0] + ")"
    k = tuple(int(c) for c in k_txt.strip("() ").split(","))
    mat = np.loadtxt(path, comments="#", ndmin=2)
    return k, mat
