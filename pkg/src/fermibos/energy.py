"""RPA correlation energy: discrete trace formula and closed integral formula.

The integral formula needs, for each ``k`` in the support of ``V̂``,

    (1/pi) int_0^inf log(1 + c f(lam)) dlam - c/4,   f(lam) = 1 - lam arctan(1/lam),

with ``c = 2 pi kappa V̂(k)``. Writing ``lam = cot(eps)`` maps the half line onto
``(0, pi/2]`` with ``f = 1 - eps cot(eps)`` and ``dlam = deps / sin^2(eps)``; the
integrand is smooth and tends to ``c/3`` at ``eps = 0``. Since
``int_0^inf f = pi/4`` the ``-c/4`` subtraction is the first-order term, and we
integrate ``log1p(c f) - c f`` directly to avoid the cancellation.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, List, Mapping

import numpy as np

from .bogoliubov import BogoliubovData
from .errors import QuadratureError
from .lattice import FermiSystem, Momentum, PotentialSpec, semiclassical_params
from .patches import DEFAULT_DELTA

log = logging.getLogger(__name__)

QUAD_TOL = 1e-13
_NODES_LO = np.polynomial.legendre.leggauss(20)
_NODES_HI = np.polynomial.legendre.leggauss(40)


def _gl(f, a, b, rule):
    x, w = rule
    half = 0.5 * (b - a)
    return half * float(np.dot(w, f(half * x + 0.5 * (a + b))))


def adaptive_gauss_legendre(f: Callable[[np.ndarray], np.ndarray], a: float, b: float,
                            tol: float = QUAD_TOL, max_depth: int = 30) -> tuple:
    """Integrate a vectorised ``f`` over ``[a, b]`` by bisecting Gauss-Legendre panels.

    A panel is accepted once the 20- and 40-point rules agree to its share of
    ``tol`` (proportional to its width). Returns ``(value, error_estimate)``.

    Raises
    ------
    QuadratureError
        If a panel still fails after ``max_depth`` bisections or the estimate
        is not finite.
    """
    pieces, errs = [], []
    stack = [(float(a), float(b), 0)]
    width = float(b - a)
    while stack:
        lo, hi, depth = stack.pop()
        coarse = _gl(f, lo, hi, _NODES_LO)
        fine = _gl(f, lo, hi, _NODES_HI)
        err = abs(fine - coarse)
        if not math.isfinite(fine):
            raise QuadratureError(f"non-finite integrand on [{lo}, {hi}]")
        if err <= tol * (hi - lo) / width:
            pieces.append(fine)
            errs.append(err)
        elif depth >= max_depth:
            raise QuadratureError(f"no convergence on [{lo:.3e}, {hi:.3e}] (error estimate {err:.3e})")
        else:
            mid = 0.5 * (lo + hi)
            stack.append((mid, hi, depth + 1))
            stack.append((lo, mid, depth + 1))
    return math.fsum(pieces), math.fsum(errs)


def _one_minus_x_cot_x(eps: np.ndarray) -> np.ndarray:
    """``1 - eps cot(eps)`` on ``(0, pi/2]``, by series below 0.1."""
    eps = np.asarray(eps, dtype=np.float64)
    out = np.empty_like(eps)
    small = eps < 0.1
    e2 = eps[small] ** 2
    # 1 - x cot x = sum 2^(2n) |B_2n| x^(2n) / (2n)!
    out[small] = e2 * (1 / 3 + e2 * (1 / 45 + e2 * (2 / 945 + e2 * (1 / 4725 + e2 * (2 / 93555)))))
    big = eps[~small]
    out[~small] = 1.0 - big * np.cos(big) / np.sin(big)
    return out


def _log1p_minus_x(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    out = np.log1p(x) - x
    small = np.abs(x) < 1e-3
    xs = x[small]
    out[small] = xs * xs * (-1 / 2 + xs * (1 / 3 + xs * (-1 / 4 + xs * (1 / 5 - xs / 6))))
    return out


def first_order_integral(tol: float = QUAD_TOL) -> float:
    """``int_0^inf (1 - lam arctan(1/lam)) dlam``, which equals ``pi/4``."""
    val, _ = adaptive_gauss_legendre(
        lambda e: _one_minus_x_cot_x(e) / np.sin(e) ** 2, 0.0, 0.5 * math.pi, tol)
    return val


def rpa_integral_term(kappa: float, vhat: float, tol: float = QUAD_TOL) -> float:
    """``(1/pi) int log(1 + 2 pi kappa V̂ f) dlam - (pi/2) kappa V̂`` for one ``k``."""
    if vhat == 0.0:
        return 0.0
    c = 2.0 * math.pi * kappa * vhat
    val, err = adaptive_gauss_legendre(
        lambda e: _log1p_minus_x(c * _one_minus_x_cot_x(e)) / np.sin(e) ** 2, 0.0, 0.5 * math.pi, tol)
    if err > 1e-10:
        raise QuadratureError(f"error estimate {err:.3e} above 1e-10 for V̂={vhat}")
    return val / math.pi


def rpa_integral_contributions(sys: FermiSystem, V: PotentialSpec) -> Dict[Momentum, float]:
    out = {}
    for k, vhat in V.values.items():
        if k == (0, 0, 0):
            continue
        knorm = math.sqrt(sum(c * c for c in k))
        out[k] = sys.hbar * sys.kappa * knorm * rpa_integral_term(sys.kappa, vhat)
    return out


def rpa_integral_energy(sys: FermiSystem, V: PotentialSpec) -> float:
    """Closed-form RPA energy, summed over the whole support of ``V̂`` (both ``k`` and ``-k``)."""
    return math.fsum(rpa_integral_contributions(sys, V).values())


def rpa_trace_contributions(bds: Mapping[Momentum, BogoliubovData], sys: FermiSystem) -> Dict[Momentum, float]:
    # tr(E - D - W) = 2 * ground_constant
    return {k: sys.hbar * sys.kappa * bd.norm_k * 2.0 * bd.ground_constant for k, bd in bds.items()}


def rpa_trace_energy(bds: Mapping[Momentum, BogoliubovData], sys: FermiSystem) -> float:
    """``sum_k hbar kappa |k| tr(E(k) - D(k) - W(k))`` over the northern modes."""
    return math.fsum(rpa_trace_contributions(bds, sys).values())


@dataclass
class EnergyReport:
    E_trace: float
    E_integral: float
    per_k_trace: Dict[Momentum, float] = field(default_factory=dict)
    per_k_integral: Dict[Momentum, float] = field(default_factory=dict)
    N: int = 0
    M: int = 0
    delta: float = DEFAULT_DELTA

    @property
    def diff(self) -> float:
        return abs(self.E_trace - self.E_integral)


def energy_report(bz) -> EnergyReport:
    """Both energies for a :class:`fermibos.pipeline.Bosonized` result."""
    tr = rpa_trace_contributions(bz.bogoliubov(), bz.sys)
    it = rpa_integral_contributions(bz.sys, bz.V)
    return EnergyReport(math.fsum(tr.values()), math.fsum(it.values()), tr, it, bz.sys.N, bz.M, bz.delta)


def bound_rhs(hbar: float, N: int, M: int, delta: float) -> float:
    """Three-term rate ``hbar (N^-d/2 + M^-1/4 N^d/2 + M^1/4 N^(-1/6 + d/2))`` without its constant."""
    return hbar * (N ** (-delta / 2) + M ** -0.25 * N ** (delta / 2) + M**0.25 * N ** (-1 / 6 + delta / 2))


@dataclass(frozen=True)
class SweepRow:
    kF: float
    N: int
    M: int
    delta: float
    E_trace: float
    E_integral: float
    diff: float
    diff_over_hbar: float
    bound_rhs: float


SWEEP_HEADER = "kF,N,M,delta,E_trace,E_integral,diff,diff_over_hbar,bound_rhs"


def convergence_sweep(kF_list: Iterable[float], V: PotentialSpec, M="auto", delta: float = DEFAULT_DELTA,
                      R_V=None, threads: int = 1) -> List[SweepRow]:
    from .pipeline import bosonize

    rows = []
    for kF in kF_list:
        sys = semiclassical_params(kF)
        bz = bosonize(sys, V, M, delta, R_V=R_V, threads=threads)
        rep = energy_report(bz)
        rows.append(SweepRow(float(kF), sys.N, bz.M, delta, rep.E_trace, rep.E_integral, rep.diff,
                             rep.diff / sys.hbar, bound_rhs(sys.hbar, sys.N, bz.M, delta)))
        log.info("kF=%g N=%d M=%d diff/hbar=%.6g", kF, sys.N, bz.M, rows[-1].diff_over_hbar)
    return rows


def count_inversions(values) -> int:
    """Number of consecutive increases in a sequence expected to decrease."""
    return sum(1 for a, b in zip(values, values[1:]) if b > a)


def sweep_trend(rows: List[SweepRow]) -> dict:
    d = [r.diff_over_hbar for r in rows]
    return {
        "inversions": count_inversions(d),
        "improvement": d[0] / d[-1] if d and d[-1] > 0 else math.inf,
    }


def write_sweep_csv(path, rows: List[SweepRow]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(SWEEP_HEADER + "\n")
        for r in rows:
            fh.write(
                f"{r.kF:.17g},{r.N},{r.M},{r.delta:.17g},{r.E_trace:.17g},{r.E_integral:.17g},"
                f"{r.diff:.17g},{r.diff_over_hbar:.17g},{r.bound_rhs:.17g}\n"
            )
