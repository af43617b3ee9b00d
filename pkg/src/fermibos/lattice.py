"""Fermi ball geometry on the integer lattice.

Momenta are integer 3-vectors. Collections of momenta are ``(n, 3)`` int64
arrays kept in lexicographic order, which is also the canonical fermionic
mode ordering used by :mod:`fermibos.fockoracle`.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Mapping, Tuple

import numpy as np

from .errors import ConfigError, DegeneracyError, LatticeOverflowError

log = logging.getLogger(__name__)

Momentum = Tuple[int, int, int]

KAPPA = (3.0 / (4.0 * math.pi)) ** (1.0 / 3.0)

# Largest ball we are willing to materialise as an array.
MAX_BALL_POINTS = 400_000_000
_INT_TOL = 1e-9
DEGENERACY_TOL = 1e-14


def radius_threshold(radius: float) -> int:
    """Integer bound ``t`` such that ``|p| <= radius`` iff ``|p|^2 <= t``.

    ``|p|^2`` is an integer, so the comparison is exact once ``radius^2`` is
    rounded: to the nearest integer when it lies within 1e-9 of one (so that
    ``radius = sqrt(2)`` includes the points with ``|p|^2 = 2``), down otherwise.
    """
    r2 = float(radius) ** 2
    nearest = round(r2)
    if abs(r2 - nearest) <= _INT_TOL:
        return int(nearest)
    return int(math.floor(r2))


def norm2(points) -> np.ndarray:
    pts = np.asarray(points, dtype=np.int64)
    return np.einsum("...i,...i->...", pts, pts)


def lattice_ball(radius: float) -> np.ndarray:
    """All lattice points with ``|p| <= radius``, lexicographically sorted."""
    if not radius > 0:
        raise ConfigError(f"radius must be positive, got {radius!r}")
    estimate = 4.0 / 3.0 * math.pi * (radius + 2.0) ** 3
    if estimate > MAX_BALL_POINTS or estimate > np.iinfo(np.int64).max:
        raise LatticeOverflowError(
            f"ball of radius {radius} holds ~{estimate:.3g} points, above the limit {MAX_BALL_POINTS}"
        )
    t = radius_threshold(radius)
    r = math.isqrt(t)
    xs = np.arange(-r, r + 1, dtype=np.int64)
    x, y = np.meshgrid(xs, xs, indexing="ij")
    x, y = x.ravel(), y.ravel()
    rest = t - x * x - y * y
    keep = rest >= 0
    x, y, rest = x[keep], y[keep], rest[keep]
    zmax = np.floor(np.sqrt(rest.astype(np.float64))).astype(np.int64)
    # guard the float sqrt against off-by-one at perfect squares
    zmax[(zmax + 1) ** 2 <= rest] += 1
    zmax[zmax**2 > rest] -= 1
    counts = 2 * zmax + 1
    total = int(counts.sum())
    xr = np.repeat(x, counts)
    yr = np.repeat(y, counts)
    starts = np.repeat(np.cumsum(counts) - counts, counts)
    z = np.arange(total, dtype=np.int64) - starts - np.repeat(zmax, counts)
    return np.stack([xr, yr, z], axis=1)


def enumerate_fermi_ball(k_F: float):
    """Return ``(points, N)`` for the Fermi ball ``{p : |p| <= k_F}``."""
    pts = lattice_ball(k_F)
    return pts, int(len(pts))


@dataclass(frozen=True)
class FermiSystem:
    """Semiclassical parameters for a filled Fermi ball."""

    k_F: float
    N: int
    kappa: float
    hbar: float
    ball: np.ndarray = field(repr=False, compare=False)

    @property
    def threshold(self) -> int:
        return radius_threshold(self.k_F)

    def inside(self, points) -> np.ndarray:
        """Boolean mask of membership in the Fermi ball."""
        return norm2(points) <= self.threshold


def semiclassical_params(k_F: float) -> FermiSystem:
    ball, N = enumerate_fermi_ball(k_F)
    return FermiSystem(k_F=float(k_F), N=N, kappa=KAPPA, hbar=KAPPA / float(k_F), ball=ball)


def dispersion(sys: FermiSystem, p) -> np.ndarray | float:
    """Kinetic energy relative to the Fermi level, ``|hbar^2 |p|^2 - kappa^2|``."""
    val = np.abs(sys.hbar**2 * norm2(p) - sys.kappa**2)
    return float(val) if np.ndim(val) == 0 else val


@dataclass(frozen=True)
class ShellSets:
    k: Momentum
    ring: np.ndarray
    holes: np.ndarray
    overlap: int


def shell_sets(sys: FermiSystem, k) -> ShellSets:
    """Particle ring ``B_F^c ∩ (B_F + k)`` and the matching hole set.

    ``holes`` is ``ring - k`` (points of the ball leaving it under ``+k``) and
    ``overlap`` is ``|B_F ∩ (B_F + k)| = N - |ring|``.
    """
    k = _as_momentum(k)
    if k == (0, 0, 0):
        raise ConfigError("shell_sets requires k != 0")
    shifted = sys.ball + np.asarray(k, dtype=np.int64)
    ring = shifted[~sys.inside(shifted)]
    ring = ring[np.lexsort(ring.T[::-1])]
    holes = ring - np.asarray(k, dtype=np.int64)
    return ShellSets(k=k, ring=ring, holes=holes, overlap=sys.N - len(ring))


def resolvent_sum(sys: FermiSystem, k) -> float:
    """``sum over the ring of 1 / (e(p) + e(p - k))``."""
    sets = shell_sets(sys, k)
    denom = dispersion(sys, sets.ring) + dispersion(sys, sets.holes)
    denom = np.atleast_1d(denom)
    bad = np.flatnonzero(denom < DEGENERACY_TOL)
    if bad.size:
        p = tuple(int(c) for c in sets.ring[bad[0]])
        raise DegeneracyError(f"vanishing denominator e(p)+e(p-k)={denom[bad[0]]:.3e} at p={p}")
    return math.fsum(1.0 / denom)


@dataclass(frozen=True)
class PotentialSpec:
    """Finitely supported, non-negative Fourier coefficients ``V̂(k)``."""

    values: Mapping[Momentum, float]

    def __post_init__(self):
        clean = {}
        for key, val in dict(self.values).items():
            k = _as_momentum(key)
            val = float(val)
            if val < 0 or not math.isfinite(val):
                raise ConfigError(f"V̂{k} = {val} must be finite and non-negative")
            if val != 0.0:
                clean[k] = val
        for k, val in clean.items():
            mk = (-k[0], -k[1], -k[2])
            if clean.get(mk) != val:
                raise ConfigError(f"potential not symmetric: V̂{k}={val} but V̂{mk}={clean.get(mk)}")
        object.__setattr__(self, "values", dict(sorted(clean.items())))

    @classmethod
    def symmetrized(cls, values: Mapping) -> "PotentialSpec":
        """Complete a one-sided table with its reflection ``V̂(-k) := V̂(k)``."""
        full = {}
        for key, val in dict(values).items():
            k = _as_momentum(key)
            mk = (-k[0], -k[1], -k[2])
            if mk in full and full[mk] != float(val):
                raise ConfigError(f"conflicting values for {k} and {mk}")
            full[k] = float(val)
            full.setdefault(mk, float(val))
        return cls(full)

    @classmethod
    def unit_shell(cls, value: float = 1.0) -> "PotentialSpec":
        """``V̂ = value`` on the six nearest neighbours of the origin."""
        ks = [(1, 0, 0), (0, 1, 0), (0, 0, 1)]
        vals = {}
        for k in ks:
            vals[k] = value
            vals[tuple(-c for c in k)] = value
        return cls(vals)

    def __call__(self, k) -> float:
        return self.values.get(_as_momentum(k), 0.0)

    def scaled(self, factor: float) -> "PotentialSpec":
        return PotentialSpec({k: factor * v for k, v in self.values.items()})

    @property
    def support(self) -> list:
        return list(self.values)

    @property
    def R_V(self) -> float:
        """Diameter of the support."""
        pts = np.array(self.support, dtype=np.float64).reshape(-1, 3)
        if len(pts) < 2:
            return 0.0
        diff = pts[:, None, :] - pts[None, :, :]
        return float(np.sqrt((diff**2).sum(-1)).max())


def is_northern(k) -> bool:
    k1, k2, k3 = k
    return k3 > 0 or (k3 == 0 and k2 > 0) or (k3 == 0 and k2 == 0 and k1 > 0)


@dataclass(frozen=True)
class HalfSpaceModes:
    gamma_nor: tuple

    @classmethod
    def from_potential(cls, V: PotentialSpec) -> "HalfSpaceModes":
        return cls(tuple(k for k in V.support if is_northern(k)))

    def __iter__(self):
        return iter(self.gamma_nor)

    def __len__(self):
        return len(self.gamma_nor)


def hartree_fock_energy(sys: FermiSystem, V: PotentialSpec) -> float:
    """Plane-wave (Hartree-Fock) energy of the filled Fermi ball.

    Kinetic part plus direct term ``(N-1) V̂(0)/2`` minus the exchange term
    ``(1/2N) sum_{k != 0} V̂(k) |B_F ∩ (B_F + k)|``.
    """
    kinetic = sys.hbar**2 * math.fsum(norm2(sys.ball).astype(np.float64))
    direct = 0.5 * (sys.N - 1) * V((0, 0, 0))
    exchange = math.fsum(
        val * shell_sets(sys, k).overlap for k, val in V.values.items() if k != (0, 0, 0)
    )
    return kinetic + direct - exchange / (2.0 * sys.N)


def shell_points(sys: FermiSystem, width: float) -> np.ndarray:
    """Lattice points with ``k_F - width <= |p| <= k_F + width``."""
    outer = lattice_ball(sys.k_F + width)
    r = np.sqrt(norm2(outer).astype(np.float64))
    return outer[r >= sys.k_F - width - 1e-12]


def write_points_csv(path, points) -> None:
    pts = np.asarray(points, dtype=np.int64).reshape(-1, 3)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("px,py,pz\n")
        for p in pts:
            fh.write(f"{p[0]},{p[1]},{p[2]}\n")


def _as_momentum(k) -> Momentum:
    t = tuple(int(c) for c in k)
    if len(t) != 3:
        raise ConfigError(f"momentum must have 3 components, got {k!r}")
    return t  # type: ignore[return-value]
