"""Patch decomposition of the Fermi surface shell.

The northern hemisphere is cut into a polar cap and latitude rings, each ring
split in longitude; the southern patches are the point reflections of the
northern ones, so that patch ``alpha + M/2`` is ``-B_alpha``. Lattice points
closer than a corridor half-angle to any patch boundary belong to no patch.

Patch labels are 0-based here: northern patches are ``0 .. M/2 - 1`` and the
antipode of ``alpha`` is ``(alpha + M/2) mod M``.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Sequence

import numpy as np

from .errors import ConfigError, ConstructionError
from .lattice import (
    FermiSystem,
    HalfSpaceModes,
    Momentum,
    PotentialSpec,
    dispersion,
    norm2,
    shell_points,
    shell_sets,
)

log = logging.getLogger(__name__)

DEFAULT_DELTA = 2.0 / 45.0


def auto_patch_count(N: int, delta: float = DEFAULT_DELTA) -> int:
    """``N^(4 delta)`` rounded to the nearest even integer (at least 2)."""
    return max(2, 2 * int(round(N ** (4.0 * delta) / 2.0)))


@dataclass(frozen=True)
class Band:
    """One latitude band of the northern hemisphere, ``theta_lo <= theta < theta_hi``."""

    theta_lo: float
    theta_hi: float
    n_lon: int
    first: int  # label of the first patch in this band

    @property
    def patch_area(self) -> float:
        return 2.0 * math.pi * (math.cos(self.theta_lo) - math.cos(self.theta_hi)) / self.n_lon


@dataclass(frozen=True)
class Patch:
    alpha: int
    omega_hat: np.ndarray
    members: np.ndarray = field(repr=False)
    solid_angle: float = 0.0


@dataclass(frozen=True)
class PatchDecomposition:
    M: int
    delta: float
    patches: List[Patch]
    corridor_width: float
    corridor_angle: float
    bands: List[Band]
    k_F: float
    R_V: float

    @property
    def half(self) -> int:
        return self.M // 2

    @property
    def centers(self) -> np.ndarray:
        return np.array([p.omega_hat for p in self.patches])

    def partner(self, alpha: int) -> int:
        return (alpha + self.half) % self.M

    def classify(self, points) -> np.ndarray:
        """Patch label of each lattice point, or -1 outside every patch."""
        pts = np.asarray(points, dtype=np.int64).reshape(-1, 3)
        r = np.sqrt(norm2(pts).astype(np.float64))
        in_shell = np.abs(r - self.k_F) <= self.R_V + 1e-12
        return np.where(in_shell, _classify_directions(self, pts.astype(np.float64)), -1)

    def members_of(self, alpha: int) -> np.ndarray:
        return self.patches[alpha].members


def _northern_layout(M: int) -> List[Band]:
    half = M // 2
    target = 4.0 * math.pi / M
    if half == 1:
        return [Band(0.0, math.pi / 2, 1, 0)]
    theta_cap = math.acos(1.0 - 2.0 / M)  # cap area equals 4 pi / M
    best = None
    guess = math.sqrt(half)
    for n_rings in range(1, half):
        edges = np.linspace(theta_cap, math.pi / 2, n_rings + 1)
        areas = 2 * math.pi * (np.cos(edges[:-1]) - np.cos(edges[1:]))
        counts = _apportion(areas, half - 1)
        if counts is None:
            continue
        area_dev = float(np.max(np.abs(np.log(areas / counts / target))))
        if area_dev > math.log(2.0):
            continue
        height = np.diff(edges)
        width = 2 * math.pi * np.sin(0.5 * (edges[:-1] + edges[1:])) / counts
        aspect = float(np.max(np.abs(np.log(height / width))))
        score = (round(aspect, 9), abs(n_rings + 1 - guess))
        if best is None or score < best[0]:
            best = (score, edges, counts)
    if best is None:
        raise ConstructionError(f"no latitude layout realises M={M} patches within a factor 2 of equal area")
    _, edges, counts = best
    bands = [Band(0.0, theta_cap, 1, 0)]
    first = 1
    for j, n in enumerate(counts):
        bands.append(Band(float(edges[j]), float(edges[j + 1]), int(n), first))
        first += int(n)
    return bands


def _apportion(weights, total: int):
    """Largest-remainder split of ``total`` proportional to ``weights``, each >= 1."""
    if total < len(weights):
        return None
    raw = np.asarray(weights) / np.sum(weights) * total
    counts = np.maximum(np.floor(raw).astype(int), 1)
    while counts.sum() > total:
        idx = np.argmax(np.where(counts > 1, counts - raw, -np.inf))
        counts[idx] -= 1
    while counts.sum() < total:
        counts[np.argmax(raw - counts)] += 1
    return counts


def _band_centers(band: Band) -> np.ndarray:
    if band.theta_lo == 0.0:
        return np.array([[0.0, 0.0, 1.0]])
    cos_mid = 0.5 * (math.cos(band.theta_lo) + math.cos(band.theta_hi))
    sin_mid = math.sqrt(1.0 - cos_mid**2)
    phis = (np.arange(band.n_lon) + 0.5) * 2 * math.pi / band.n_lon
    return np.stack([sin_mid * np.cos(phis), sin_mid * np.sin(phis), np.full_like(phis, cos_mid)], axis=1)


def _classify_directions(pd: PatchDecomposition, pts: np.ndarray) -> np.ndarray:
    out = np.full(len(pts), -1, dtype=np.int64)
    south = pts[:, 2] < 0
    north_pts = np.where(south[:, None], -pts, pts)
    r = np.linalg.norm(north_pts, axis=1)
    safe = r > 0
    cos_t = np.divide(north_pts[:, 2], r, out=np.zeros_like(r), where=safe)
    theta = np.arccos(np.clip(cos_t, -1.0, 1.0))
    phi = np.mod(np.arctan2(north_pts[:, 1], north_pts[:, 0]), 2 * math.pi)
    ca = pd.corridor_angle
    ok = safe & (math.pi / 2 - theta >= ca)
    for band in pd.bands:
        inb = ok & (theta >= band.theta_lo) & (theta < band.theta_hi)
        if band.theta_lo > 0:
            inb &= theta - band.theta_lo >= ca
        if band.theta_hi < math.pi / 2:
            inb &= band.theta_hi - theta >= ca
        if not inb.any():
            continue
        width = 2 * math.pi / band.n_lon
        slot = np.minimum((phi / width).astype(np.int64), band.n_lon - 1)
        if band.n_lon > 1:
            # geodesic distance to the nearest bounding meridian arc
            dphi = phi - slot * width
            dphi = np.minimum(dphi, width - dphi)
            dist = np.arcsin(np.clip(np.sin(theta) * np.sin(np.minimum(dphi, math.pi / 2)), 0, 1))
            inb &= dist >= ca
        out[inb] = band.first + slot[inb]
    out[(out >= 0) & south] += pd.M // 2
    return out


def build_patch_decomposition(
    sys: FermiSystem, V: PotentialSpec, M: int, delta: float = DEFAULT_DELTA, R_V: float | None = None
) -> PatchDecomposition:
    """Cut the shell ``| |p| - k_F | <= R_V`` into ``M`` patches with corridors.

    The corridor width is ``2 R_V + 1`` lattice units measured along the Fermi
    sphere, i.e. a point is discarded when its geodesic angular distance to a
    patch boundary is below ``(R_V + 1/2) / k_F``. ``R_V`` defaults to the
    diameter of the potential's support.
    """
    if not isinstance(M, (int, np.integer)) or M < 2 or M % 2:
        raise ConstructionError(f"M must be an even integer >= 2, got {M!r}")
    if not 0 < delta < 1 / 6:
        raise ConfigError(f"delta must lie in (0, 1/6), got {delta}")
    R_V = V.R_V if R_V is None else float(R_V)
    if R_V <= 0:
        raise ConstructionError("patch construction needs R_V = diam supp V̂ > 0")
    lo, hi = sys.N ** (2 * delta), sys.N ** (2 / 3 - 2 * delta)
    if not lo < M < hi:
        log.warning("M=%d outside the band N^(2δ)=%.3g < M < N^(2/3-2δ)=%.3g", M, lo, hi)

    bands = _northern_layout(int(M))
    corridor_width = 2 * R_V + 1.0
    corridor_angle = 0.5 * corridor_width / sys.k_F
    north_centers = np.concatenate([_band_centers(b) for b in bands])
    centers = np.concatenate([north_centers, -north_centers])
    areas = [b.patch_area for b in bands for _ in range(b.n_lon)] * 2

    proto = PatchDecomposition(int(M), float(delta), [], corridor_width, corridor_angle, bands, sys.k_F, R_V)
    shell = shell_points(sys, R_V)
    labels = proto.classify(shell)
    patches = []
    for alpha in range(M):
        mem = shell[labels == alpha]
        patches.append(Patch(alpha, centers[alpha], mem, areas[alpha]))
    pd = PatchDecomposition(int(M), float(delta), patches, corridor_width, corridor_angle, bands, sys.k_F, R_V)
    target = 4 * math.pi / M
    for p in patches:
        if not 0.5 * target <= p.solid_angle <= 2 * target:
            raise ConstructionError(f"patch {p.alpha} solid angle {p.solid_angle:.4g} not within 2x of {target:.4g}")
    return pd


@dataclass(frozen=True)
class ModeIndex:
    """Index data of one momentum transfer ``k``.

    ``plus[i]`` and ``minus[i]`` are antipodal partners, and ``counts[i]`` is the
    number of particle-hole pairs in patch ``plus[i]`` (equal to the count in
    ``minus[i]`` for ``-k``). ``n = sqrt(counts)`` is the normalisation.
    """

    k: Momentum
    plus: tuple
    minus: tuple
    counts: np.ndarray
    dropped: tuple = ()

    @property
    def alphas(self) -> tuple:
        return self.plus + self.minus

    @property
    def n(self) -> np.ndarray:
        c = np.sqrt(self.counts.astype(np.float64))
        return np.concatenate([c, c])

    @property
    def dim(self) -> int:
        return 2 * len(self.plus)

    def side(self, alpha: int) -> int:
        return 1 if alpha in self.plus else -1


IndexSets = Dict[Momentum, ModeIndex]


def pair_mask(pd: PatchDecomposition, ring: np.ndarray, k) -> tuple:
    """Patch labels of ``p`` and ``p - k`` for each ring point."""
    k = np.asarray(k, dtype=np.int64)
    return pd.classify(ring), pd.classify(ring - k)


def patch_pair_counts(pd: PatchDecomposition, sys: FermiSystem, k) -> np.ndarray:
    """``|{p in B_F^c ∩ B_a : p - k in B_F ∩ B_a}|`` for every patch ``a``."""
    ring = shell_sets(sys, k).ring
    lp, lh = pair_mask(pd, ring, k)
    same = lp[(lp >= 0) & (lp == lh)]
    return np.bincount(same, minlength=pd.M)


def cutoff_sides(pd: PatchDecomposition, sys: FermiSystem, k) -> tuple:
    kdot = pd.centers @ np.asarray(k, dtype=np.float64)
    cut = sys.N ** (-pd.delta)
    plus = tuple(int(a) for a in np.flatnonzero(kdot >= cut))
    minus = tuple(int(a) for a in np.flatnonzero(kdot <= -cut))
    return plus, minus


def index_sets(pd: PatchDecomposition, sys: FermiSystem, modes: HalfSpaceModes) -> IndexSets:
    out: IndexSets = {}
    for k in modes:
        plus, minus = cutoff_sides(pd, sys, k)
        if len(plus) != len(minus) or sorted(pd.partner(a) for a in plus) != list(minus):
            raise ConstructionError(f"index sets for k={k} are not antipodally paired")
        fwd = patch_pair_counts(pd, sys, k)
        back = patch_pair_counts(pd, sys, tuple(-c for c in k))
        keep, dropped = [], []
        for a in plus:
            b = pd.partner(a)
            if fwd[a] != back[b]:
                raise ConstructionError(f"pair counts break reflection symmetry at k={k}, alpha={a}")
            (keep if fwd[a] > 0 else dropped).append(a)
        if dropped:
            log.warning("k=%s: dropping patches %s with no particle-hole pairs", k, dropped)
        out[k] = ModeIndex(
            k=k,
            plus=tuple(keep),
            minus=tuple(pd.partner(a) for a in keep),
            counts=np.array([fwd[a] for a in keep], dtype=np.int64),
            dropped=tuple(dropped),
        )
    return out


def counting_law_check(pd: PatchDecomposition, sys: FermiSystem, k, mi: ModeIndex | None = None) -> np.ndarray:
    """Relative deviation ``|n^2 M / (4 pi k_F^2 |k·ω|) - 1|`` for each ``alpha`` in ``I_k``."""
    if mi is None:
        mi = index_sets(pd, sys, HalfSpaceModes((tuple(k),)))[tuple(k)]
    kdot = np.abs(pd.centers[list(mi.alphas)] @ np.asarray(k, dtype=np.float64))
    n2 = np.concatenate([mi.counts, mi.counts]).astype(np.float64)
    return np.abs(n2 * pd.M / (4 * math.pi * sys.k_F**2 * kdot) - 1.0)


@dataclass(frozen=True)
class CorridorSets:
    U: np.ndarray
    Y: np.ndarray
    U_minus_Y: np.ndarray
    captured: np.ndarray


def corridor_ribbon_sets(pd: PatchDecomposition, sys: FermiSystem, k, delta: float | None = None,
                         mi: ModeIndex | None = None) -> CorridorSets:
    """Ring points outside every patch pair (``U``) and in the equatorial ribbon (``Y``)."""
    delta = pd.delta if delta is None else delta
    k = tuple(int(c) for c in k)
    if mi is None:
        mi = index_sets(pd, sys, HalfSpaceModes((k,)))[k]
    ring = shell_sets(sys, k).ring
    lp, lh = pair_mask(pd, ring, k)
    # only I_k^+ patches: for alpha in I_k^- the operator c_alpha(k) is built
    # from the pairs of -k, so those pairs are not part of b(k)
    in_ik = np.isin(lp, np.array(mi.plus, dtype=np.int64))
    captured = (lp >= 0) & (lp == lh) & in_ik
    energy = dispersion(sys, ring) + dispersion(sys, ring - np.asarray(k))
    ribbon = np.atleast_1d(energy) <= 4 * sys.N ** (-1 / 3 - delta)
    U = ~captured
    return CorridorSets(U=ring[U], Y=ring[ribbon], U_minus_Y=ring[U & ~ribbon], captured=ring[captured])


def write_patches_csv(path, pd: PatchDecomposition) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("alpha,omega_x,omega_y,omega_z,n_members\n")
        for p in pd.patches:
            w = p.omega_hat
            fh.write(f"{p.alpha},{w[0]:.17g},{w[1]:.17g},{w[2]:.17g},{len(p.members)}\n")


def write_index_csv(path, mi: ModeIndex) -> None:
    n = np.sqrt(mi.counts.astype(np.float64))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("alpha,side,n_alpha\n")
        for side, labels in (("+", mi.plus), ("-", mi.minus)):
            for a, val in zip(labels, n):
                fh.write(f"{a},{side},{val:.17g}\n")


def validate_disjoint(pd: PatchDecomposition) -> None:
    seen: dict = {}
    for p in pd.patches:
        for m in map(tuple, p.members):
            if m in seen:
                raise ConstructionError(f"point {m} in patches {seen[m]} and {p.alpha}")
            seen[m] = p.alpha
