"""Quasifree dynamics of collective excitations and bosonic normalisation constants.

A one-boson wavefunction is a block vector with one complex block of length
``|I_k|`` per northern mode ``k``. The effective Hamiltonian acts block-wise as
``2 hbar kappa |k| curlyK(k)``, so ``exp(-i H_B t / hbar)`` is
``exp(-2 i kappa |k| t curlyK(k))`` on each block.
"""
from __future__ import annotations

import cmath
import itertools
import math
from dataclasses import dataclass
from typing import Dict, List, Mapping

import numpy as np

from .bogoliubov import BogoliubovData, SymEig
from .errors import FeasibilityError, StructuralError
from .lattice import KAPPA, FermiSystem, Momentum

MAX_FAMILY = 12
DEGENERACY_GAP = 1e-10


@dataclass(frozen=True)
class ExcitationWavefunction:
    blocks: Dict[Momentum, np.ndarray]

    def __post_init__(self):
        clean = {tuple(int(c) for c in k): np.asarray(v, dtype=np.complex128).ravel() for k, v in self.blocks.items()}
        object.__setattr__(self, "blocks", dict(sorted(clean.items())))

    def norm(self) -> float:
        return math.sqrt(math.fsum(float(np.vdot(v, v).real) for v in self.blocks.values()))

    def inner(self, other: "ExcitationWavefunction") -> complex:
        """``<self, other>``, antilinear in ``self``."""
        total = 0j
        for k, v in self.blocks.items():
            w = other.blocks.get(k)
            if w is not None:
                total += complex(np.vdot(v, w))
        return total

    def normalized(self) -> "ExcitationWavefunction":
        n = self.norm()
        if n == 0:
            raise StructuralError("cannot normalise the zero wavefunction")
        return ExcitationWavefunction({k: v / n for k, v in self.blocks.items()})

    @classmethod
    def random(cls, dims: Mapping[Momentum, int], rng: np.random.Generator) -> "ExcitationWavefunction":
        blocks = {k: rng.standard_normal(d) + 1j * rng.standard_normal(d) for k, d in dims.items()}
        return cls(blocks).normalized()


@dataclass(frozen=True)
class ExcitationFamily:
    phis: tuple

    def __post_init__(self):
        object.__setattr__(self, "phis", tuple(self.phis))
        if not 1 <= len(self.phis) <= MAX_FAMILY:
            raise FeasibilityError(f"family size {len(self.phis)} outside 1..{MAX_FAMILY}")

    @property
    def m(self) -> int:
        return len(self.phis)


@dataclass(frozen=True)
class GramData:
    G: np.ndarray
    Z_B_squared: float


def _propagator(bd: BogoliubovData, t: float) -> np.ndarray:
    eig = SymEig.of(bd.curlyK)
    phase = np.exp(-2j * KAPPA * bd.norm_k * t * eig.values)
    return (eig.vectors * phase) @ eig.vectors.T


def evolve(phi: ExcitationWavefunction, t: float, bds: Mapping[Momentum, BogoliubovData],
           sys: FermiSystem | None = None) -> ExcitationWavefunction:
    """Apply ``exp(-i H_B t / hbar)``; ``hbar`` cancels, so ``sys`` is optional."""
    out = {}
    for k, v in phi.blocks.items():
        bd = bds.get(k)
        if bd is None:
            raise StructuralError(f"no Bogoliubov data for block k={k}")
        if bd.dim != len(v):
            raise StructuralError(f"block k={k} has length {len(v)}, mode dimension is {bd.dim}")
        if t == 0:
            out[k] = v.copy()
        else:
            out[k] = _propagator(bd, t) @ v
    return ExcitationWavefunction(out)


def energy_expectation(phi: ExcitationWavefunction, bds: Mapping[Momentum, BogoliubovData],
                       sys: FermiSystem) -> float:
    """``<phi, H_B phi>`` with ``H_B = direct sum of 2 hbar kappa |k| curlyK(k)``."""
    terms = []
    for k, v in phi.blocks.items():
        bd = bds[k]
        terms.append(2 * sys.hbar * sys.kappa * bd.norm_k * float(np.vdot(v, bd.curlyK @ v).real))
    return math.fsum(terms)


@dataclass(frozen=True)
class StationaryState:
    phi: ExcitationWavefunction
    energy: float
    degenerate: bool


def stationary_state(bds: Mapping[Momentum, BogoliubovData], k, level: int, sys: FermiSystem) -> StationaryState:
    """Eigenvector ``level`` (ascending) of ``curlyK(k)`` and its energy ``2 hbar kappa |k| lambda``.

    In a degenerate eigenspace the returned vector is one member of the
    orthonormal basis chosen by the eigensolver and ``degenerate`` is set.
    """
    k = tuple(int(c) for c in k)
    bd = bds[k]
    if not 0 <= level < bd.dim:
        raise StructuralError(f"level {level} out of range for dim {bd.dim}")
    eig = SymEig.of(bd.curlyK)
    w = eig.values
    scale = max(1.0, float(np.abs(w).max()))
    degenerate = any(abs(w[level] - w[j]) <= DEGENERACY_GAP * scale for j in range(len(w)) if j != level)
    vec = eig.vectors[:, level].astype(np.complex128)
    energy = 2 * sys.hbar * sys.kappa * bd.norm_k * float(w[level])
    return StationaryState(ExcitationWavefunction({k: vec}), energy, degenerate)


def permanent(A: np.ndarray) -> complex:
    """Permanent of a square matrix.

    Direct expansion over permutations for ``n < 6``, Ryser's formula with a
    Gray-code walk over column subsets otherwise (``O(2^n n)``).
    """
    A = np.asarray(A)
    n = A.shape[0]
    if A.shape != (n, n):
        raise ValueError("permanent needs a square matrix")
    if n == 0:
        return 1.0
    if n < 6:
        return sum(math.prod(A[i, p[i]] for i in range(n)) for p in itertools.permutations(range(n)))
    # Ryser: perm = (-1)^n sum_S (-1)^|S| prod_i sum_{j in S} a_ij
    row_sums = np.zeros(n, dtype=A.dtype if np.iscomplexobj(A) else np.float64)
    total = 0.0
    sign = 1
    size = 0
    for g in range(1, 2**n):
        # the Gray code flips bit j between steps g-1 and g
        j = (g & -g).bit_length() - 1
        if (g ^ (g >> 1)) >> j & 1:
            row_sums = row_sums + A[:, j]
            size += 1
        else:
            row_sums = row_sums - A[:, j]
            size -= 1
        sign = -1 if size % 2 else 1
        total += sign * np.prod(row_sums)
    return (-1) ** n * total


def gram_and_Z(family: ExcitationFamily) -> GramData:
    """Gram matrix ``G_ij = <phi_i, phi_j>`` and ``Z_B^2 = perm(G)``."""
    m = family.m
    G = np.empty((m, m), dtype=np.complex128)
    for i, j in itertools.product(range(m), repeat=2):
        G[i, j] = family.phis[i].inner(family.phis[j])
    z = complex(permanent(G))
    if abs(z.imag) > 1e-10 * max(1.0, abs(z.real)):
        raise StructuralError(f"permanent of a Gram matrix has imaginary part {z.imag:.3e}")
    return GramData(G, z.real)


def evolve_family(family: ExcitationFamily, t: float, bds, sys=None) -> ExcitationFamily:
    return ExcitationFamily(tuple(evolve(p, t, bds, sys) for p in family.phis))


def invariance_of_Z_under_evolution(family: ExcitationFamily, t: float, bds, sys=None) -> float:
    """``|Z_B^2(t) - Z_B^2(0)|``."""
    before = gram_and_Z(family).Z_B_squared
    after = gram_and_Z(evolve_family(family, t, bds, sys)).Z_B_squared
    return abs(after - before)


def global_phase(sys: FermiSystem, E_pw: float, E_rpa: float, t: float) -> complex:
    """``exp(-i (E_pw + E_RPA) t / hbar)``."""
    return cmath.exp(-1j * (E_pw + E_rpa) * t / sys.hbar)


def write_state(path, phi: ExcitationWavefunction, alphas: Mapping[Momentum, tuple] | None = None) -> None:
    """One ``k, alpha, re, im`` line per component; ``alpha`` is the patch label if known."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("k,alpha,re,im\n")
        for k, v in phi.blocks.items():
            labels = alphas[k] if alphas is not None else range(len(v))
            kk = " ".join(str(c) for c in k)
            for a, z in zip(labels, v):
                fh.write(f"{kk},{a},{z.real:.17g},{z.imag:.17g}\n")


def read_state(path, alphas: Mapping[Momentum, tuple] | None = None) -> ExcitationWavefunction:
    blocks: Dict[Momentum, List[complex]] = {}
    order: Dict[Momentum, List[int]] = {}
    with open(path, encoding="utf-8") as fh:
        next(fh)
        for line in fh:
            if not line.strip():
                continue
            k_txt, a, re, im = line.strip().split(",")
            k = tuple(int(c) for c in k_txt.split())
            blocks.setdefault(k, []).append(complex(float(re), float(im)))
            order.setdefault(k, []).append(int(a))
    out = {}
    for k, vals in blocks.items():
        if alphas is not None:
            pos = {a: i for i, a in enumerate(alphas[k])}
            vec = np.zeros(len(alphas[k]), dtype=np.complex128)
            for a, z in zip(order[k], vals):
                vec[pos[a]] = z
            out[k] = vec
        else:
            out[k] = np.array(vals)
    return ExcitationWavefunction(out)
