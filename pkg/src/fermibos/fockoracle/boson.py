"""Exact diagonalisation of a quadratic bosonic Hamiltonian on truncated Fock space.

The Hamiltonian is

    h = sum_ab A_ab c*_a c_b + 1/2 sum_ab B_ab (c*_a c*_b + c_b c_a)

on occupation-number states with total boson number at most ``N_max``. It
only couples states whose totals differ by 0 or 2, so the even and odd
sectors are diagonalised separately.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Tuple

import numpy as np
import scipy.sparse as sps
import scipy.sparse.linalg as ssl

from ..errors import FeasibilityError

log = logging.getLogger(__name__)

MAX_BASIS = 200_000
DENSE_LIMIT = 3000


def _compositions(n_modes: int, total: int):
    """All occupation tuples of ``n_modes`` non-negative integers summing to ``total``."""
    if n_modes == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in _compositions(n_modes - 1, total - first):
            yield (first,) + rest


def boson_basis(n_modes: int, N_max: int, parity: int | None = None) -> List[Tuple[int, ...]]:
    """Occupation states with total ``<= N_max``, optionally restricted to one parity of the total."""
    size = math.comb(N_max + n_modes, n_modes)
    if size > MAX_BASIS:
        raise FeasibilityError(f"truncated boson basis has {size} states, limit {MAX_BASIS}")
    out = []
    for total in range(N_max + 1):
        if parity is None or total % 2 == parity:
            out.extend(_compositions(n_modes, total))
    return out


def quadratic_hamiltonian(A: np.ndarray, B: np.ndarray, basis) -> sps.csr_matrix:
    """Sparse matrix of ``h`` restricted to ``basis`` (creations leaving it are dropped)."""
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    n = A.shape[0]
    index: Dict[tuple, int] = {s: i for i, s in enumerate(basis)}
    rows, cols, vals = [], [], []
    prows, pcols, pvals = [], [], []
    nzA = [(a, b, A[a, b]) for a in range(n) for b in range(n) if A[a, b] != 0.0]
    nzB = [(a, b, B[a, b]) for a in range(n) for b in range(n) if B[a, b] != 0.0]
    for j, s in enumerate(basis):
        for a, b, val in nzA:
            if s[b] == 0:
                continue
            t = list(s)
            amp = math.sqrt(t[b])
            t[b] -= 1
            amp *= math.sqrt(t[a] + 1)
            t[a] += 1
            i = index.get(tuple(t))
            if i is not None:
                rows.append(i)
                cols.append(j)
                vals.append(val * amp)
        for a, b, val in nzB:
            t = list(s)
            amp = math.sqrt(t[b] + 1)
            t[b] += 1
            amp *= math.sqrt(t[a] + 1)
            t[a] += 1
            i = index.get(tuple(t))
            if i is not None:
                prows.append(i)
                pcols.append(j)
                pvals.append(0.5 * val * amp)
    dim = len(basis)
    H = sps.coo_matrix((vals, (rows, cols)), shape=(dim, dim)).tocsr()
    P = sps.coo_matrix((pvals, (prows, pcols)), shape=(dim, dim)).tocsr()
    return (H + P + P.T).tocsr()


def _lowest(H: sps.csr_matrix, k: int) -> np.ndarray:
    dim = H.shape[0]
    k = min(k, dim)
    if dim <= DENSE_LIMIT or k >= dim - 1:
        return np.linalg.eigvalsh(H.toarray())[:k]
    w = ssl.eigsh(H, k=k, which="SA", tol=1e-13, return_eigenvectors=False)
    return np.sort(w)


@dataclass(frozen=True)
class BosonSpectrum:
    ground_energy: float
    even: np.ndarray
    odd: np.ndarray
    basis_size: int

    @property
    def low_spectrum(self) -> np.ndarray:
        return np.sort(np.concatenate([self.even, self.odd]))

    @property
    def one_boson_gaps(self) -> np.ndarray:
        """Odd-sector levels above the ground state; the lowest are single quasi-particles."""
        return self.odd - self.ground_energy


def boson_ed_spectrum(A: np.ndarray, B: np.ndarray, N_max: int, n_levels: int | None = None) -> BosonSpectrum:
    """Lowest levels of ``h`` in each parity sector at total-number cutoff ``N_max``."""
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    n = A.shape[0]
    for name, mat in (("A - B", A - B), ("A + B", A + B)):
        if np.linalg.eigvalsh(mat)[0] <= 0:
            log.warning("%s is not positive definite; h may be unbounded below", name)
    n_levels = n + 2 if n_levels is None else n_levels
    size = 0
    levels = []
    for parity in (0, 1):
        basis = boson_basis(n, N_max, parity)
        size += len(basis)
        levels.append(_lowest(quadratic_hamiltonian(A, B, basis), n_levels))
    even, odd = levels
    return BosonSpectrum(float(even[0]), even, odd, size)
