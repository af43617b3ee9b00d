"""Glue: from ``(k_F, V̂, M, delta)`` to diagonalised modes."""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict

from .bogoliubov import BogoliubovData, diagonalize_mode
from .effham import ModeMatrices, assemble_mode_matrices
from .lattice import FermiSystem, HalfSpaceModes, Momentum, PotentialSpec, semiclassical_params
from .patches import (
    DEFAULT_DELTA,
    IndexSets,
    PatchDecomposition,
    auto_patch_count,
    build_patch_decomposition,
    index_sets,
)

log = logging.getLogger(__name__)


def resolve_patch_count(M, N: int, delta: float = DEFAULT_DELTA) -> int:
    """``M`` as given, or ``N^(4 delta)`` rounded to an even integer for ``"auto"``."""
    if M is None or (isinstance(M, str) and M.lower() == "auto"):
        return auto_patch_count(N, delta)
    return int(M)


@dataclass
class Bosonized:
    """Everything computed for one ``(k_F, V̂, M, delta)`` point.

    ``modes`` maps each ``k`` in the northern half of the support to its
    ``(ModeMatrices, BogoliubovData)``. Momenta whose index set came out empty
    (no patch centre beyond the ``N^-delta`` cutoff) are listed in ``empty``;
    they carry no bosonic degrees of freedom and contribute nothing.
    """

    sys: FermiSystem
    V: PotentialSpec
    pd: PatchDecomposition
    idx: IndexSets
    modes: Dict[Momentum, tuple] = field(default_factory=dict)
    empty: tuple = ()

    @property
    def M(self) -> int:
        return self.pd.M

    @property
    def delta(self) -> float:
        return self.pd.delta

    def matrices(self) -> Dict[Momentum, ModeMatrices]:
        return {k: mm for k, (mm, _) in self.modes.items()}

    def bogoliubov(self) -> Dict[Momentum, BogoliubovData]:
        return {k: bd for k, (_, bd) in self.modes.items()}


def bosonize(k_F_or_sys, V: PotentialSpec, M="auto", delta: float = DEFAULT_DELTA, R_V=None,
             threads: int = 1) -> Bosonized:
    """Lattice, patches, index sets, mode matrices and Bogoliubov data in one call."""
    sys = k_F_or_sys if isinstance(k_F_or_sys, FermiSystem) else semiclassical_params(k_F_or_sys)
    M = resolve_patch_count(M, sys.N, delta)
    pd = build_patch_decomposition(sys, V, M, delta, R_V=R_V)
    idx = index_sets(pd, sys, HalfSpaceModes.from_potential(V))
    live = [k for k, mi in idx.items() if mi.dim > 0]
    empty = tuple(k for k, mi in idx.items() if mi.dim == 0)
    if empty:
        log.warning("no bosonic modes for k in %s at M=%d", list(empty), M)

    def one(k):
        mm = assemble_mode_matrices(sys, pd, idx[k], V)
        return k, (mm, diagonalize_mode(mm))

    if threads > 1 and len(live) > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            done = dict(ex.map(one, live))
    else:
        done = dict(map(one, live))
    modes = {k: done[k] for k in live}
    return Bosonized(sys, V, pd, idx, modes, empty)
