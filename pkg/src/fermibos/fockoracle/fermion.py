"""Sparse fermionic Fock space over lattice momenta.

Basis states are tuples of occupied momenta in lexicographic order; a vector
is a dict from such tuples to amplitudes. Creation and annihilation at ``p``
carry the sign ``(-1)^j`` with ``j`` the number of occupied modes preceding
``p``. Amplitudes may be ``int``, ``fractions.Fraction``, ``float``/``complex``
or any exact field type that supports ``+``, ``*`` and ``== 0``; with integer
or rational amplitudes every identity is checked exactly.

The pair operators are written in the particle-hole frame: the reference
state is the empty tuple (the filled Fermi ball after the particle-hole
transformation), and ``c*_alpha(k)`` creates a particle at ``p`` together
with a hole at ``p - k``.
"""
from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, List, Sequence, Tuple

import numpy as np

from ..errors import FeasibilityError, StructuralError
from ..lattice import FermiSystem, Momentum, PotentialSpec, shell_sets
from ..patches import IndexSets, PatchDecomposition, pair_mask

State = Tuple[Momentum, ...]
SparseVector = Dict[State, object]

DROP_TOL = 1e-15
MAX_TERMS = 2_000_000


def _negligible(x) -> bool:
    if isinstance(x, (float, complex, np.floating, np.complexfloating)):
        return abs(x) <= DROP_TOL
    return x == 0


def prune(v: SparseVector) -> SparseVector:
    return {s: a for s, a in v.items() if not _negligible(a)}


def vacuum(one=1) -> SparseVector:
    return {(): one}


def basis_state(modes: Iterable[Momentum], amp=1) -> SparseVector:
    """``a*_{q1} ... a*_{qn} |0>`` for the given (unsorted) modes."""
    v = vacuum(amp)
    for q in reversed(list(modes)):
        v = fermion_apply(q, True, v)
    return v


def add(u: SparseVector, w: SparseVector, scale=1) -> SparseVector:
    out = dict(u)
    for s, a in w.items():
        out[s] = out.get(s, 0) + scale * a
    return prune(out)


def scale(v: SparseVector, c) -> SparseVector:
    return prune({s: c * a for s, a in v.items()})


def inner(u: SparseVector, w: SparseVector):
    """``<u, w>``, antilinear in ``u``."""
    total = 0
    for s, a in u.items():
        b = w.get(s)
        if b is not None:
            total += _conj(a) * b
    return total


def norm2(v: SparseVector):
    return inner(v, v)


def _conj(a):
    c = getattr(a, "conjugate", None)
    return c() if c is not None else a


def fermion_apply(p: Momentum, dagger: bool, v: SparseVector) -> SparseVector:
    """Apply ``a*_p`` (``dagger=True``) or ``a_p`` to ``v``."""
    p = tuple(int(c) for c in p)
    out: SparseVector = {}
    for s, amp in v.items():
        j = bisect.bisect_left(s, p)
        present = j < len(s) and s[j] == p
        if dagger == present:
            continue
        t = s[:j] + (p,) + s[j:] if dagger else s[:j] + s[j + 1:]
        out[t] = out.get(t, 0) + (-amp if j % 2 else amp)
    return prune(out)


def apply_word(word: Sequence[Tuple[Momentum, bool]], v: SparseVector) -> SparseVector:
    """Apply a product of elementary operators, rightmost first."""
    for p, dagger in reversed(word):
        v = fermion_apply(p, dagger, v)
    return v


# -- pair operators ----------------------------------------------------------

def _neg(k) -> Momentum:
    return tuple(-int(c) for c in k)


@dataclass
class PairContext:
    """Patch data needed to build ``c_alpha(k)``, ``b(k)`` and ``r^R(k)``."""

    sys: FermiSystem
    pd: PatchDecomposition
    idx: IndexSets
    _cache: Dict = field(default_factory=dict, repr=False)

    @classmethod
    def from_bosonized(cls, bz) -> "PairContext":
        return cls(bz.sys, bz.pd, bz.idx)

    def mode(self, k):
        k = tuple(int(c) for c in k)
        if k in self.idx:
            return k, self.idx[k]
        if _neg(k) in self.idx:
            return _neg(k), self.idx[_neg(k)]
        raise StructuralError(f"k={k} is not a mode of this decomposition")

    def transfer(self, alpha: int, k) -> Momentum:
        """``k`` for ``alpha`` in ``I_k^+``, ``-k`` for ``alpha`` in ``I_k^-``."""
        k = tuple(int(c) for c in k)
        kk, mi = self.mode(k)
        if alpha in mi.plus:
            return k
        if alpha in mi.minus:
            return _neg(k)
        raise StructuralError(f"alpha={alpha} is not in I_k for k={k}")

    def _labels(self, k):
        if k not in self._cache:
            ring = shell_sets(self.sys, k).ring
            lp, lh = pair_mask(self.pd, ring, k)
            self._cache[k] = (ring, lp, lh)
        return self._cache[k]

    def patch_pairs(self, alpha: int, k_signed) -> List[Tuple[Momentum, Momentum]]:
        """``(p, p - k)`` with ``p`` outside, ``p - k`` inside the ball, both in ``B_alpha``."""
        ring, lp, lh = self._labels(tuple(k_signed))
        sel = ring[(lp == alpha) & (lh == alpha)]
        kv = np.asarray(k_signed, dtype=np.int64)
        return [(tuple(int(c) for c in p), tuple(int(c) for c in p - kv)) for p in sel]

    def pairs(self, alpha: int, k) -> List[Tuple[Momentum, Momentum]]:
        return self.patch_pairs(alpha, self.transfer(alpha, k))

    def ring_pairs(self, k) -> List[Tuple[Momentum, Momentum]]:
        ring, _, _ = self._labels(tuple(k))
        kv = np.asarray(k, dtype=np.int64)
        return [(tuple(int(c) for c in p), tuple(int(c) for c in p - kv)) for p in ring]

    def plus_patches(self, k) -> tuple:
        """Patches whose ``c_alpha(k)`` is built from pairs of transfer ``k`` itself."""
        k = tuple(int(c) for c in k)
        kk, mi = self.mode(k)
        return mi.plus if kk == k else mi.minus

    def remainder_pairs(self, k) -> List[Tuple[Momentum, Momentum]]:
        """Ring pairs of ``k`` not inside a single patch of ``I_k^+``: the set ``U``."""
        k = tuple(int(c) for c in k)
        ring, lp, lh = self._labels(k)
        keep = np.isin(lp, np.array(self.plus_patches(k), dtype=np.int64)) & (lp == lh)
        kv = np.asarray(k, dtype=np.int64)
        return [(tuple(int(c) for c in p), tuple(int(c) for c in p - kv)) for p in ring[~keep]]


def default_norm(count: int):
    return 1.0 / math.sqrt(count)


def _pair_sum(pairs, dagger: bool, v: SparseVector, coeff=1) -> SparseVector:
    out: SparseVector = {}
    for p, h in pairs:
        # c* = a*_p a*_h ; c = (a*_p a*_h)* = a_h a_p
        word = [(p, True), (h, True)] if dagger else [(h, False), (p, False)]
        w = apply_word(word, v)
        for s, a in w.items():
            out[s] = out.get(s, 0) + coeff * a
    return prune(out)


def pair_operator_apply(alpha: int, k, dagger: bool, ctx: PairContext, v: SparseVector,
                        normalized: bool = True, norm: Callable[[int], object] = default_norm) -> SparseVector:
    """Apply ``c*_alpha(k)`` or ``c_alpha(k)``.

    With ``normalized=False`` the prefactor ``1/n_alpha(k)`` is omitted, which
    keeps integer amplitudes integer. ``norm(count)`` supplies ``1/n_alpha`` and
    can return an exact type (e.g. a symbolic square root) for exact checks.
    """
    pairs = ctx.pairs(alpha, k)
    if not pairs:
        raise StructuralError(f"n_alpha(k) = 0 for alpha={alpha}, k={tuple(k)}")
    coeff = norm(len(pairs)) if normalized else 1
    return _pair_sum(pairs, dagger, v, coeff)


def b_apply(k, dagger: bool, ctx: PairContext, v: SparseVector) -> SparseVector:
    """Unnormalised ``b(k) = sum_{p in ring} a_{p-k} a_p`` (or its adjoint)."""
    return _pair_sum(ctx.ring_pairs(tuple(k)), dagger, v)


def remainder_apply(k, dagger: bool, ctx: PairContext, v: SparseVector) -> SparseVector:
    """``r^R(k) = sum_{p in U} a_{p-k} a_p`` (or its adjoint)."""
    return _pair_sum(ctx.remainder_pairs(tuple(k)), dagger, v)


def commutator(X: Callable[[SparseVector], SparseVector], Y: Callable[[SparseVector], SparseVector],
               v: SparseVector) -> SparseVector:
    return add(X(Y(v)), Y(X(v)), -1)


def ccr_defect_probe(alpha: int, beta: int, k, l, ctx: PairContext, v: SparseVector,
                     normalized: bool = True, norm: Callable[[int], object] = default_norm) -> SparseVector:
    """``([c_alpha(k), c*_beta(l)] - delta_ab delta_kl) v``."""
    c = lambda w: pair_operator_apply(alpha, k, False, ctx, w, normalized, norm)  # noqa: E731
    cs = lambda w: pair_operator_apply(beta, l, True, ctx, w, normalized, norm)  # noqa: E731
    out = commutator(c, cs, v)
    if alpha == beta and tuple(k) == tuple(l):
        out = add(out, v, -1)
    return out


def pair_decomposition_check(k, ctx: PairContext, v: SparseVector) -> SparseVector:
    """``(b(k) - sum_{alpha in I_k^+} n_alpha c_alpha(k) - r^R(k)) v``; exactly zero when the sets partition the ring.

    ``n_alpha c_alpha(k)`` is applied as the unnormalised pair sum, so the
    residual is computed in the amplitude type of ``v``.
    """
    k = tuple(int(c) for c in k)
    out = b_apply(k, False, ctx, v)
    for alpha in ctx.plus_patches(k):
        out = add(out, _pair_sum(ctx.patch_pairs(alpha, k), False, v), -1)
    return add(out, remainder_apply(k, False, ctx, v), -1)


def number_sectors(v: SparseVector) -> set:
    return {len(s) for s in v}


def excitation_create(phi, ctx: PairContext, v: SparseVector, norm: Callable[[int], object] = default_norm,
                      alphas=None) -> SparseVector:
    """``c*(phi) v = sum_k sum_alpha phi(k)_alpha c*_alpha(k) v``.

    ``phi`` is an :class:`~fermibos.dynamics.ExcitationWavefunction` or a plain
    mapping ``k -> vector`` ordered like ``ModeIndex.alphas``.
    """
    blocks = getattr(phi, "blocks", phi)
    out: SparseVector = {}
    for k, vec in blocks.items():
        _, mi = ctx.mode(k)
        labels = mi.alphas if alphas is None else alphas[k]
        for alpha, coef in zip(labels, vec):
            if _negligible(coef):
                continue
            w = pair_operator_apply(alpha, k, True, ctx, v, True, norm)
            for s, a in w.items():
                out[s] = out.get(s, 0) + coef * a
    return prune(out)


def _term_estimate(phis, ctx: PairContext) -> int:
    total = 1
    for phi in phis:
        blocks = getattr(phi, "blocks", phi)
        n = sum(len(ctx.pairs(a, k)) for k in blocks for a in ctx.mode(k)[1].alphas)
        total *= max(n, 1)
    return total


def fermionic_Zm(phis, ctx: PairContext, norm: Callable[[int], object] = default_norm,
                 budget: int = MAX_TERMS):
    """``Z_m^2 = || c*(phi_1) ... c*(phi_m) Omega ||^2``."""
    phis = list(phis)
    if len(phis) > 3:
        raise FeasibilityError(f"fermionic Z_m supports m <= 3, got {len(phis)}")
    est = _term_estimate(phis, ctx)
    if est > budget:
        raise FeasibilityError(f"~{est} amplitude terms exceed the budget {budget}")
    v = vacuum()
    for phi in reversed(phis):
        v = excitation_create(phi, ctx, v, norm)
    return norm2(v)


# -- plane-wave energy by direct evaluation -----------------------------------

def plane_wave_energy_oracle(sys: FermiSystem, V: PotentialSpec) -> float:
    """``<sea, H_N sea>`` for the filled ball, by applying every term of ``H_N``.

    ``H_N = hbar^2 sum |p|^2 a*_p a_p + (1/2N) sum_{k,p,q} V̂(k) a*_{p+k} a*_{q-k} a_q a_p``
    in the original (not particle-hole) frame. Only ``p, q`` in the ball can
    contribute. Intended for tiny systems (``N`` up to a few dozen).
    """
    if sys.N > 60:
        raise FeasibilityError(f"plane-wave oracle is for tiny systems, N={sys.N}")
    ball = [tuple(int(c) for c in p) for p in sys.ball]
    sea = basis_state(sorted(ball))
    kinetic = []
    for p in ball:
        w = apply_word([(p, True), (p, False)], sea)
        kinetic.append(sys.hbar**2 * sum(c * c for c in p) * inner(sea, w))
    ks = dict(V.values)
    inter = []
    for k, vhat in ks.items():
        for p in ball:
            for q in ball:
                pk = tuple(a + b for a, b in zip(p, k))
                qk = tuple(a - b for a, b in zip(q, k))
                w = apply_word([(pk, True), (qk, True), (q, False), (p, False)], sea)
                amp = inner(sea, w)
                if amp:
                    inter.append(vhat * amp)
    return math.fsum(kinetic) + math.fsum(inter) / (2 * sys.N)


# -- report ------------------------------------------------------------------

ORACLE_HEADER = "instance,quantity,engine_value,formula_value,abs_diff"


def write_oracle_csv(path, rows) -> None:
    """Rows are ``(instance, quantity, engine_value, formula_value)``."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(ORACLE_HEADER + "\n")
        for inst, qty, eng, form in rows:
            fh.write(f"{inst},{qty},{float(eng):.17g},{float(form):.17g},{abs(float(eng) - float(form)):.17g}\n")
