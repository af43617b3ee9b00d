import itertools
import random

import numpy as np
import pytest
import sympy

from fermibos.bogoliubov import diagonalize_mode
from fermibos.dynamics import ExcitationFamily, ExcitationWavefunction, gram_and_Z
from fermibos.errors import FeasibilityError, StructuralError
from fermibos.fockoracle.boson import boson_basis, boson_ed_spectrum, quadratic_hamiltonian
from fermibos.fockoracle.fermion import (
    PairContext,
    add,
    apply_word,
    b_apply,
    basis_state,
    ccr_defect_probe,
    commutator,
    fermion_apply,
    fermionic_Zm,
    norm2,
    number_sectors,
    pair_decomposition_check,
    pair_operator_apply,
    remainder_apply,
    vacuum,
    write_oracle_csv,
)
from fermibos.pipeline import bosonize

from conftest import synthetic_mode

sym_norm = lambda c: 1 / sympy.sqrt(c)  # noqa: E731


# -- bosonic ED ----------------------------------------------------------------

def test_number_conserving_case():
    A = np.array([[0.5, 0.1], [0.1, 0.9]])
    sp = boson_ed_spectrum(A, np.zeros((2, 2)), 6)
    assert sp.ground_energy == pytest.approx(0.0, abs=1e-13)
    w = np.linalg.eigvalsh(A)
    sums = sorted({round(i * w[0] + j * w[1], 12) for i in range(4) for j in range(4) if i + j <= 6})
    assert np.allclose(sp.low_spectrum[:5], sums[:5], atol=1e-12)


def test_hamiltonian_symmetric():
    mm = synthetic_mode([0.6, 0.9], [0.8, 1.1], 0.15)
    H = quadratic_hamiltonian(mm.A, mm.B, boson_basis(4, 5))
    assert abs(H - H.T).max() < 1e-15


def test_ed_matches_bogoliubov():
    mm = synthetic_mode([0.6, 0.9], [0.8, 1.1], 0.15)
    bd = diagonalize_mode(mm)
    grounds = []
    for nmax in (4, 8, 12):
        sp = boson_ed_spectrum(mm.A, mm.B, nmax)
        grounds.append(sp.ground_energy)
    assert grounds[0] >= grounds[1] >= grounds[2]
    assert abs(grounds[-1] - bd.ground_constant) < 1e-6
    assert np.abs(sp.one_boson_gaps[:4] - np.linalg.eigvalsh(bd.E)).max() < 1e-6


def test_basis_limit():
    with pytest.raises(FeasibilityError):
        boson_basis(12, 20)


# -- CAR engine ----------------------------------------------------------------

MODES = [(0, 0, 0), (0, 0, 1), (0, 1, -1), (1, 0, 0), (-1, 2, 0)]


def random_int_state(rng, modes=MODES, terms=4):
    v = {}
    for _ in range(terms):
        occ = rng.sample(modes, rng.randint(0, len(modes)))
        v = add(v, basis_state(occ, rng.randint(-3, 3)))
    return v


def test_pauli_and_car_exact():
    rng = random.Random(0)
    for _ in range(20):
        v = random_int_state(rng)
        for p in MODES:
            assert fermion_apply(p, True, fermion_apply(p, True, v)) == {}
        for p, q in itertools.product(MODES, repeat=2):
            ac = add(apply_word([(p, False), (q, True)], v), apply_word([(q, True), (p, False)], v))
            assert ac == (v if p == q else {})
            anti = add(apply_word([(p, True), (q, True)], v), apply_word([(q, True), (p, True)], v))
            assert anti == {}
            for x in ac.values():
                assert isinstance(x, int)


def test_sign_convention():
    v = basis_state([(0, 0, 0), (1, 0, 0)])
    assert v == {((0, 0, 0), (1, 0, 0)): 1}
    assert basis_state([(1, 0, 0), (0, 0, 0)]) == {((0, 0, 0), (1, 0, 0)): -1}
    assert fermion_apply((1, 0, 0), False, v) == {((0, 0, 0),): -1}


@pytest.fixture(scope="module")
def ctx(small_bz):
    return PairContext.from_bosonized(small_bz)


def all_pairs(ctx):
    out = []
    for k, mi in ctx.idx.items():
        for a in mi.alphas:
            out.append((a, k))
    return out


def two_pair_states(ctx, rng, n=3):
    """Random integer superpositions of a*_p a*_{p-k} a*_q a*_{q-l} |0>."""
    pool = []
    for k in ctx.idx:
        pool += ctx.ring_pairs(k) + ctx.ring_pairs(tuple(-c for c in k))
    v = {}
    for _ in range(n):
        (p, h), (q, g) = rng.sample(pool, 2)
        if len({p, h, q, g}) == 4:
            v = add(v, basis_state([p, h, q, g], rng.randint(1, 3)))
    return v


def test_pair_operators_vacuum(ctx):
    for a, k in all_pairs(ctx):
        assert pair_operator_apply(a, k, False, ctx, vacuum()) == {}
        w = pair_operator_apply(a, k, True, ctx, vacuum(sympy.Integer(1)), norm=sym_norm)
        assert sympy.simplify(norm2(w)) == 1
        assert number_sectors(w) == {2}


def test_pair_operators_commute_exactly(ctx):
    rng = random.Random(4)
    pairs = all_pairs(ctx)
    for _ in range(6):
        v = two_pair_states(ctx, rng)
        (a, k), (b, l) = rng.sample(pairs, 2)
        for dag in (False, True):
            X = lambda w: pair_operator_apply(a, k, dag, ctx, w, normalized=False)  # noqa: E731
            Y = lambda w: pair_operator_apply(b, l, dag, ctx, w, normalized=False)  # noqa: E731
            assert commutator(X, Y, v) == {}


def test_ccr_defect_structure(ctx):
    rng = random.Random(5)
    pairs = all_pairs(ctx)
    for a, k in pairs:
        # exact zero on the vacuum with the square-root normalisation
        d = ccr_defect_probe(a, a, k, k, ctx, vacuum(sympy.Integer(1)), norm=sym_norm)
        assert all(sympy.simplify(x) == 0 for x in d.values())
    for _ in range(6):
        v = two_pair_states(ctx, rng)
        (a, k), (b, l) = rng.sample(pairs, 2)
        if a != b:
            assert ccr_defect_probe(a, b, k, l, ctx, v, normalized=False) == {}


def test_plain_count_normalisation_would_fail(ctx):
    a, k = all_pairs(ctx)[0]
    n = len(ctx.pairs(a, k))
    w = pair_operator_apply(a, k, True, ctx, vacuum(sympy.Integer(1)), norm=lambda c: sympy.Rational(1, c))
    assert norm2(w) == sympy.Rational(1, n)


def test_pair_decomposition_exact(ctx):
    rng = random.Random(6)
    for k in ctx.idx:
        for kk in (k, tuple(-c for c in k)):
            assert pair_decomposition_check(kk, ctx, vacuum()) == {}
            for _ in range(4):
                v = two_pair_states(ctx, rng)
                assert pair_decomposition_check(kk, ctx, v) == {}


def test_single_pair_in_patch(ctx):
    k, mi = next((k, mi) for k, mi in ctx.idx.items() if mi.dim)
    a = mi.plus[0]
    p, h = ctx.pairs(a, k)[0]
    v = basis_state([p, h])
    rest = add(b_apply(k, False, ctx, v), pair_operator_apply(a, k, False, ctx, v, normalized=False), -1)
    assert rest == remainder_apply(k, False, ctx, v)


def test_unknown_alpha(ctx):
    k = next(iter(ctx.idx))
    with pytest.raises(StructuralError):
        pair_operator_apply(999, k, True, ctx, vacuum())


def test_fermionic_Z_one_exact(ctx):
    for k, mi in ctx.idx.items():
        if not mi.dim:
            continue
        phi = {k: [sympy.Rational(3, 5), sympy.Rational(4, 5)] + [0] * (mi.dim - 2)}
        assert sympy.simplify(fermionic_Zm([phi], ctx, norm=sym_norm)) == 1
        phi2 = {k: [1] + [0] * (mi.dim - 1)}
        assert sympy.simplify(fermionic_Zm([phi2], ctx, norm=sym_norm)) == 1


def test_fermionic_Z_disjoint_patches(ctx):
    k, mi = next((k, mi) for k, mi in ctx.idx.items() if mi.dim >= 2)
    e = np.eye(mi.dim, dtype=int).tolist()
    z = fermionic_Zm([{k: e[0]}, {k: e[1]}], ctx, norm=sym_norm)
    assert sympy.simplify(z) == 1


def test_Z_difference_decreases(unit_V):
    diffs = []
    for kF in (4, 6, 8):
        bz = bosonize(kF, unit_V, 4, R_V=1)
        ctx = PairContext.from_bosonized(bz)
        phi = {(0, 0, 1): np.array([0.6, 0.8])}
        zf = fermionic_Zm([phi, phi], ctx)
        zb = gram_and_Z(ExcitationFamily([ExcitationWavefunction(phi)] * 2)).Z_B_squared
        diffs.append(abs(zf - zb))
    assert diffs[0] > diffs[1] > diffs[2]


def test_Zm_budget(ctx):
    k, mi = next((k, mi) for k, mi in ctx.idx.items() if mi.dim)
    phi = {k: [1.0] * mi.dim}
    with pytest.raises(FeasibilityError):
        fermionic_Zm([phi] * 3, ctx, budget=10)


def test_oracle_csv(tmp_path):
    write_oracle_csv(tmp_path / "o.csv", [("x", "q", 1.0, 0.75)])
    lines = (tmp_path / "o.csv").read_text().splitlines()
    assert lines == ["instance,quantity,engine_value,formula_value,abs_diff", "x,q,1,0.75,0.25"]
