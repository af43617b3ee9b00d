"""The fermionic engine against the bosonic picture on a tiny Fermi ball.

Pair operators are built from actual creation/annihilation operators on
sorted momentum tuples, so CAR identities hold with integer amplitudes.
"""
import numpy as np
import sympy

from fermibos.dynamics import ExcitationFamily, ExcitationWavefunction, gram_and_Z
from fermibos.fockoracle.fermion import (
    PairContext,
    add,
    apply_word,
    basis_state,
    ccr_defect_probe,
    fermionic_Zm,
    pair_operator_apply,
    vacuum,
)
from fermibos.lattice import PotentialSpec
from fermibos.pipeline import bosonize

# CAR on a two-particle state
v = basis_state([(0, 0, 0), (1, 0, 0)])
p = (0, 1, 0)
anti = add(apply_word([(p, True), (p, False)], v), apply_word([(p, False), (p, True)], v))
print("v:", v, "  {a_p, a*_p} v:", anti)

V = PotentialSpec.unit_shell(1.0)
bz = bosonize(6, V, 8, R_V=1)  # R_V = 1 keeps some pairs inside patches at this size
ctx = PairContext.from_bosonized(bz)
k, mi = next((k, mi) for k, mi in ctx.idx.items() if mi.dim)
a = mi.alphas[0]
print(f"\nN={bz.sys.N}, k={k}, patch {a}: {len(ctx.pairs(a, k))} pairs")

# with the square-root normalisation c* Ω has unit norm, exactly
w = pair_operator_apply(a, k, True, ctx, vacuum(sympy.Integer(1)), norm=lambda c: 1 / sympy.sqrt(c))
print("<c c*> on vacuum:", sympy.simplify(sum(x * x for x in w.values())))
print("CCR defect on vacuum:", ccr_defect_probe(a, a, k, k, ctx, vacuum()))

# two identical excitations: fermionic Z² drifts from the bosonic value 2
# by an amount that shrinks as the Fermi ball grows
print("\nkF   Z²_fermion   Z²_boson")
for kf in (4, 6, 8, 10):
    b = bosonize(kf, V, 4, R_V=1)
    c = PairContext.from_bosonized(b)
    phi = {(0, 0, 1): np.array([0.6, 0.8])}
    zf = fermionic_Zm([phi, phi], c)
    zb = gram_and_Z(ExcitationFamily([ExcitationWavefunction(phi)] * 2)).Z_B_squared
    print(f"{kf:<4d} {zf:.6f}     {zb:.6f}")
