"""Excitation wavefunctions under the one-boson Hamiltonian."""
import math

import numpy as np

from fermibos.dynamics import (
    ExcitationFamily,
    ExcitationWavefunction,
    energy_expectation,
    evolve,
    gram_and_Z,
    stationary_state,
)
from fermibos.lattice import PotentialSpec
from fermibos.pipeline import bosonize

bz = bosonize(15, PotentialSpec.unit_shell(1.0), 16)
bds = bz.bogoliubov()
dims = {k: mm.dim for k, (mm, _) in bz.modes.items()}
rng = np.random.default_rng(3)

phi = ExcitationWavefunction.random(dims, rng)
print("t      norm              energy")
for t in (0.0, 1.0, 10.0, 100.0):
    pt = evolve(phi, t, bds)
    print(f"{t:<6g} {pt.norm():.15f} {energy_expectation(pt, bds, bz.sys):.12f}")

# a stationary state only picks up a phase exp(-i E t / hbar)
k = next(iter(bds))
st = stationary_state(bds, k, 0, bz.sys)
ov = st.phi.inner(evolve(st.phi, 2.0, bds))
print("\nstationary overlap:", ov, " expected:", np.exp(-2j * st.energy / bz.sys.hbar))

# Z²_B is the permanent of the Gram matrix: 1 for orthonormal, m! for identical
for m in (1, 2, 3, 4):
    z = gram_and_Z(ExcitationFamily([phi] * m)).Z_B_squared
    print(f"m={m}: Z² = {z:.12f}  (m! = {math.factorial(m)})")
