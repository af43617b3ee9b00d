"""Three ways to the same Bogoliubov kernel, checked against each other on a lattice mode."""
import numpy as np

from fermibos.bogoliubov import block_route, curlyK_hyperbolic, hyperbolic_pair, verify_mode
from fermibos.lattice import PotentialSpec
from fermibos.pipeline import bosonize

bz = bosonize(15, PotentialSpec.unit_shell(1.0), 16)
k, (mm, bd) = max(bz.modes.items(), key=lambda kv: kv[1][0].dim)
print(f"mode k={k}: dim {mm.dim}, patches {mm.alphas}")

# A = D + W, B = W̃; positivity of A ± B is what makes the construction work
print("min eig A-B:", np.linalg.eigvalsh(mm.A - mm.B).min())
print("min eig A+B:", np.linalg.eigvalsh(mm.A + mm.B).min())

# route A: E, S1, polar factor O, K = ½ log(S1 S1ᵀ)
print("eig E:", np.round(np.linalg.eigvalsh(bd.E), 6))
print("ground constant ½tr(E-D-W):", bd.ground_constant)

# route B: cosh/sinh of K applied to D+W and W̃
ch, sh = hyperbolic_pair(bd)
print("|cosh K|_max, |sinh K|_max:", np.abs(ch).max(), np.abs(sh).max())
print("route B vs A on curlyK:", np.abs(curlyK_hyperbolic(mm, bd) - bd.curlyK).max())

# route C: half-size blocks, L1 <= 0 <= L2
br = block_route(mm)
print("L1 max eig:", np.linalg.eigvalsh(br.L1).max(), " L2 min eig:", np.linalg.eigvalsh(br.L2).min())

for name, err in verify_mode(mm, bd).items():
    print(f"  {name:10s} {err:.2e}")
