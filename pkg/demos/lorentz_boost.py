"""Boosting the Klein-Gordon constraints.

A particle with m = 0.4 and k = 0.3 has E = 0.5. Seen from a frame moving at
v = 0.6 it is at rest with E' = 0.4. The mixed primed constraints are
decoupled by substitution and both forms annihilate the boosted plane wave.
"""

import numpy as np

from qspacetime import make_axis, make_space, plane_wave_state, residual
from qspacetime.symmetry import boost, boosted_constraints_mixed, decouple_boosted, recombine_residual

# primed lattice chosen so that E' = 0.4 and k' = 0 are grid points
space = make_space([make_axis(64, 2 * np.pi / 25.6, "time"), make_axis(32, 2 * np.pi / 9.6, "x")])
params = boost(0.6)
mixed = boosted_constraints_mixed(space, [0.3, 0, 0], 0.4, params)
dec = decouple_boosted(mixed, params)

print(f"gamma = {params.gamma}")
print(f"E' = {mixed.params['E_boosted']:.12f}, k' = {mixed.params['k_boosted']}")
v = plane_wave_state(space, mixed.params["k_boosted"], dec.params["E_snap"])
print("mixed residuals     ", ["%.2e" % r for r in residual(mixed, v)])
print("decoupled residuals ", ["%.2e" % r for r in residual(dec, v)])
print("recombination error  %.2e" % recombine_residual(mixed, dec, params))
