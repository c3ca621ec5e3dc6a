"""Non-Abelian holonomy around one and two exceptional points.

A sweep alpha0 -> pi - alpha0 crosses the EP at pi/2 and returns an
off-diagonal phase of +pi/2; extending to a full 2 pi sweep crosses both EPs
and gives an overall factor -1.

    python demos/02_holonomy.py
"""

import numpy as np

from ptsim.biorthogonal import SweepPath, holonomy, holonomy_extrapolated, track_states, two_ep_cycle

alpha0 = 0.4
for eps in (1e-2, 1e-3, 1e-4):
    r = holonomy(SweepPath.half_loop(alpha0, 1, detour_eps=eps))
    print(f"detour eps={eps:.0e}: off-diagonal phase {r.offdiagonal_phase:+.9f}")
r = holonomy_extrapolated(SweepPath.half_loop(alpha0, 1))
print(f"extrapolated to eps -> 0: {r.offdiagonal_phase:+.12f} (pi/2 = {np.pi / 2:.12f})")
print("transport matrix:\n", np.round(r.transport_matrix, 9))

c = two_ep_cycle(alpha0, 1)
print(f"two-EP cycle: intermediate {c.intermediate_factor:.6f}, final {c.final_factor:.6f}")

labels = track_states(SweepPath(alpha0, np.pi - alpha0))[-1].branches
print("branch labels after one EP:", labels)
labels = track_states(SweepPath(alpha0, 2 * np.pi + alpha0))[-1].branches
print("branch labels after two EPs:", labels)
