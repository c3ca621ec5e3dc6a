"""Spectrum, eigenvectors and the metric of the PT qubit as alpha approaches an EP.

    python demos/01_exceptional_points.py
"""

import numpy as np

from ptsim.dilation import eta_eigenvalues
from ptsim.pt_core import PTParams, closed_form_vectors, eigensystem, ep_state

S = 1.0
print(f"{'alpha':>8} {'E+':>10} {'overlap(R+,R-)':>16} {'eta eigenvalues':>24}")
for alpha in (0.0, 0.5, 1.0, 1.4, 1.55, 1.5699):
    es = eigensystem(PTParams(S, alpha))
    rp, rm = closed_form_vectors(alpha)
    # Euclidean overlap of the two right eigenvectors tends to 1 at the EP
    overlap = abs(np.vdot(rp, rm)) / (np.linalg.norm(rp) * np.linalg.norm(rm))
    lo, hi = eta_eigenvalues(alpha)
    print(f"{alpha:8.4f} {es.values[0].real:10.5f} {overlap:16.6f} {lo:11.3e} {hi:12.3e}")

print("coalesced state at alpha = +pi/2:", np.round(ep_state(1), 6))
print("coalesced state at alpha = -pi/2:", np.round(ep_state(-1), 6))
