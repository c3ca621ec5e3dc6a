"""Hermitian four-level dilation and its realisation in a driven five-level atom.

    python demos/03_dilation.py
"""

import numpy as np

from ptsim.atomic_model import AtomConfig, frame_equivalence_residual, rotating_hamiltonian
from ptsim.dilation import build_hf, embed, project, verify_dilation
from ptsim.pt_core import PTParams, propagator_closed

S, alpha, t = 1.0, 0.7, 3.0
p = PTParams(S, alpha)
v = np.array([1.0, 0.3j]) / np.linalg.norm([1.0, 0.3])
print("dilation residual:", verify_dilation(p, t, v))

U = propagator_closed(p, t)
print("||U^dag U - 1|| (not unitary):", np.linalg.norm(U.conj().T @ U - np.eye(2)))

w = embed(U @ v, alpha).four_vector
upper, resid = project(w, alpha)
print("embedded state, subspace residual:", resid)

cfg = AtomConfig.resonant(S, alpha)
print("max |H_rot - H_F|:", np.abs(rotating_hamiltonian(cfg) - build_hf(p)).max())
print("Rabi frequencies:", np.round(cfg.rabi, 6))
print("lab vs rotating frame evolution residual:",
      frame_equivalence_residual(cfg, 10.0, embed(v, alpha).four_vector))
