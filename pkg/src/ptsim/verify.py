"""Invariant suite behind ``ptsim verify``.

Each check returns a worst-case residual that is compared with its
threshold; boolean checks report 0 (holds) or 1 (violated).
"""

import numpy as np

from .atomic_model import AtomConfig, frame_equivalence_residual, rotating_hamiltonian
from .biorthogonal import SweepPath, berry_connection, holonomy, track_states, two_ep_cycle
from .dilation import build_hf, embed, eta, verify_dilation
from .interferometry import fig2_rows, make_record, pi2_pulse, predict_populations_01
from .linalg import matrix_exp
from .pt_core import PTParams, build_hpt, closed_form_vectors, eigensystem, propagator_closed


def _random_params(rng, n, alpha_max=1.4, S_range=(0.1, 10.0), t_max=10.0):
    S = rng.uniform(*S_range, n)
    a = rng.uniform(-alpha_max, alpha_max, n)
    t = rng.uniform(0.0, t_max, n)
    return S, a, t


def check_propagator(rng, n):
    worst = 0.0
    for S, a, t in zip(*_random_params(rng, n)):
        p = PTParams(S, a)
        worst = max(worst, np.linalg.norm(propagator_closed(p, t) - matrix_exp(build_hpt(p), t)))
    return worst


def check_pseudo_unitarity(rng, n):
    worst = 0.0
    for S, a, t in zip(*_random_params(rng, n)):
        U = propagator_closed(PTParams(S, a), t)
        m = eta(a).matrix
        worst = max(worst, np.linalg.norm(U.conj().T @ m @ U - m))
    return worst


def check_biorthonormality(rng, n):
    worst = 0.0
    for a in rng.uniform(-1.5, 1.5, n):
        es = eigensystem(PTParams(1.0, a))
        worst = max(worst, np.abs(es.pairing() - np.eye(2)).max())
    return worst


def check_dilation(rng, n):
    worst = 0.0
    for S, a, t in zip(*_random_params(rng, n, S_range=(0.1, 5.0))):
        v = rng.normal(size=2) + 1j * rng.normal(size=2)
        worst = max(worst, verify_dilation(PTParams(S, a), t, v / np.linalg.norm(v)))
    return worst


def check_rotating_frame(rng, n):
    worst = 0.0
    for S, a in zip(rng.uniform(0.1, 5.0, n), rng.uniform(-1.5, 1.5, n)):
        cfg = AtomConfig.resonant(S, a)
        worst = max(worst, np.abs(rotating_hamiltonian(cfg) - build_hf(PTParams(S, a))).max())
    return worst


def check_frame_equivalence(rng):
    a = 0.4
    cfg = AtomConfig.resonant(1.0, a)
    psi = embed(closed_form_vectors(a)[0], a).four_vector
    return frame_equivalence_residual(cfg, 10.0, psi)


def check_zero_diagonal(rng, n):
    worst = 0.0
    for a in rng.uniform(-1.5, 1.5, n):
        worst = max(worst, np.abs(np.diag(berry_connection(PTParams(1.0, a)))).max())
    return worst


def check_half_loop(rng):
    worst = 0.0
    for d in (1, -1):
        r = holonomy(SweepPath.half_loop(0.4, d))
        worst = max(worst, abs(r.offdiagonal_phase - d * np.pi / 2))
    return worst


def check_two_ep(rng):
    worst = 0.0
    for d in (1, -1):
        c = two_ep_cycle(0.4, d, extrapolate=False)
        worst = max(worst, abs(c.final_factor + 1), abs(c.intermediate_factor - d * 1j))
    return worst


def check_exchange(rng):
    one = track_states(SweepPath(0.3, np.pi - 0.3))
    two = track_states(SweepPath(0.3, 2 * np.pi + 0.3))
    return float(not (one[-1].branches == (-1, 1) and two[-1].branches == (1, -1)))


def check_fig2(rng):
    alphas = np.linspace(-np.pi / 2, 3 * np.pi / 2, 361)
    worst = 0.0
    for row in fig2_rows(alphas):
        x, g = row["state_alpha"], row["gamma_d"]
        theta0 = 1.0 if np.cos(x) < 0 else 0.0
        phase = g - (x if row["branch"] > 0 else np.pi - x) / 2 - theta0 * np.pi / 2
        worst = max(worst, abs(row["N0"] - (1 - np.sin(phase)) / 2),
                    abs(row["N0"] - predict_populations_01(x, g, row["branch"])[0]))
    return worst


def check_readout(rng, n):
    worst = 0.0
    for phi in rng.uniform(-np.pi, np.pi, n):
        U = pi2_pulse(rng.uniform(0, 2 * np.pi))
        worst = max(worst, np.linalg.norm(U.conj().T @ U - np.eye(2)))
        rec = make_record(np.array([1.0, np.exp(-1j * phi)]) / np.sqrt(2), (1, 2))
        worst = max(worst, abs(np.angle(np.exp(1j * (rec.fitted_phase - phi)))))
    return worst


def run_suite(n_random=200, seed=0):
    rng = np.random.default_rng(seed)
    checks = [
        ("propagator_equivalence", lambda: check_propagator(rng, n_random), 1e-10),
        ("propagator_pseudo_unitarity", lambda: check_pseudo_unitarity(rng, n_random), 1e-10),
        ("biorthonormality", lambda: check_biorthonormality(rng, n_random), 1e-10),
        ("dilation_block_identity", lambda: check_dilation(rng, n_random), 1e-9),
        ("rotating_frame_equals_hf", lambda: check_rotating_frame(rng, n_random), 1e-12),
        ("frame_equivalence_numeric", lambda: check_frame_equivalence(rng), 1e-7),
        ("connection_zero_diagonal", lambda: check_zero_diagonal(rng, n_random), 1e-10),
        ("half_loop_phase", lambda: check_half_loop(rng), 1e-3),
        ("two_ep_cycle_factors", lambda: check_two_ep(rng), 1e-3),
        ("eigenstate_exchange", lambda: check_exchange(rng), 0.5),
        ("fig2_closed_form", lambda: check_fig2(rng), 1e-12),
        ("pulse_and_fit", lambda: check_readout(rng, min(n_random, 50)), 1e-8),
    ]
    rows = []
    for i, (name, fn, thr) in enumerate(checks):
        value = float(fn())
        rows.append({"index": i, "check": name, "value": value, "threshold": thr,
                     "pass": bool(value <= thr)})
    return rows
