"""Simulated pi/2-pulse interferometry and the Berry-phase detection protocol.

Phase convention: a pair state |a> + exp(-i phi) |b> gives, after
:func:`pi2_pulse` with pulse phase ``varphi``, the populations
N_a = [1 - sin(varphi + phi)] / 2 and N_b = [1 + sin(varphi + phi)] / 2.
Fits report this phi ("relative phase") in (-pi, pi].

Level indices: 5-vectors are (|0>, |1>, |2>, |3>, |4>); 4-vectors are the
dilation block (|1>, ..., |4>) and cannot address |0>.

The protocol evolves |0> + c |embedded eigenstate> through a list of
sweeps.  After each sweep the (1, 2) readout identifies the closed-form
branch, the (0, 1) readout measures the phase of |1> against |0>, and
the stage's geometric phase is what remains after removing the change of
the eigenvector's own phase and the dynamical phase.  The readouts at a
boundary act on a copy of the state, so one run yields all stages.
"""

from dataclasses import dataclass, field

import numpy as np

from .atomic_model import DEFAULT_OMEGA_HF, DEFAULT_OMEGA_Z, AtomConfig, Schedule, adiabaticity_margin, evolve
from .dilation import embed, project
from .errors import (AmbiguousBranchError, EPDegenerateError, LowSignalError, PTSimError,
                     ProtocolError, ReadoutError)
from .pt_core import EP_TOL, closed_form_vectors, wrap_angle

__all__ = [
    "DISC_TOL",
    "N_PHI",
    "ReadoutRecord",
    "PhasePrediction",
    "ExperimentSpec",
    "SweepSimulation",
    "ProtocolReport",
    "pi2_pulse",
    "populations_after_pulse",
    "predict_populations_12",
    "phase_prediction",
    "predict_populations_01",
    "static_phase",
    "make_record",
    "extract_phase",
    "discriminate_eigenstate",
    "dynamic_phase",
    "simulate_sweeps",
    "readout_protocol",
    "run_protocol",
    "fig2_rows",
    "FIG2_CURVES",
]

DISC_TOL = 0.1
N_PHI = 16
MIN_CONTRAST = 0.1
_PAIR_SIGNAL_MIN = 1e-12


def pi2_pulse(phi):
    """[[1, -i e^{-i phi}], [-i e^{i phi}, 1]] / sqrt(2)."""
    return np.array([[1.0, -1j * np.exp(-1j * phi)],
                     [-1j * np.exp(1j * phi), 1.0]]) / np.sqrt(2.0)


def _pair_indices(state, pair):
    n = len(state)
    a, b = pair
    if n == 5:
        idx = (a, b)
    elif n == 4:
        if a == 0 or b == 0:
            raise ValueError("a 4-vector has no |0> component")
        idx = (a - 1, b - 1)
    elif n == 2:
        idx = (0, 1)
    else:
        raise ValueError(f"unsupported state dimension {n}")
    if not all(0 <= i < n for i in idx) or idx[0] == idx[1]:
        raise ValueError(f"invalid level pair {pair!r}")
    return idx


def populations_after_pulse(state, pair, phi):
    """(N_a, N_b) after a pi/2 pulse on the pair, normalised to the pair."""
    state = np.asarray(state, dtype=complex)
    i, j = _pair_indices(state, pair)
    amp = np.array([state[i], state[j]])
    w = float(np.vdot(amp, amp).real)
    if w < _PAIR_SIGNAL_MIN:
        raise LowSignalError(f"levels {pair!r} carry no population")
    out = pi2_pulse(phi) @ amp
    p = np.abs(out) ** 2 / w
    return float(p[0]), float(p[1])


def relative_phase(state, pair):
    """Exact phi with pair amplitudes proportional to (1, e^{-i phi})."""
    state = np.asarray(state, dtype=complex)
    i, j = _pair_indices(state, pair)
    return wrap_angle(-np.angle(state[j] / state[i]))


def _branch_sign(branch):
    if branch in (1, "+", "plus"):
        return 1
    if branch in (-1, "-", "minus"):
        return -1
    raise ValueError(f"branch must be +1 or -1, got {branch!r}")


def predict_populations_12(alpha, phi, branch):
    b = _branch_sign(branch)
    if abs(np.cos(alpha)) <= EP_TOL:
        raise EPDegenerateError(f"alpha={alpha!r} is an EP")
    x = phi + (alpha if b > 0 else np.pi - alpha)
    return (1 - np.sin(x)) / 2, (1 + np.sin(x)) / 2


@dataclass(frozen=True)
class PhasePrediction:
    varphi_plus: float
    varphi_minus: float
    gamma_d: float
    heaviside_branch: int


def phase_prediction(alpha, gamma_d):
    """Total (0, 1) phase differences of the two branches in closed form."""
    theta0 = 1 if np.cos(alpha) < 0 else 0
    jump = theta0 * np.pi / 2
    return PhasePrediction(gamma_d - alpha / 2 - jump,
                           gamma_d - (np.pi - alpha) / 2 - jump, gamma_d, theta0)


def predict_populations_01(alpha, gamma_d, branch):
    b = _branch_sign(branch)
    if np.cos(alpha) == 0:
        raise ValueError("the step function is undefined at cos(alpha) = 0")
    pred = phase_prediction(alpha, gamma_d)
    x = pred.varphi_plus if b > 0 else pred.varphi_minus
    return (1 - np.sin(x)) / 2, (1 + np.sin(x)) / 2


def static_phase(alpha, branch):
    """(0, 1) relative phase of |0> + embedded closed-form eigenvector, no evolution.

    With the principal square root this is -alpha/2 + theta0 pi/2 for the
    + branch and -(pi - alpha)/2 + theta0 pi/2 for the - branch.
    """
    b = _branch_sign(branch)
    theta0 = 1 if np.cos(alpha) < 0 else 0
    base = -alpha / 2 if b > 0 else -(np.pi - alpha) / 2
    return base + theta0 * np.pi / 2


@dataclass(frozen=True)
class ReadoutRecord:
    pair: tuple
    phi_samples: np.ndarray
    populations: np.ndarray
    fitted_phase: float
    fit_residual: float
    uncertainty: float = 0.0
    contrast: float = 1.0


def _fit(phis, na):
    X = np.column_stack([np.ones_like(phis), np.sin(phis), np.cos(phis)])
    coef, *_ = np.linalg.lstsq(X, na, rcond=None)
    resid = na - X @ coef
    _, p, q = coef
    amp = float(np.hypot(p, q))
    phase = wrap_angle(np.arctan2(-q, -p))
    rms = float(np.sqrt(np.mean(resid ** 2)))
    dof = max(len(phis) - 3, 1)
    sigma = float(np.sqrt(np.sum(resid ** 2) / dof))
    unc = sigma * np.sqrt(2.0 / len(phis)) / amp if amp > 0 else np.inf
    return phase, rms, float(unc), 2 * amp


def _phi_grid(n):
    return 2 * np.pi * np.arange(n) / n


def make_record(state, pair, phis=None, noise_sigma=0.0, rng=None):
    """Simulate populations on a pulse-phase grid and fit the relative phase.

    Noise is independent Gaussian on both populations, clipped to [0, 1]
    and renormalised per pair.
    """
    phis = _phi_grid(N_PHI) if phis is None else np.asarray(phis, dtype=float)
    pops = np.array([populations_after_pulse(state, pair, ph) for ph in phis])
    if noise_sigma > 0:
        if rng is None:
            raise ValueError("noisy readout needs an explicit rng")
        pops = np.clip(pops + rng.normal(0.0, noise_sigma, pops.shape), 0.0, 1.0)
        tot = pops.sum(axis=1, keepdims=True)
        pops = np.where(tot > 0, pops / np.where(tot > 0, tot, 1.0), 0.5)
    phase, rms, unc, contrast = _fit(phis, pops[:, 0])
    return ReadoutRecord(tuple(pair), phis, pops, phase, rms, unc, contrast)


def extract_phase(record):
    """(phase, uncertainty) of a record's N_a = [1 - sin(varphi + phi)]/2 fit."""
    phis = np.asarray(record.phi_samples, dtype=float)
    if len(np.unique(np.round(np.mod(phis, 2 * np.pi), 12))) < 8:
        raise ReadoutError("need at least 8 distinct pulse phases")
    if np.ptp(phis) < np.pi - 1e-12:
        raise ReadoutError("pulse phases must span at least pi")
    phase, _, unc, contrast = _fit(phis, np.asarray(record.populations)[:, 0])
    if contrast < MIN_CONTRAST:
        raise LowSignalError(f"fringe contrast {contrast:.3g} below {MIN_CONTRAST}")
    return phase, unc


def discriminate_eigenstate(record, alpha, disc_tol=DISC_TOL):
    """+1 if the (1, 2) phase is alpha, -1 if it is pi - alpha (mod 2 pi)."""
    if tuple(record.pair) != (1, 2):
        raise ValueError("discrimination uses the (1, 2) readout")
    separation = abs(wrap_angle(2 * alpha - np.pi))
    if separation < 2 * disc_tol:
        raise EPDegenerateError(
            f"alpha={alpha!r} is within {disc_tol} of an EP; branch hypotheses coincide")
    phase, _ = extract_phase(record)
    d_plus = abs(wrap_angle(phase - alpha))
    d_minus = abs(wrap_angle(phase - (np.pi - alpha)))
    if d_plus <= disc_tol:
        return 1
    if d_minus <= disc_tol:
        return -1
    raise AmbiguousBranchError(
        f"phase {phase:.4f} matches neither alpha ({d_plus:.3g} off) "
        f"nor pi - alpha ({d_minus:.3g} off)")


def dynamic_phase(S, sched, branch, omega_0=0.0, phi=0.0):
    """-+ S int cos(alpha(t)) dt + phi + omega_0 T for branch +-.

    The branch is the closed-form label, so the integrand follows the
    label's eigenvalue S cos(alpha) through its sign change at an EP.
    """
    b = _branch_sign(branch)
    return -b * S * sched.integral_cos() + phi + omega_0 * sched.duration


@dataclass(frozen=True)
class ExperimentSpec:
    """Inputs of one protocol run.

    ``waypoints`` lists the sweep targets after ``alpha0``; stage k sweeps
    waypoints[k-1] -> waypoints[k] at ``rate`` (slowed by ``ep_slowdown``
    within ``ep_zone`` of EPs).  ``gamma_d_choices`` are target dynamic
    phases for single-shot (0, 1) readouts reported alongside the fits.
    """

    S: float = 1.0
    alpha0: float = 0.3
    branch: int = 1
    waypoints: tuple = ()
    rate: float = 1e-3
    ep_zone: float = 0.25
    ep_slowdown: float = 4.0
    prep_weight: float = 1.0
    n_phi: int = N_PHI
    gamma_d_choices: tuple = (0.0, np.pi / 2)
    noise_sigma: float = 0.0
    seed: int = None
    omega_HF: float = DEFAULT_OMEGA_HF
    omega_Z: float = DEFAULT_OMEGA_Z
    omega_0: float = None
    dt_max: float = None

    def __post_init__(self):
        if self.noise_sigma > 0 and self.seed is None:
            raise ValueError("a seed is required when noise_sigma > 0")
        if self.n_phi < 8:
            raise ValueError("n_phi must be >= 8")
        if not self.prep_weight > 0:
            raise ValueError("prep_weight must be positive")
        _branch_sign(self.branch)

    @classmethod
    def two_ep_loop(cls, alpha0=0.3, direction=1, **kwargs):
        """alpha0 -> d pi - alpha0 -> alpha0 + 2 d pi."""
        d = 1 if direction > 0 else -1
        return cls(alpha0=alpha0, waypoints=(d * np.pi - alpha0, alpha0 + 2 * d * np.pi), **kwargs)

    @property
    def reference_energy(self):
        return self.omega_Z if self.omega_0 is None else self.omega_0

    def stage_schedules(self):
        out, a = [], self.alpha0
        for b in self.waypoints:
            if a == b:
                out.append(Schedule.constant(a, 0.0))
            else:
                out.append(Schedule.from_rate(a, b, self.rate * self.S, self.ep_zone, self.ep_slowdown))
            a = b
        return out


@dataclass(frozen=True)
class SweepSimulation:
    """Noiseless evolution, sampled at every stage boundary."""

    spec: ExperimentSpec
    boundary_alphas: tuple
    boundary_states: tuple          # 5-vectors
    stage_dynamic_phases: tuple     # gamma_d of each stage for the prepared branch
    stage_durations: tuple
    max_embedding_residual: float
    max_norm_drift: float
    margin: float


@dataclass(frozen=True)
class ProtocolReport:
    """Measured phases of one run.

    ``stage_phases`` holds the geometric phase of each sweep.
    ``loop_phase`` is the phase acquired relative to the initial
    eigenvector, and ``geometric_phase`` equals it for closed sweeps (the
    sum of stage phases otherwise).  ``exchange_flags`` mark stages
    that end on the other energy level.
    """

    stage_phases: tuple
    stage_alphas: tuple
    branches: tuple
    exchange_flags: tuple
    exchange: bool
    loop_phase: float
    geometric_phase: float
    records: tuple = field(repr=False)
    stage_dynamic_phases: tuple = ()
    single_shot: tuple = ()
    max_embedding_residual: float = 0.0
    margin: float = np.inf


def _prepare(spec):
    b = _branch_sign(spec.branch)
    v = closed_form_vectors(spec.alpha0)[0 if b > 0 else 1]
    w = embed(v, spec.alpha0).four_vector
    return w


def simulate_sweeps(spec):
    """Evolve the prepared state through every stage of ``spec``."""
    S = spec.S
    cfg = AtomConfig.resonant(S, spec.alpha0, spec.omega_HF, spec.omega_Z, spec.reference_energy)
    omega_0 = cfg.omega_0
    w = _prepare(spec)
    c = spec.prep_weight
    norm = np.sqrt(1 + c * c)
    t = 0.0

    def five(w4, t):
        return np.concatenate([[np.exp(-1j * omega_0 * t) / norm], c * w4 / norm])

    alphas, states = [spec.alpha0], [five(w, t)]
    dyn, durations = [], []
    resid, drift, margin = 0.0, 0.0, np.inf
    for sched in spec.stage_schedules():
        if sched.duration > 0:
            tr = evolve(cfg, sched, w, dt_max=spec.dt_max, n_samples=101)
            w = tr.final
            resid = max(resid, project(w, sched.alpha_end)[1])
            drift = max(drift, tr.norm_drift)
            margin = min(margin, adiabaticity_margin(S, sched).margin)
        t += sched.duration
        alphas.append(sched.alpha_end)
        states.append(five(w, t))
        dyn.append(dynamic_phase(S, sched, spec.branch, omega_0))
        durations.append(sched.duration)
    return SweepSimulation(spec, tuple(alphas), tuple(states), tuple(dyn), tuple(durations),
                           resid, drift, margin)


def _level(branch, alpha):
    return branch * (1 if np.cos(alpha) > 0 else -1)


def readout_protocol(sim, seed=None, noise_sigma=None):
    """Turn a :class:`SweepSimulation` into measured phases.

    ``seed`` and ``noise_sigma`` override the ExperimentSpec values so Monte Carlo runs can
    share one evolution.
    """
    spec = sim.spec
    sigma = spec.noise_sigma if noise_sigma is None else noise_sigma
    rng = np.random.default_rng(spec.seed if seed is None else seed)
    phis = _phi_grid(spec.n_phi)
    branches, meas, records = [], [], []
    for k, (a, psi) in enumerate(zip(sim.boundary_alphas, sim.boundary_states)):
        try:
            rec12 = make_record(psi, (1, 2), phis, sigma, rng)
            branch = discriminate_eigenstate(rec12, a)
        except PTSimError as exc:
            raise ProtocolError(f"discrimination at boundary {k}", exc) from exc
        try:
            rec01 = make_record(psi, (0, 1), phis, sigma, rng)
            phase01, _ = extract_phase(rec01)
        except PTSimError as exc:
            raise ProtocolError(f"phase readout at boundary {k}", exc) from exc
        branches.append(branch)
        meas.append(phase01)
        records.append((rec12, rec01))
    if branches[0] != _branch_sign(spec.branch):
        raise ProtocolError("preparation", ReadoutError(
            f"prepared branch {spec.branch} read out as {branches[0]}"))

    stage_phases, flags = [], []
    level0 = _level(branches[0], sim.boundary_alphas[0])
    for k, g_d in enumerate(sim.stage_dynamic_phases):
        a0, a1 = sim.boundary_alphas[k], sim.boundary_alphas[k + 1]
        b0, b1 = branches[k], branches[k + 1]
        d_static = static_phase(a1, b1) - static_phase(a0, b0)
        d_meas = meas[k + 1] - meas[k]
        stage_phases.append(wrap_angle(d_static - d_meas - g_d) if a0 != a1 or g_d else 0.0)
        flags.append(_level(b1, a1) != _level(b0, a0))
    a_end, b_end = sim.boundary_alphas[-1], branches[-1]
    total = sum(stage_phases)
    loop = wrap_angle(total + static_phase(spec.alpha0, branches[0]) - static_phase(a_end, b_end))
    # a closed sweep returns to alpha0 (mod 2 pi) on the same branch
    turns = (a_end - spec.alpha0) / (2 * np.pi)
    closed = bool(stage_phases) and abs(turns - round(turns)) < 1e-12 and b_end == branches[0]

    single = []
    psi_end = sim.boundary_states[-1]
    g_dyn_total = sum(sim.stage_dynamic_phases)
    for g in spec.gamma_d_choices:
        # pulse phase that sets the dynamical part of the (0, 1) phase to g
        pulse = g + g_dyn_total
        single.append((float(g), populations_after_pulse(psi_end, (0, 1), pulse)))
    return ProtocolReport(
        stage_phases=tuple(stage_phases),
        stage_alphas=sim.boundary_alphas,
        branches=tuple(branches),
        exchange_flags=tuple(flags),
        exchange=_level(b_end, a_end) != level0,
        loop_phase=loop,
        geometric_phase=loop if closed else wrap_angle(total),
        records=tuple(records),
        stage_dynamic_phases=sim.stage_dynamic_phases,
        single_shot=tuple(single),
        max_embedding_residual=sim.max_embedding_residual,
        margin=sim.margin,
    )


def run_protocol(spec):
    """Prepare, sweep, read out and return the measured Berry phases."""
    try:
        sim = simulate_sweeps(spec)
    except ProtocolError:
        raise
    except PTSimError as exc:
        raise ProtocolError("evolution", exc) from exc
    return readout_protocol(sim)


#: (label, branch, alpha_map) for the four branch curves
FIG2_CURVES = (
    ("E+(a)", 1, lambda a: a),
    ("E-(pi-a)", -1, lambda a: np.pi - a),
    ("E-(a)", -1, lambda a: a),
    ("E+(pi-a)", 1, lambda a: np.pi - a),
)


def fig2_rows(alphas, gamma_ds=(0.0, np.pi / 2), ep_tol=EP_TOL):
    """Closed-form (0, 1) populations and phases of the four branch curves.

    Grid points at an EP are skipped.  Rows are dicts ordered by
    (gamma_d, curve, alpha index).
    """
    rows = []
    for gi, g in enumerate(gamma_ds):
        for ci, (label, b, amap) in enumerate(FIG2_CURVES):
            for i, a in enumerate(alphas):
                x = amap(a)
                if abs(np.cos(x)) <= ep_tol:
                    continue
                pred = phase_prediction(x, g)
                n0, n1 = predict_populations_01(x, g, b)
                rows.append({
                    "gamma_d": float(g), "curve": label, "alpha_index": i,
                    "alpha": float(a), "branch": b, "state_alpha": float(x),
                    "theta0": pred.heaviside_branch,
                    "phase": float(pred.varphi_plus if b > 0 else pred.varphi_minus),
                    "N0": float(n0), "N1": float(n1),
                })
    return rows
