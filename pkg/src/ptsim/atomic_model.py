"""Five-level atomic realisation of the dilated Hamiltonian.

Levels |1>..|4> carry the dilation; |0> is an uncoupled reference level used
only by the interferometric readout.  Level energies are
e = (e0, 0, omega_Z, omega_HF, omega_HF + omega_Z) for (|0>, |1>, ..., |4>)
and the four drives couple

    |1>-|3> at omega_1 (Omega_1),  |3>-|4> at omega_2 (Omega_2),
    |2>-|4> at omega_3 (Omega_3),  |1>-|2> at omega_4 (Omega_4).

The lab-frame coupling |j><k| (j < k) carries Omega exp(+i omega t).  In the
frame psi = V(t) psi_rot with
V = diag(1, exp(-i omega_4 t), exp(-i omega_1 t), exp(-i (omega_1 + omega_2) t))
the Hamiltonian is time independent iff omega_1 + omega_2 = omega_3 + omega_4,
with diagonal (0, Delta_4, Delta_1, Delta_1 + Delta_2).
"""

from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np
from scipy.integrate import solve_ivp

from .dilation import project
from .errors import ExceptionalPointError, FrequencyMismatchError, IntegrationError
from .linalg import matrix_exp
from .pt_core import closed_form_vectors

__all__ = [
    "AtomConfig",
    "Schedule",
    "Trajectory",
    "Margin",
    "rabi_schedule",
    "lab_hamiltonian",
    "rotating_transform",
    "rotating_hamiltonian",
    "hf_of_alpha",
    "frame_equivalence_residual",
    "evolve_lab",
    "evolve",
    "adiabaticity_margin",
    "diabatic_error",
]

#: default splittings in units of S; any values with omega_HF >> omega_Z >> S
#: behave the same in the rotating frame
DEFAULT_OMEGA_HF = 40.0
DEFAULT_OMEGA_Z = 5.0
NORM_DRIFT_MAX = 1e-6
_MISMATCH_TOL = 1e-12


def rabi_schedule(S, alpha):
    """(Omega_1, Omega_2, Omega_3, Omega_4) that realise H_F(S, alpha)."""
    s, c = np.sin(alpha), np.cos(alpha)
    o1 = 1j * S * s * c
    o2 = S * c * c + 0j
    if np.ndim(alpha) == 0:
        return (complex(o1), complex(o2), complex(-o1), complex(o2))
    return (o1, o2, -o1, o2)


@dataclass(frozen=True)
class AtomConfig:
    """Level energies, drive frequencies and Rabi amplitudes.

    ``omega_e`` lists the energies of (|0>, |1>, |2>, |3>, |4>) with |1> at
    zero.  ``rabi`` and ``drive_freqs`` are ordered (1, 2, 3, 4) as in the
    module docstring.
    """

    omega_e: tuple
    omega_HF: float
    omega_Z: float
    drive_freqs: tuple
    rabi: tuple
    S: float
    alpha: float

    def __post_init__(self):
        if len(self.omega_e) != 5 or len(self.drive_freqs) != 4 or len(self.rabi) != 4:
            raise ValueError("need 5 level energies, 4 drive frequencies and 4 Rabi amplitudes")
        if self.omega_e[1] != 0.0:
            raise ValueError("|1> is the zero of energy")
        if not self.S > 0:
            raise ValueError("S must be positive")

    @classmethod
    def resonant(cls, S, alpha, omega_HF=DEFAULT_OMEGA_HF, omega_Z=DEFAULT_OMEGA_Z,
                 omega_0=None, detunings=(0.0, 0.0, 0.0, 0.0)):
        """Config on resonance (up to ``detunings``) with the matching Rabi schedule.

        ``omega_0`` is the energy of the reference level |0> (default
        omega_Z).  ``detunings`` = (Delta_1, ..., Delta_4) shift the drive
        frequencies as omega_i = transition_i - Delta_i.
        """
        e0 = omega_Z if omega_0 is None else omega_0
        energies = (float(e0), 0.0, float(omega_Z), float(omega_HF), float(omega_HF + omega_Z))
        d1, d2, d3, d4 = detunings
        drives = (omega_HF - d1, omega_Z - d2, omega_HF - d3, omega_Z - d4)
        return cls(energies, float(omega_HF), float(omega_Z), tuple(map(float, drives)),
                   rabi_schedule(S, alpha), float(S), float(alpha))

    def with_alpha(self, alpha):
        return replace(self, alpha=float(alpha), rabi=rabi_schedule(self.S, alpha))

    @property
    def omega_0(self):
        return self.omega_e[0]

    def detunings(self):
        """(Delta_1, Delta_2, Delta_3, Delta_4)."""
        _, e1, e2, e3, e4 = self.omega_e
        w1, w2, w3, w4 = self.drive_freqs
        return (e3 - e1 - w1, e4 - e3 - w2, e4 - e2 - w3, e2 - e1 - w4)

    def frequency_mismatch(self):
        w1, w2, w3, w4 = self.drive_freqs
        return w1 + w2 - w3 - w4


def _couplings(rabi, diag):
    o1, o2, o3, o4 = rabi
    H = np.diag(np.asarray(diag, dtype=complex))
    H[0, 1], H[0, 2], H[2, 3], H[1, 3] = o4, o1, o2, o3
    H[1, 0], H[2, 0], H[3, 2], H[3, 1] = np.conj([o4, o1, o2, o3])
    return H


def lab_hamiltonian(cfg, t):
    """H_0 + H_int(t) on (|1>, |2>, |3>, |4>)."""
    w1, w2, w3, w4 = cfg.drive_freqs
    o1, o2, o3, o4 = cfg.rabi
    ph = np.exp(1j * np.array([w1, w2, w3, w4]) * t)
    return _couplings((o1 * ph[0], o2 * ph[1], o3 * ph[2], o4 * ph[3]), cfg.omega_e[1:])


def rotating_transform(cfg, t):
    w1, w2, _, w4 = cfg.drive_freqs
    return np.diag(np.exp(-1j * np.array([0.0, w4, w1, w1 + w2]) * t))


def rotating_hamiltonian(cfg):
    """Time-independent rotating-frame Hamiltonian V^dag H V - i V^dag dV/dt."""
    mismatch = cfg.frequency_mismatch()
    scale = max(1.0, *map(abs, cfg.drive_freqs))
    if abs(mismatch) > _MISMATCH_TOL * scale:
        raise FrequencyMismatchError(mismatch)
    d1, d2, _, d4 = cfg.detunings()
    return _couplings(cfg.rabi, (0.0, d4, d1, d1 + d2))


def hf_of_alpha(S, alpha, diag=(0.0, 0.0, 0.0, 0.0)):
    """Rotating-frame Hamiltonian for the Rabi schedule at ``alpha``."""
    return _couplings(rabi_schedule(S, alpha), diag)


def _integrate(rhs, t_span, psi0, t_eval, rtol, atol, max_step):
    sol = solve_ivp(rhs, t_span, np.asarray(psi0, dtype=complex), method="DOP853",
                    t_eval=t_eval, rtol=rtol, atol=atol, max_step=max_step)
    if sol.status != 0:
        raise IntegrationError(f"integration failed: {sol.message}")
    return sol


def evolve_lab(cfg, t_eval, psi0, rtol=1e-12, atol=1e-13, max_step=np.inf):
    """Integrate i dpsi/dt = H_lab(t) psi; returns states at ``t_eval`` (rows)."""
    t_eval = np.asarray(t_eval, dtype=float)

    def rhs(t, y):
        return -1j * (lab_hamiltonian(cfg, t) @ y)

    sol = _integrate(rhs, (0.0, float(t_eval[-1])), psi0, t_eval, rtol, atol, max_step)
    return sol.y.T


def frame_equivalence_residual(cfg, t_final, psi0, n_samples=11):
    """max_t || V(t)^dag psi_lab(t) - exp(-i H_rot t) psi0 ||."""
    H = rotating_hamiltonian(cfg)
    ts = np.linspace(0.0, t_final, n_samples)
    lab = evolve_lab(cfg, ts, psi0)
    err = 0.0
    for t, y in zip(ts, lab):
        rot = rotating_transform(cfg, t).conj().T @ y
        err = max(err, float(np.linalg.norm(rot - matrix_exp(H, t) @ psi0)))
    return err


@dataclass(frozen=True)
class Schedule:
    """alpha(t) linear between breakpoints (times[k], alphas[k])."""

    times: tuple
    alphas: tuple

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        if len(t) != len(self.alphas) or len(t) < 1:
            raise ValueError("times and alphas must be non-empty and of equal length")
        if t[0] != 0.0 or np.any(np.diff(t) < 0):
            raise ValueError("times must start at 0 and be non-decreasing")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(self.alphas))):
            raise ValueError("schedule breakpoints must be finite")

    @classmethod
    def constant(cls, alpha, duration):
        return cls((0.0, float(duration)), (float(alpha), float(alpha)))

    @classmethod
    def linear(cls, alpha_start, alpha_end, duration):
        if not duration > 0:
            raise ValueError("duration must be positive")
        return cls((0.0, float(duration)), (float(alpha_start), float(alpha_end)))

    @classmethod
    def smoothstep(cls, alpha_start, alpha_end, duration, n_breakpoints=64):
        """Cubic smoothstep ramp sampled at ``n_breakpoints`` + 1 breakpoints."""
        if not duration > 0:
            raise ValueError("duration must be positive")
        s = np.linspace(0.0, 1.0, n_breakpoints + 1)
        f = s * s * (3 - 2 * s)
        return cls(tuple(float(duration) * s),
                   tuple(float(alpha_start) + (float(alpha_end) - float(alpha_start)) * f))

    @classmethod
    def from_rate(cls, alpha_start, alpha_end, rate, ep_zone=0.0, ep_slowdown=1.0):
        """Constant |d alpha/dt| = rate, reduced by ``ep_slowdown`` within
        ``ep_zone`` of every EP on the way."""
        if not rate > 0:
            raise ValueError("rate must be positive")
        a, b = float(alpha_start), float(alpha_end)
        d = np.sign(b - a)
        marks = [a]
        if ep_zone > 0 and d != 0:
            lo, hi = min(a, b), max(a, b)
            k0 = int(np.floor((lo - ep_zone - np.pi / 2) / np.pi))
            k1 = int(np.ceil((hi + ep_zone - np.pi / 2) / np.pi))
            for k in range(k0, k1 + 1):
                e = np.pi / 2 + k * np.pi
                for x in (e - ep_zone, e + ep_zone):
                    if lo < x < hi:
                        marks.append(x)
        marks = sorted(set(marks + [b]), reverse=bool(d < 0))
        times = [0.0]
        for x0, x1 in zip(marks[:-1], marks[1:]):
            mid = 0.5 * (x0 + x1)
            near = ep_zone > 0 and abs(np.cos(mid)) < np.sin(ep_zone)
            r = rate / ep_slowdown if near else rate
            times.append(times[-1] + abs(x1 - x0) / r)
        return cls(tuple(times), tuple(marks))

    def then(self, other):
        if other.alphas[0] != self.alphas[-1]:
            raise ValueError("schedules must join continuously")
        t0 = self.times[-1]
        return Schedule(self.times + tuple(t0 + t for t in other.times[1:]),
                        self.alphas + other.alphas[1:])

    @property
    def duration(self):
        return float(self.times[-1])

    @property
    def alpha_start(self):
        return float(self.alphas[0])

    @property
    def alpha_end(self):
        return float(self.alphas[-1])

    def segment_rates(self):
        t = np.diff(self.times)
        a = np.diff(self.alphas)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(t > 0, a / np.where(t > 0, t, 1.0), 0.0)

    @property
    def rate(self):
        r = self.segment_rates()
        return float(np.max(np.abs(r))) if len(r) else 0.0

    def alpha_of_t(self, t):
        return np.interp(t, self.times, self.alphas)

    def dalpha_dt(self, t):
        r = self.segment_rates()
        if not len(r):
            return np.zeros_like(np.asarray(t, dtype=float))
        k = np.clip(np.searchsorted(self.times, t, side="right") - 1, 0, len(r) - 1)
        return r[k]

    def integral_cos(self):
        """Exact integral of cos(alpha(t)) over the schedule."""
        total = 0.0
        for (t0, t1), (a0, a1) in zip(zip(self.times[:-1], self.times[1:]),
                                      zip(self.alphas[:-1], self.alphas[1:])):
            if t1 == t0:
                continue
            if a1 == a0:
                total += (t1 - t0) * np.cos(a0)
            else:
                total += (t1 - t0) * (np.sin(a1) - np.sin(a0)) / (a1 - a0)
        return float(total)


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    alphas: np.ndarray
    embedding_residuals: np.ndarray
    accumulated_dynamic_phase: float
    norm_drift: float = field(default=0.0)

    @property
    def final(self):
        return self.states[-1]


def evolve(cfg_base, sched, psi0, dt_max=None, n_samples=201, rtol=1e-12, atol=1e-13,
           branch=1):
    """Integrate i dpsi/dt = H_F(alpha(t)) psi in the rotating frame.

    The detunings of ``cfg_base`` stay on the diagonal and the couplings
    follow :func:`rabi_schedule` at alpha(t).  ``dt_max`` defaults to 1/S.
    The norm is not renormalised; a drift above 1e-6 raises.
    ``accumulated_dynamic_phase`` is -branch * S * int cos(alpha) dt, the
    dynamical phase of the closed-form eigenvector of label ``branch``.
    """
    psi0 = np.asarray(psi0, dtype=complex)
    if psi0.shape != (4,):
        raise ValueError("psi0 must be a 4-vector")
    if abs(np.linalg.norm(psi0) - 1.0) > 1e-9:
        raise ValueError("psi0 must be normalised")
    S = cfg_base.S
    d1, d2, _, d4 = cfg_base.detunings()
    diag = (0.0, d4, d1, d1 + d2)
    dt_max = 1.0 / S if dt_max is None else dt_max
    T = sched.duration
    ts = np.linspace(0.0, T, max(2, n_samples))
    if T == 0:
        states = np.array([psi0, psi0])
    else:
        def rhs(t, y):
            return -1j * (hf_of_alpha(S, float(sched.alpha_of_t(t)), diag) @ y)

        # integrate piecewise so every breakpoint is hit exactly
        states = [psi0]
        y = psi0
        cuts = sorted(set(sched.times) | {0.0, T})
        for t0, t1 in zip(cuts[:-1], cuts[1:]):
            if t1 <= t0:
                continue
            inside = ts[(ts > t0) & (ts <= t1)]
            t_eval = np.unique(np.concatenate([inside, [t1]]))
            sol = _integrate(rhs, (t0, t1), y, t_eval, rtol, atol, dt_max)
            keep = np.isin(sol.t, inside)
            states.extend(sol.y.T[keep])
            y = sol.y[:, -1]
        states = np.array(states)
    drift = float(np.max(np.abs(np.linalg.norm(states, axis=1) - 1.0)))
    if drift > NORM_DRIFT_MAX:
        raise IntegrationError(f"norm drift {drift:.3g} exceeds {NORM_DRIFT_MAX}")
    alphas = sched.alpha_of_t(ts)
    residuals = np.full(len(ts), np.nan)
    for k, (a, w) in enumerate(zip(alphas, states)):
        try:
            residuals[k] = project(w, a, ep_tol=1e-6)[1]
        except ExceptionalPointError:
            pass
    dyn = -branch * S * sched.integral_cos()
    return Trajectory(ts, states, alphas, residuals, dyn, drift)


class Margin(NamedTuple):
    """Adiabaticity margins; ``margin`` uses the gap 2 S |cos alpha|."""

    margin: float
    crosses_ep: bool
    rabi_margin: float


def adiabaticity_margin(S, sched, n_per_segment=1001):
    """min_t 2 S |cos alpha(t)| / |d alpha/dt| (+inf for a static schedule).

    ``rabi_margin`` also includes the non-zero |Omega_i| in the minimum.
    A schedule that reaches or crosses an EP reports 0 with the flag set.
    """
    margin, rabi_margin, crosses = np.inf, np.inf, False
    for (a0, a1), r in zip(zip(sched.alphas[:-1], sched.alphas[1:]), sched.segment_rates()):
        if r == 0:
            crosses |= abs(np.cos(a0)) < 1e-12
            continue
        lo, hi = min(a0, a1), max(a0, a1)
        k = np.ceil((lo - np.pi / 2) / np.pi)
        if np.pi / 2 + k * np.pi <= hi:
            crosses = True
            margin = rabi_margin = 0.0
            continue
        gap = 2 * S * min(abs(np.cos(a0)), abs(np.cos(a1)))
        margin = min(margin, gap / abs(r))
        a = np.linspace(a0, a1, n_per_segment)
        om = np.abs(np.array(rabi_schedule(S, a)))
        om = np.where(om > 1e-12 * S, om, np.inf)
        local = np.minimum(om.min(axis=0), 2 * S * np.abs(np.cos(a)))
        rabi_margin = min(rabi_margin, float(local.min()) / abs(r))
    return Margin(float(margin), bool(crosses), float(rabi_margin))


def diabatic_error(w, alpha, branch=1):
    """|c_other| / |c_target| of the upper block in the biorthogonal eigenbasis at alpha.

    Coefficients use the bilinear pairing c_k = L_k^T u with L+ = R+, L- = -R-.
    """
    u, _ = project(w, alpha)
    rp, rm = closed_form_vectors(alpha)
    cp, cm = abs(rp @ u), abs(rm @ u)
    return float(cm / cp) if branch > 0 else float(cp / cm)
