"""Non-Abelian Berry connection and holonomies through exceptional points.

The connection A_mn = i L_m . dR_n/dalpha of the closed-form eigenbasis has
a simple pole at every EP (alpha = pi/2 + k pi).  A path along the real
axis is therefore deformed into a semicircle of radius ``detour_eps`` in the
complex alpha plane at every EP it crosses; which half-plane is used is a
declared property of the path.  Path ordering uses fourth-order Magnus
steps with two Gauss-Legendre nodes, on grids that are logarithmically
graded towards the detours so the 1/(alpha - alpha_EP) growth of A is
resolved uniformly.

Two transport matrices are reported.  ``raw_transport`` acts on
coefficients in the basis obtained by analytic continuation of the closed
forms along the path.  ``transport_matrix`` re-expresses the end point in
the closed-form gauge of :mod:`ptsim.pt_core` (principal square root),
which makes it independent of the detour half-plane.
"""

from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np

from .errors import BranchTrackingError, ExceptionalPointError
from .linalg import expm
from .pt_core import (EP_TOL, PTParams, closed_form_derivatives,
                      closed_form_vectors, eigensystem, sqrt_2cos, wrap_angle)

__all__ = [
    "SweepPath",
    "HolonomyResult",
    "TwoEPCycle",
    "berry_connection",
    "holonomy",
    "holonomy_extrapolated",
    "track_states",
    "two_ep_cycle",
]

DEFAULT_EPS_LIST = (1e-2, 1e-3, 1e-4)
TIE_TOL = 1e-3
_GAUSS = 0.5 / np.sqrt(3.0)


def berry_connection(p, ep_tol=EP_TOL):
    """A_mn = i L_m . d_alpha R_n from the analytic derivative of the closed forms.

    The result does not depend on ``S``; its diagonal vanishes identically
    and the off-diagonal entries equal i / (2 cos alpha).
    """
    if abs(p.cos) < ep_tol:
        raise ExceptionalPointError(
            f"Berry connection has a pole at alpha={p.alpha!r}")
    R = closed_form_vectors(p.alpha)
    L = R * np.array([[1.0], [-1.0]])
    dR = closed_form_derivatives(p.alpha)
    return 1j * (L @ dR.T)


def _eps_between(a, b):
    """EP locations strictly between a and b, ordered from a to b."""
    lo, hi = min(a, b), max(a, b)
    k0 = int(np.ceil((lo - np.pi / 2) / np.pi))
    k1 = int(np.floor((hi - np.pi / 2) / np.pi))
    eps = [np.pi / 2 + k * np.pi for k in range(k0, k1 + 1)]
    eps = [e for e in eps if lo < e < hi]
    return eps if b >= a else eps[::-1]


@dataclass(frozen=True)
class _Piece:
    kind: str            # "line", "log" or "arc"
    a: float             # line: start; log/arc: centre point (an EP)
    b: float             # line: end;   log: sign of alpha - EP; arc: radius
    u0: float
    u1: float

    def alpha(self, u):
        if self.kind == "line":
            return self.a + u * (self.b - self.a)
        if self.kind == "log":
            return self.a + self.b * np.exp(u)
        return self.a + self.b * np.exp(1j * u)

    def dalpha(self, u):
        if self.kind == "line":
            return (self.b - self.a) * np.ones_like(u)
        if self.kind == "log":
            return self.b * np.exp(u)
        return 1j * self.b * np.exp(1j * u)


@dataclass(frozen=True)
class SweepPath:
    """Real sweep alpha_start -> alpha_end with semicircular EP detours.

    ``n_steps`` is the number of integration steps per path piece (real
    segment or detour arc).  ``half_plane`` selects the side ("upper" or
    "lower") of every detour.
    """

    alpha_start: float
    alpha_end: float
    detour_eps: float = 1e-3
    n_steps: int = 1000
    half_plane: str = "lower"

    def __post_init__(self):
        if self.half_plane not in ("upper", "lower"):
            raise ValueError(f"half_plane must be 'upper' or 'lower', got {self.half_plane!r}")
        if not self.detour_eps > 0:
            raise ValueError("detour_eps must be positive")
        if self.n_steps < 100:
            raise ValueError("n_steps must be >= 100")

    @classmethod
    def half_loop(cls, alpha0, direction=1, **kwargs):
        """alpha0 -> +-pi - alpha0, crossing the EP at +-pi/2.

        Unless given, the detour side is lower for increasing sweeps and
        upper for decreasing ones; with that choice the connection integral
        reproduces the sign pattern of the EP-crossing holonomy (+pi/2 via
        +pi/2, -pi/2 via -pi/2).
        """
        if direction not in (1, -1):
            raise ValueError("direction must be +1 or -1")
        kwargs.setdefault("half_plane", "lower" if direction > 0 else "upper")
        return cls(alpha0, direction * np.pi - alpha0, **kwargs)

    @property
    def direction(self):
        return int(np.sign(self.alpha_end - self.alpha_start))

    @property
    def crossings(self):
        return _eps_between(self.alpha_start, self.alpha_end)

    def reversed(self):
        return replace(self, alpha_start=self.alpha_end, alpha_end=self.alpha_start)

    def then(self, alpha_end):
        """Continue from this path's end point, keeping its settings."""
        return replace(self, alpha_start=self.alpha_end, alpha_end=alpha_end)

    def check_endpoints(self):
        for x in (self.alpha_start, self.alpha_end):
            d = abs(((x - np.pi / 2) + np.pi / 2) % np.pi - np.pi / 2)
            if d <= self.detour_eps:
                raise ExceptionalPointError(
                    f"path endpoint {x!r} lies within detour_eps={self.detour_eps} of an EP")

    def pieces(self):
        a, b, eps = self.alpha_start, self.alpha_end, self.detour_eps
        d = self.direction
        if d == 0:
            return []
        stations = [(a, None)]
        for e in self.crossings:
            stations.append((e - d * eps, e))
        pieces = []
        cursor, after_ep = a, None
        for x, e in stations[1:] + [(b, None)]:
            pieces.extend(_real_pieces(cursor, x, after_ep, e))
            if e is None:
                break
            pieces.append(_arc(e, eps, d, self.half_plane))
            cursor, after_ep = e + d * eps, e
        return pieces


def _real_pieces(p, q, ep_before, ep_after):
    if p == q:
        return []
    if ep_before is not None and ep_after is not None:
        m = 0.5 * (p + q)
        return _real_pieces(p, m, ep_before, None) + _real_pieces(m, q, None, ep_after)
    if ep_after is not None:
        s = np.sign(p - ep_after)
        return [_Piece("log", ep_after, s, np.log(abs(p - ep_after)), np.log(abs(q - ep_after)))]
    if ep_before is not None:
        s = np.sign(q - ep_before)
        return [_Piece("log", ep_before, s, np.log(abs(p - ep_before)), np.log(abs(q - ep_before)))]
    return [_Piece("line", p, q, 0.0, 1.0)]


def _arc(e, eps, direction, half_plane):
    start = np.pi if direction > 0 else 0.0
    # increasing sweeps go pi -> 2pi (lower) or pi -> 0 (upper);
    # decreasing sweeps go 0 -> pi (upper) or 0 -> -pi (lower)
    turn = np.pi if (direction > 0) == (half_plane == "lower") else -np.pi
    return _Piece("arc", e, eps, start, start + turn)


@dataclass(frozen=True)
class HolonomyResult:
    """Path-ordered transport along a detoured sweep.

    ``phase_matrix`` holds the phases of ``transport_matrix`` on its
    permutation support (zeros elsewhere), so a single EP crossing gives
    [[0, +-pi/2], [+-pi/2, 0]].  ``connection_integral`` is the plain
    integral of A along the detoured path.
    """

    phase_matrix: np.ndarray
    permutation: bool
    transport_matrix: np.ndarray
    eps_used: float
    extrapolated: bool
    connection_integral: np.ndarray
    raw_transport: np.ndarray
    branch_sign: float
    path: SweepPath = None
    samples: tuple = field(default=(), repr=False)

    @property
    def offdiagonal_phase(self):
        return float(self.phase_matrix[1, 0].real)


def _decompose(T):
    perm = abs(T[0, 1]) + abs(T[1, 0]) > abs(T[0, 0]) + abs(T[1, 1])
    support = [(0, 1), (1, 0)] if perm else [(0, 0), (1, 1)]
    phases = np.zeros((2, 2), dtype=complex)
    for ij in support:
        if abs(T[ij]) > 0:
            phases[ij] = wrap_angle(np.angle(T[ij]))
    return phases, bool(perm)


def _connection_at(alpha):
    return berry_connection(PTParams(1.0, alpha))


def holonomy(path):
    """Integrate the connection along ``path`` and decompose the transport."""
    if path.detour_eps >= 0.1:
        raise ValueError("detour_eps must be < 0.1")
    path.check_endpoints()
    W = np.eye(2, dtype=complex)
    gamma = np.zeros((2, 2), dtype=complex)
    root = sqrt_2cos(path.alpha_start)
    for piece in path.pieces():
        u = np.linspace(piece.u0, piece.u1, path.n_steps + 1)
        for u_lo, u_hi in zip(u[:-1], u[1:]):
            h = u_hi - u_lo
            mid = 0.5 * (u_lo + u_hi)
            n1, n2 = mid - _GAUSS * h, mid + _GAUSS * h
            A1 = _connection_at(piece.alpha(n1)) * piece.dalpha(n1)
            A2 = _connection_at(piece.alpha(n2)) * piece.dalpha(n2)
            B1, B2 = 1j * A1, 1j * A2
            omega = 0.5 * h * (B1 + B2) - (np.sqrt(3.0) / 12.0) * h * h * (B1 @ B2 - B2 @ B1)
            W = expm(omega) @ W
            gamma += 0.5 * h * (A1 + A2)
            # follow sqrt(2 cos alpha) continuously to the next node
            cand = sqrt_2cos(piece.alpha(u_hi))
            root = cand if abs(cand - root) <= abs(cand + root) else -cand
    kappa = (root / sqrt_2cos(path.alpha_end)).real
    T = kappa * W
    phases, perm = _decompose(T)
    return HolonomyResult(phases, perm, T, path.detour_eps, False, gamma, W,
                          float(np.sign(kappa)), path)


def holonomy_extrapolated(path, eps_list=DEFAULT_EPS_LIST):
    """Richardson (linear in eps) extrapolation of :func:`holonomy` to eps -> 0."""
    eps_list = tuple(sorted(eps_list, reverse=True))
    if len(eps_list) < 2:
        raise ValueError("need at least two detour radii to extrapolate")
    results = tuple(holonomy(replace(path, detour_eps=e)) for e in eps_list)
    x = np.array(eps_list)

    def extrap(key):
        stack = np.array([getattr(r, key) for r in results])
        flat = stack.reshape(len(results), -1)
        out = np.empty(flat.shape[1], dtype=complex)
        for j in range(flat.shape[1]):
            re = np.polyfit(x, flat[:, j].real, 1)[1]
            im = np.polyfit(x, flat[:, j].imag, 1)[1]
            out[j] = re + 1j * im
        return out.reshape(stack.shape[1:])

    T = extrap("transport_matrix")
    _, perm = _decompose(T)
    phases = extrap("phase_matrix")
    return HolonomyResult(phases, perm, T, 0.0, True, extrap("connection_integral"),
                          extrap("raw_transport"), results[-1].branch_sign, path, results)


def _normalized_overlaps(prev, cur):
    O = np.abs(prev.left @ cur.right.T)
    O /= np.linalg.norm(prev.left, axis=1)[:, None]
    O /= np.linalg.norm(cur.right, axis=1)[None, :]
    return O


def _track_on_grid(alphas, S, tie_tol, ep_tol):
    systems = []
    for k, a in enumerate(alphas):
        es = eigensystem(PTParams(S, float(a)), ep_tol=ep_tol)
        if es.is_exceptional:
            raise BranchTrackingError(f"sample {k} (alpha={a!r}) sits on an EP", step=k)
        if systems:
            O = _normalized_overlaps(systems[-1], es)
            rel = O / O.sum(axis=1, keepdims=True)
            if np.any(np.abs(rel[:, 0] - rel[:, 1]) < tie_tol):
                raise BranchTrackingError(
                    f"branch overlap tie at step {k} (alpha={a!r})", step=k)
            choice = np.argmax(rel, axis=1)
            if choice[0] == choice[1]:
                raise BranchTrackingError(f"both labels claim one branch at step {k}", step=k)
            es = es.reordered(tuple(es.branches[c] for c in choice))
        systems.append(es)
    return systems


def track_states(path, S=1.0, tie_tol=TIE_TOL, ep_tol=EP_TOL, retries=3):
    """Eigensystems along the real sweep, labelled by continuity.

    Slot 0 of every returned :class:`EigenSystem` is the branch continuing
    the initial ``+`` state, chosen by maximal normalised bilinear overlap
    with the previous sample.  Across an EP the closed-form label of slot 0
    flips.  If a grid node lands on (or ambiguously close to) an EP the grid
    is refined by one point, up to ``retries`` times.
    """
    n = path.n_steps
    last_error = None
    for _ in range(retries + 1):
        if path.direction == 0:
            alphas = np.array([path.alpha_start])
        else:
            alphas = np.linspace(path.alpha_start, path.alpha_end, n + 1)
        try:
            return _track_on_grid(alphas, S, tie_tol, ep_tol)
        except BranchTrackingError as exc:
            last_error = exc
            n += 1
    raise last_error


class TwoEPCycle(NamedTuple):
    final_factor: complex
    intermediate_factor: complex
    first: HolonomyResult
    second: HolonomyResult


def two_ep_cycle(alpha0, direction=1, branch=1, extrapolate=True, **path_kwargs):
    """Sweep through two EPs of opposite chirality in the same direction.

    alpha0 -> d pi - alpha0 -> alpha0 + 2 d pi.  Returns the coefficient of
    the initial branch after the full cycle (closed-form gauge at the end
    point) and the coefficient on the exchanged branch after the first
    crossing.
    """
    if abs(np.cos(alpha0)) <= EP_TOL:
        raise ExceptionalPointError(f"alpha0={alpha0!r} is an EP")
    first_path = SweepPath.half_loop(alpha0, direction, **path_kwargs)
    second_path = first_path.then(alpha0 + 2 * direction * np.pi)
    run = holonomy_extrapolated if extrapolate else holonomy
    first, second = run(first_path), run(second_path)
    col = 0 if branch == 1 else 1
    other = 1 - col
    intermediate = complex(first.transport_matrix[other, col])
    total = second.transport_matrix @ first.transport_matrix
    return TwoEPCycle(complex(total[col, col]), intermediate, first, second)
