import numpy as np
import pytest
import scipy.linalg
from scipy.integrate import quad

from ptsim.biorthogonal import (SweepPath, berry_connection, holonomy, holonomy_extrapolated,
                                track_states, two_ep_cycle)
from ptsim.errors import BranchTrackingError, ExceptionalPointError
from ptsim.pt_core import PTParams, closed_form_vectors, eigensystem

SX = np.array([[0, 1], [1, 0]], dtype=complex)


def _cquad(f, a, b):
    re = quad(lambda x: f(x).real, a, b, limit=400, epsabs=1e-13, epsrel=1e-13)[0]
    im = quad(lambda x: f(x).imag, a, b, limit=400, epsabs=1e-13, epsrel=1e-13)[0]
    return re + 1j * im


def _gamma_oracle(a0, a1, eps, half_plane):
    """Integral of i/(2 cos alpha) along the detoured path (one EP at pi/2)."""
    f = lambda x: 1j / (2 * np.cos(x))
    e = np.pi / 2
    if not (min(a0, a1) < e < max(a0, a1)):
        return _cquad(f, a0, a1)
    d = np.sign(a1 - a0)
    g = _cquad(f, a0, e - d * eps) + _cquad(f, e + d * eps, a1)
    th0 = np.pi if d > 0 else 0.0
    turn = np.pi if (d > 0) == (half_plane == "lower") else -np.pi
    arc = lambda th: f(e + eps * np.exp(1j * th)) * 1j * eps * np.exp(1j * th)
    return g + _cquad(arc, th0, th0 + turn)


# --------------------------------------------------------------- connection


def test_connection_at_zero():
    A = berry_connection(PTParams(1.0, 0.0))
    assert np.abs(np.diag(A)).max() < 1e-15
    assert abs(abs(A[0, 1]) - 0.5) < 1e-15 and abs(abs(A[1, 0]) - 0.5) < 1e-15


@pytest.mark.parametrize("a", [-1.3, -0.4, 0.0, 0.3, 1.1, 2.0, 4.0])
def test_connection_matches_finite_differences(a):
    h = 1e-6
    es = eigensystem(PTParams(1.0, a))
    dR = (closed_form_vectors(a + h) - closed_form_vectors(a - h)) / (2 * h)
    A_fd = 1j * es.left @ dR.T
    assert np.abs(berry_connection(PTParams(1.0, a)) - A_fd).max() < 1e-6


def test_connection_independent_of_scale():
    A1 = berry_connection(PTParams(1.0, 0.7))
    A2 = berry_connection(PTParams(37.0, 0.7))
    assert np.array_equal(A1, A2)


def test_connection_zero_diagonal():
    for a in np.linspace(-1.5, 1.5, 101):
        assert np.abs(np.diag(berry_connection(PTParams(1.0, a)))).max() <= 1e-10


def test_connection_simple_pole():
    for a in np.pi / 2 - np.logspace(-1, -7, 13):
        A = berry_connection(PTParams(1.0, a))
        c = abs(np.cos(a))
        assert abs(abs(A[0, 1]) * c - 0.5) < 1e-9
        assert abs(abs(A[1, 0]) * c - 0.5) < 1e-9
        # the diagonal is a cancellation of O(1/cos^2) terms
        assert np.abs(np.diag(A)).max() * c * c < 1e-14


def test_connection_refuses_ep():
    with pytest.raises(ExceptionalPointError):
        berry_connection(PTParams(1.0, np.pi / 2))


# --------------------------------------------------------------- paths


def test_path_validation():
    with pytest.raises(ValueError):
        SweepPath(0.0, 1.0, n_steps=99)
    with pytest.raises(ValueError):
        SweepPath(0.0, 1.0, half_plane="left")
    with pytest.raises(ValueError):
        holonomy(SweepPath(0.3, np.pi - 0.3, detour_eps=0.1))
    with pytest.raises(ExceptionalPointError):
        holonomy(SweepPath(np.pi / 2 - 1e-4, 2.0, detour_eps=1e-3))


def test_half_loop_constructor():
    p = SweepPath.half_loop(0.3, 1)
    assert p.alpha_end == pytest.approx(np.pi - 0.3) and p.half_plane == "lower"
    q = SweepPath.half_loop(0.3, -1)
    assert q.alpha_end == pytest.approx(-np.pi - 0.3) and q.half_plane == "upper"
    assert p.direction == 1 and q.direction == -1
    assert p.crossings == [np.pi / 2] and q.crossings == [-np.pi / 2]


# --------------------------------------------------------------- holonomy


@pytest.mark.parametrize("half_plane,kappa", [("lower", 1.0), ("upper", -1.0)])
def test_holonomy_matches_quadrature_oracle(half_plane, kappa):
    a0, eps = 0.3, 1e-3
    path = SweepPath(a0, np.pi - a0, detour_eps=eps, half_plane=half_plane)
    r = holonomy(path)
    g = _gamma_oracle(a0, np.pi - a0, eps, half_plane)
    assert abs(r.connection_integral[0, 1] - g) < 1e-9
    W = scipy.linalg.expm(1j * g * SX)
    assert np.abs(r.raw_transport - W).max() < 1e-9
    assert r.branch_sign == kappa
    assert np.abs(r.transport_matrix - kappa * W).max() < 1e-9


def test_holonomy_half_plane_sign_of_connection_integral():
    lower = holonomy(SweepPath(0.3, np.pi - 0.3, half_plane="lower"))
    upper = holonomy(SweepPath(0.3, np.pi - 0.3, half_plane="upper"))
    assert abs(lower.connection_integral[0, 1] - np.pi / 2) < 1e-9
    assert abs(upper.connection_integral[0, 1] + np.pi / 2) < 1e-9
    # the tracked transport does not depend on the side of the detour
    assert np.abs(lower.transport_matrix - upper.transport_matrix).max() < 1e-9


def test_holonomy_without_ep_matches_closed_form():
    a0, a1 = 0.3, 1.2
    L = lambda x: np.log(1 / np.cos(x) + np.tan(x))
    T_ref = scipy.linalg.expm(-0.5 * (L(a1) - L(a0)) * SX)
    r = holonomy(SweepPath(a0, a1))
    assert np.abs(r.transport_matrix - T_ref).max() < 1e-10
    assert not r.permutation


def test_half_loop_phases():
    up = holonomy(SweepPath.half_loop(0.3, 1))
    assert up.permutation
    assert np.allclose(up.phase_matrix, [[0, np.pi / 2], [np.pi / 2, 0]], atol=1e-6)
    assert np.allclose(up.transport_matrix, 1j * SX, atol=1e-9)
    down = holonomy(SweepPath.half_loop(0.3, -1))
    assert np.allclose(down.phase_matrix, [[0, -np.pi / 2], [-np.pi / 2, 0]], atol=1e-6)


def test_zero_length_path():
    r = holonomy(SweepPath(0.3, 0.3))
    assert not r.permutation
    assert np.array_equal(r.phase_matrix, np.zeros((2, 2)))
    assert np.allclose(r.transport_matrix, np.eye(2))


def test_eps_convergence_and_extrapolation():
    path = SweepPath.half_loop(0.3, 1)
    phases = [holonomy(SweepPath.half_loop(0.3, 1, detour_eps=e)).offdiagonal_phase
              for e in (1e-2, 1e-3, 1e-4)]
    assert all(abs(p - np.pi / 2) < 1e-3 for p in phases)
    ex = holonomy_extrapolated(path)
    assert ex.extrapolated and ex.eps_used == 0.0 and len(ex.samples) == 3
    assert abs(ex.offdiagonal_phase - np.pi / 2) <= 1e-3


def test_direction_antisymmetry():
    path = SweepPath.half_loop(0.5, 1)
    fwd, back = holonomy(path), holonomy(path.reversed())
    assert np.abs(back.phase_matrix + fwd.phase_matrix).max() < 1e-6
    assert np.abs(back.transport_matrix @ fwd.transport_matrix - np.eye(2)).max() < 1e-8


def test_composition():
    a0 = 0.4
    first = SweepPath.half_loop(a0, 1)
    second = first.then(a0 + 2 * np.pi)
    whole = SweepPath(a0, a0 + 2 * np.pi)
    T12 = holonomy(second).transport_matrix @ holonomy(first).transport_matrix
    assert np.abs(holonomy(whole).transport_matrix - T12).max() < 1e-8


@pytest.mark.parametrize("end,perm", [(np.pi - 0.3, True), (2 * np.pi + 0.3, False),
                                      (3 * np.pi - 0.3, True), (-np.pi - 0.3, True)])
def test_permutation_parity(end, perm):
    r = holonomy(SweepPath(0.3, end))
    assert r.permutation is perm
    assert abs(np.linalg.det(r.transport_matrix)) > 0.5


# --------------------------------------------------------------- branch tracking


def test_tracking_without_crossing_keeps_order():
    states = track_states(SweepPath(-1.2, 1.3))
    assert all(s.branches == (1, -1) for s in states)
    assert all(s.values[0].real >= s.values[1].real for s in states)


def test_tracking_across_one_ep_exchanges_labels():
    states = track_states(SweepPath(0.3, np.pi - 0.3))
    assert states[0].branches == (1, -1) and states[-1].branches == (-1, 1)
    v = states[-1].right[0]
    ref = closed_form_vectors(np.pi - 0.3)[1]
    cos = abs(np.vdot(ref, v)) / (np.linalg.norm(ref) * np.linalg.norm(v))
    assert abs(cos - 1) < 1e-12


def test_tracking_across_two_eps_restores_labels():
    states = track_states(SweepPath(0.3, 2 * np.pi + 0.3))
    assert states[-1].branches == (1, -1)


def test_tracking_tie_reports_step():
    h = 0.02
    a = np.pi / 2 - 50 * h + 1e-6
    path = SweepPath(a, a + 100 * h, n_steps=100)
    with pytest.raises(BranchTrackingError) as info:
        track_states(path, retries=0)
    assert info.value.step in (50, 51)
    # refining the grid by one point resolves it
    assert track_states(path)[-1].branches == (-1, 1)


# --------------------------------------------------------------- two-EP cycle


@pytest.mark.parametrize("direction", [1, -1])
def test_two_ep_cycle_examples(direction):
    c = two_ep_cycle(0.4, direction)
    assert abs(c.intermediate_factor - direction * 1j) < 1e-3
    assert abs(c.final_factor + 1) < 1e-3


@pytest.mark.parametrize("a0", np.round(np.arange(0.1, 1.31, 0.2), 2))
def test_two_ep_cycle_final_factor_independent_of_alpha0(a0):
    for branch in (1, -1):
        assert abs(two_ep_cycle(a0, 1, branch=branch, extrapolate=False).final_factor + 1) < 1e-3


def test_two_ep_cycle_refuses_ep():
    with pytest.raises(ExceptionalPointError):
        two_ep_cycle(np.pi / 2, 1)
