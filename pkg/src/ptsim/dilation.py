"""Four-level Hermitian dilation of the PT-symmetric qubit.

A two-level state v is embedded as the 4-vector (v, eta v).  The Hermitian
Hamiltonian H_F generates an evolution that maps (v, eta v) to
(U_PT v, eta U_PT v), so the upper block of the four-level system follows the
non-unitary PT dynamics.  Components are ordered |1>, |2>, |3>, |4>.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ExceptionalPointError
from .linalg import matrix_exp
from .pt_core import EP_TOL, PTParams, propagator_closed

__all__ = [
    "EtaMetric",
    "EmbeddedState",
    "eta",
    "eta_eigenvalues",
    "build_hf",
    "embed",
    "project",
    "verify_dilation",
]


@dataclass(frozen=True)
class EtaMetric:
    """eta(alpha) = [[1, -i sin a], [i sin a, 1]] / cos a."""

    matrix: np.ndarray
    alpha: float

    @property
    def inverse(self):
        # eta^{-1} = [[1, i sin a], [-i sin a, 1]] / cos a, since det(eta) = 1
        s, c = np.sin(self.alpha), np.cos(self.alpha)
        return np.array([[1.0, 1j * s], [-1j * s, 1.0]]) / c

    def __matmul__(self, other):
        return self.matrix @ other


@dataclass(frozen=True)
class EmbeddedState:
    """Normalised (v, eta v); ``norm`` is the length before normalisation."""

    four_vector: np.ndarray
    upper: np.ndarray
    alpha: float
    norm: float


def _check_alpha(alpha, ep_tol):
    alpha = float(alpha)
    if abs(np.cos(alpha)) <= ep_tol:
        raise ExceptionalPointError(f"eta diverges at the EP alpha={alpha!r}")
    return alpha


def eta(alpha, ep_tol=EP_TOL):
    alpha = _check_alpha(alpha, ep_tol)
    s, c = np.sin(alpha), np.cos(alpha)
    m = np.array([[1.0, -1j * s], [1j * s, 1.0]]) / c
    return EtaMetric(m, alpha)


def eta_eigenvalues(alpha):
    """Closed-form eigenvalues (1 - sin a)/cos a and (1 + sin a)/cos a."""
    s, c = np.sin(alpha), np.cos(alpha)
    return np.array([(1 - s) / c, (1 + s) / c])


def build_hf(p):
    """chi [[0, c, is, 0], [c, 0, 0, -is], [-is, 0, 0, c], [0, is, c, 0]]."""
    if not p.is_real:
        raise ValueError("the dilation is defined for real alpha only")
    a = complex(p.alpha).real
    c, s = np.cos(a), np.sin(a)
    chi = p.S * c
    return chi * np.array([
        [0, c, 1j * s, 0],
        [c, 0, 0, -1j * s],
        [-1j * s, 0, 0, c],
        [0, 1j * s, c, 0],
    ], dtype=complex)


def embed(v, alpha, ep_tol=EP_TOL):
    v = np.asarray(v, dtype=complex)
    if v.shape != (2,) or not np.any(v):
        raise ValueError("embed needs a non-zero 2-vector")
    metric = eta(alpha, ep_tol)
    w = np.concatenate([v, metric.matrix @ v])
    n = float(np.linalg.norm(w))
    return EmbeddedState(w / n, v, metric.alpha, n)


def project(w, alpha, ep_tol=EP_TOL):
    """Upper block of ``w`` and the relative distance from the embedded subspace."""
    w = np.asarray(w, dtype=complex)
    metric = eta(alpha, ep_tol)
    upper, lower = w[:2], w[2:]
    residual = float(np.linalg.norm(lower - metric.matrix @ upper) / np.linalg.norm(w))
    return upper.copy(), residual


def verify_dilation(p, t, v, hf=None):
    """|| U_F (v, eta v) - (U_PT v, eta U_PT v) || with U_F = exp(-i H_F t).

    ``hf`` overrides the four-level Hamiltonian (for mutation tests).
    """
    a = complex(p.alpha).real
    metric = eta(a)
    v = np.asarray(v, dtype=complex)
    H = build_hf(p) if hf is None else np.asarray(hf, dtype=complex)
    lhs = matrix_exp(H, t) @ np.concatenate([v, metric.matrix @ v])
    u = propagator_closed(PTParams(p.S, a), t) @ v
    rhs = np.concatenate([u, metric.matrix @ u])
    return float(np.linalg.norm(lhs - rhs))
