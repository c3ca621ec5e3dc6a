"""Two-level PT-symmetric Hamiltonian, its spectrum and propagator.

Conventions
-----------
hbar = 1.  The Hamiltonian is

    H(alpha) = S [[i sin(alpha), 1], [1, -i sin(alpha)]]

with eigenvalues +-S cos(alpha).  Right eigenvectors use the explicit gauge

    R_+ = exp(+i alpha/2) / sqrt(2 cos alpha) * (1,  exp(-i alpha))
    R_- = i exp(-i alpha/2) / sqrt(2 cos alpha) * (1, -exp(+i alpha))

and the square root is the principal branch.  On the real axis with
cos(alpha) < 0 this means sqrt(2 cos alpha) = +i sqrt(2 |cos alpha|); the
sign of a zero imaginary part is never consulted.  Because H is complex
symmetric, left eigenvectors are transposes of right ones; normalising them
by the unconjugated pairing L_m . R_n = delta_mn gives L_+ = R_+ and
L_- = -R_-.
"""

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import ExceptionalPointError
from .linalg import matrix_exp

__all__ = [
    "EP_TOL",
    "PTParams",
    "Regime",
    "EigenSystem",
    "SIGMA_X",
    "bilinear",
    "build_hpt",
    "eigensystem",
    "ep_state",
    "propagator_closed",
    "matrix_exp",
    "pt_symmetry_check",
    "sqrt_2cos",
    "wrap_angle",
]

#: |cos(alpha)| below this is treated as the exceptional point.  The
#: 1/sqrt(2 cos alpha) prefactor has no significant digits left beyond it.
EP_TOL = 1e-8

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)


def wrap_angle(x):
    """Reduce an angle (or array of angles) into (-pi, pi]."""
    y = np.mod(np.asarray(x, dtype=float) + np.pi, 2 * np.pi) - np.pi
    y = np.where(y == -np.pi, np.pi, y)
    return float(y) if np.ndim(y) == 0 else y


def bilinear(u, v):
    """Unconjugated pairing u . v used for biorthonormality."""
    return complex(np.dot(np.asarray(u), np.asarray(v)))


@dataclass(frozen=True)
class PTParams:
    """Scale ``S`` (angular frequency) and non-Hermiticity angle ``alpha``.

    ``alpha`` may carry an imaginary part; this is only used by the
    complex-plane detours of the holonomy integrator.
    """

    S: float
    alpha: complex

    def __post_init__(self):
        if not np.isfinite(self.S) or self.S <= 0:
            raise ValueError(f"S must be positive and finite, got {self.S!r}")
        if not np.isfinite(complex(self.alpha)):
            raise ValueError(f"alpha must be finite, got {self.alpha!r}")

    @property
    def is_real(self):
        return complex(self.alpha).imag == 0.0

    @property
    def reduced_alpha(self):
        """Real part of alpha reduced into (-pi, pi] (reporting only)."""
        return wrap_angle(complex(self.alpha).real)

    @property
    def cos(self):
        return _cos(self.alpha)

    @property
    def chi(self):
        """chi = S cos(alpha), shared by H_PT, U_PT and the dilation."""
        return self.S * self.cos


class Regime(enum.Enum):
    UNBROKEN = "unbroken"
    EXCEPTIONAL_POINT = "exceptional_point"
    COMPLEX_ALPHA = "complex_alpha"


@dataclass(frozen=True)
class EigenSystem:
    """Eigenvalues with gauge-fixed right and biorthonormal left vectors.

    ``right[k]`` and ``left[k]`` are the vectors of slot ``k``; slot ``k``
    holds the closed-form branch ``branches[k]`` (+1 or -1).  A freshly
    computed system has ``branches == (+1, -1)``; branch tracking may
    reorder slots.  At an exceptional point both slots hold the single
    coalesced state.
    """

    S: float
    alpha: complex
    values: np.ndarray
    right: np.ndarray
    left: np.ndarray
    regime: Regime
    chi: complex
    branches: tuple = field(default=(1, -1))

    @property
    def is_exceptional(self):
        return self.regime is Regime.EXCEPTIONAL_POINT

    @property
    def coalesced(self):
        if not self.is_exceptional:
            raise ValueError("no coalesced state away from an exceptional point")
        return self.right[0]

    def vector(self, branch):
        """Right vector of closed-form ``branch`` (+1 or -1)."""
        return self.right[self.branches.index(branch)]

    def reordered(self, branches):
        """Return a copy whose slots hold ``branches`` in the given order."""
        idx = [self.branches.index(b) for b in branches]
        return EigenSystem(self.S, self.alpha, self.values[idx],
                           self.right[idx], self.left[idx], self.regime,
                           self.chi, tuple(branches))

    def pairing(self):
        """Matrix of bilinear products L_m . R_n."""
        return self.left @ self.right.T


def _cos(alpha):
    a = complex(alpha)
    return np.cos(a.real) if a.imag == 0.0 else complex(np.cos(a))


def _sin(alpha):
    a = complex(alpha)
    return np.sin(a.real) if a.imag == 0.0 else complex(np.sin(a))


def sqrt_2cos(alpha):
    """sqrt(2 cos alpha) on the principal branch (+i sqrt for real cos < 0)."""
    c = _cos(alpha)
    if isinstance(c, complex):
        return complex(np.sqrt(2 * c))
    return complex(np.sqrt(complex(2 * c, 0.0)))


def build_hpt(p):
    """Return S [[i sin(alpha), 1], [1, -i sin(alpha)]]."""
    s = _sin(p.alpha)
    return p.S * np.array([[1j * s, 1.0], [1.0, -1j * s]], dtype=complex)


def ep_state(sign):
    """Normalised coalesced state at alpha = sign * pi/2.

    The two EPs differ in chirality: (1, -i)/sqrt(2) at +pi/2 and
    (1, +i)/sqrt(2) at -pi/2.  Both are self-orthogonal under the bilinear
    pairing.
    """
    if sign not in (1, -1):
        raise ValueError(f"sign must be +1 or -1, got {sign!r}")
    return np.array([1.0, -1j * sign], dtype=complex) / np.sqrt(2.0)


def closed_form_vectors(alpha):
    """Right eigenvectors (R_+, R_-) in the closed-form gauge, as rows."""
    a = complex(alpha)
    root = sqrt_2cos(a)
    e = np.exp(1j * a) if a.imag else np.exp(1j * a.real)
    half = np.exp(0.5j * a) if a.imag else np.exp(0.5j * a.real)
    r_plus = half / root * np.array([1.0, 1.0 / e])
    r_minus = 1j / (half * root) * np.array([1.0, -e])
    return np.array([r_plus, r_minus], dtype=complex)


def closed_form_derivatives(alpha):
    """Analytic d/dalpha of the closed-form right eigenvectors, as rows."""
    a = complex(alpha)
    R = closed_form_vectors(a)
    tan = complex(np.tan(a)) if a.imag else np.tan(a.real)
    e = np.exp(1j * a) if a.imag else np.exp(1j * a.real)
    # log-derivatives of the scalar prefactors
    dlog_plus = 0.5j + 0.5 * tan
    dlog_minus = -0.5j + 0.5 * tan
    d_plus = dlog_plus * R[0] + R[0][0] * np.array([0.0, -1j / e])
    d_minus = dlog_minus * R[1] + R[1][0] * np.array([0.0, -1j * e])
    return np.array([d_plus, d_minus], dtype=complex)


def eigensystem(p, ep_tol=EP_TOL):
    """Spectrum E_+- = +-S cos(alpha) with the closed-form eigenvectors.

    At the exceptional point (|cos alpha| < ep_tol) the basis collapses:
    both slots hold the coalesced state returned by :func:`ep_state` and the
    regime is ``EXCEPTIONAL_POINT``.  Callers that need a basis must check
    ``regime``.
    """
    c = p.cos
    values = np.array([p.S * c, -p.S * c], dtype=complex)
    if abs(c) < ep_tol:
        if not p.is_real:
            raise ExceptionalPointError(
                f"complex alpha={p.alpha!r} is within ep_tol of an EP")
        sign = 1 if np.sin(complex(p.alpha).real) > 0 else -1
        v = ep_state(sign)
        vecs = np.array([v, v])
        return EigenSystem(p.S, p.alpha, values, vecs, vecs.copy(),
                           Regime.EXCEPTIONAL_POINT, p.chi)
    right = closed_form_vectors(p.alpha)
    left = right * np.array([[1.0], [-1.0]])
    regime = Regime.UNBROKEN if p.is_real else Regime.COMPLEX_ALPHA
    return EigenSystem(p.S, p.alpha, values, right, left, regime, p.chi)


def propagator_closed(p, t, ep_tol=EP_TOL):
    """Closed-form exp(-i H_PT t).

    (1/cos a) [[cos(chi t - a), -i sin(chi t)], [-i sin(chi t), cos(chi t + a)]]
    with chi = S cos a.  For real alpha it is not unitary in the Euclidean
    inner product; it preserves the metric of :func:`ptsim.dilation.eta`
    (U^dagger eta U = eta), so eta^(1/2) U eta^(-1/2) is unitary.
    """
    c = p.cos
    if abs(c) < ep_tol:
        raise ExceptionalPointError(
            f"closed-form propagator is singular at alpha={p.alpha!r} (1/cos alpha)")
    a = complex(p.alpha) if not p.is_real else complex(p.alpha).real
    x = p.chi * t
    U = np.array([[np.cos(x - a), -1j * np.sin(x)],
                  [-1j * np.sin(x), np.cos(x + a)]], dtype=complex)
    return U / c


def pt_symmetry_check(H, tol=1e-12):
    """True iff ||sigma_x conj(H) sigma_x - H|| <= tol (P = sigma_x, T = K)."""
    H = np.asarray(H, dtype=complex)
    return bool(np.linalg.norm(SIGMA_X @ H.conj() @ SIGMA_X - H) <= tol)
