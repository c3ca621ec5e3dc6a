"""Dense matrix exponential by scaling and squaring with Pade approximants.

This is the generic propagator used to cross-check the closed-form
two-level propagator and to evolve the four-level dilation.  The algorithm
follows Higham (2005): pick the lowest Pade degree m in {3, 5, 7, 9, 13}
whose backward-error bound theta_m covers ||A||_1; otherwise scale A by
2**-s so that ||A/2**s||_1 <= theta_13, apply the degree-13 approximant and
square s times.
"""

import numpy as np

__all__ = ["expm", "matrix_exp"]

# Backward-error thresholds for double precision.
_THETA = {
    3: 1.495585217958292e-2,
    5: 2.539398330063230e-1,
    7: 9.504178996162932e-1,
    9: 2.097847961257068e0,
    13: 5.371920351148152e0,
}

_PADE_COEFFS = {
    3: (120.0, 60.0, 12.0, 1.0),
    5: (30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0),
    7: (17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0),
    9: (17643225600.0, 8821612800.0, 2075673600.0, 302702400.0, 30270240.0,
        2162160.0, 110880.0, 3960.0, 90.0, 1.0),
    13: (64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
         1187353796428800.0, 129060195264000.0, 10559470521600.0,
         670442572800.0, 33522128640.0, 1323241920.0, 40840800.0,
         960960.0, 16380.0, 182.0, 1.0),
}

# Beyond this many squarings the result is not representable anyway.
_MAX_SQUARINGS = 1000


def _pade(A, m):
    b = _PADE_COEFFS[m]
    ident = np.eye(A.shape[0], dtype=A.dtype)
    A2 = A @ A
    if m == 13:
        A4 = A2 @ A2
        A6 = A4 @ A2
        U = A @ (A6 @ (b[13] * A6 + b[11] * A4 + b[9] * A2)
                 + b[7] * A6 + b[5] * A4 + b[3] * A2 + b[1] * ident)
        V = (A6 @ (b[12] * A6 + b[10] * A4 + b[8] * A2)
             + b[6] * A6 + b[4] * A4 + b[2] * A2 + b[0] * ident)
    else:
        powers = [ident, A2]
        for _ in range(2, (m + 1) // 2):
            powers.append(powers[-1] @ A2)
        U = sum(b[j] * powers[j // 2] for j in range(m, 0, -2))
        U = A @ U
        V = sum(b[j] * powers[j // 2] for j in range(m - 1, -1, -2))
    return np.linalg.solve(V - U, V + U)


def expm(A):
    """Return exp(A) for a square complex matrix.

    Raises
    ------
    OverflowError
        If the entries of A are not finite or the scaling needed exceeds what
        double precision can represent.
    """
    A = np.asarray(A, dtype=complex)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise OverflowError("matrix exponential of a non-finite matrix")
    norm = np.linalg.norm(A, 1)
    for m in (3, 5, 7, 9):
        if norm <= _THETA[m]:
            return _pade(A, m)
    s = max(0, int(np.ceil(np.log2(norm / _THETA[13]))))
    if s > _MAX_SQUARINGS:
        raise OverflowError(f"||A||_1 = {norm:.3e} is too large for expm")
    F = _pade(A / 2.0**s, 13)
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(s):
            F = F @ F
            if not np.all(np.isfinite(F)):
                raise OverflowError(f"expm overflowed for ||A||_1 = {norm:.3e}")
    return F


def matrix_exp(H, t):
    """Propagator exp(-i H t) of a (not necessarily Hermitian) generator H."""
    return expm(-1j * t * np.asarray(H, dtype=complex))
