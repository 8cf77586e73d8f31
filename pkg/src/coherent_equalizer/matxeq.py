"""Dense matrix-equation solvers: stability, Lyapunov, Riccati, H-infinity norm.

Real-symmetric and complex-Hermitian problems share one code path; the
adjoint ``*`` is the transpose for real input and the conjugate transpose
for complex input.  Every solver substitutes its answer back and rejects it
if the residual exceeds the documented bound.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import DimensionError, NumericalError, PreconditionError
from .model import commutation_matrix

__all__ = [
    "SolveReport",
    "adjoint",
    "is_hurwitz",
    "solve_lyapunov",
    "solve_care",
    "hinf_norm",
    "hinf_exceeds",
    "skew_factor",
]

HURWITZ_MARGIN = 1e-9
LYAP_RTOL = 1e-10
CARE_RTOL = 1e-9
SKEW_TOL = 1e-10
SKEW_FACTOR_ATOL = 1e-9


@dataclass(frozen=True)
class SolveReport:
    """Diagnostics attached to a solver result."""

    residual_norm: float
    iterations: int = 0
    condition: float = 0.0


def adjoint(M: np.ndarray) -> np.ndarray:
    return M.conj().T


def _square(A, name="A"):
    A = np.atleast_2d(np.asarray(A))
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise DimensionError(f"{name} has non-finite entries")
    return A


def _hermitian_part(X):
    return (X + adjoint(X)) / 2


def is_hurwitz(A, margin: float = HURWITZ_MARGIN) -> bool:
    """True iff every eigenvalue of ``A`` has real part below ``-margin``."""
    A = _square(A)
    if A.size == 0:
        return True
    return bool(np.linalg.eigvals(A).real.max() < -margin)


def solve_lyapunov(A, N):
    """Solve ``A X + X A* + N = 0`` for a Hurwitz ``A``.

    Returns
    -------
    X : ndarray
        Hermitian (symmetric) positive semidefinite solution.
    report : SolveReport
        ``residual_norm`` is the Frobenius residual relative to
        ``||A|| ||X|| + ||N||``.
    """
    A = _square(A)
    N = _square(N, "N")
    if N.shape != A.shape:
        raise DimensionError(f"N must be {A.shape}, got {N.shape}")
    if not is_hurwitz(A):
        raise PreconditionError(
            "Lyapunov equation needs a Hurwitz matrix; spectral abscissa is "
            f"{np.linalg.eigvals(A).real.max():.3e}"
        )
    X = sla.solve_continuous_lyapunov(A, -N)
    X = _hermitian_part(X)
    res = A @ X + X @ adjoint(A) + N
    scale = 2 * np.linalg.norm(A) * np.linalg.norm(X) + np.linalg.norm(N)
    rel = float(np.linalg.norm(res) / scale) if scale > 0 else 0.0
    if rel > LYAP_RTOL * (1 + np.linalg.norm(X)):
        raise NumericalError(f"Lyapunov residual {rel:.3e} exceeds tolerance")
    return X, SolveReport(residual_norm=rel, condition=float(np.linalg.cond(A)))


def solve_care(A, B, Qw, Rw):
    """Stabilizing solution of ``A* P + P A - P B Rw^-1 B* P + Qw = 0``.

    Parameters
    ----------
    A : (n, n) array_like
    B : (n, m) array_like
    Qw : (n, n) array_like
        Hermitian positive semidefinite state weight.
    Rw : (m, m) array_like
        Hermitian positive definite control weight.

    Returns
    -------
    P : ndarray
        Hermitian PSD solution with ``A - B Rw^-1 B* P`` Hurwitz.
    report : SolveReport

    Raises
    ------
    PreconditionError
        If no stabilizing solution exists (loss of stabilizability or
        detectability) or ``Rw`` is not positive definite.
    """
    A = _square(A)
    n = A.shape[0]
    B = np.asarray(B).reshape(n, -1)
    Qw = _square(Qw, "Qw")
    Rw = _square(Rw, "Rw")
    if Qw.shape != (n, n) or Rw.shape != (B.shape[1], B.shape[1]):
        raise DimensionError("Riccati weights do not conform to (A, B)")
    Qw = _hermitian_part(Qw)
    Rw = _hermitian_part(Rw)
    if np.linalg.eigvalsh(Rw).min() <= 0:
        raise PreconditionError("control weight Rw must be positive definite")
    try:
        P = sla.solve_continuous_are(A, B, Qw, Rw)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise PreconditionError(f"no stabilizing Riccati solution: {exc}") from exc
    P = _hermitian_part(P)
    gain = np.linalg.solve(Rw, adjoint(B) @ P)
    closed = A - B @ gain
    if not is_hurwitz(closed):
        raise PreconditionError(
            "Riccati solution is not stabilizing; closed-loop eigenvalues "
            f"{np.round(np.linalg.eigvals(closed), 6)}"
        )
    quad = P @ B @ gain
    res = adjoint(A) @ P + P @ A - quad + Qw
    scale = 2 * np.linalg.norm(A) * np.linalg.norm(P) + np.linalg.norm(quad) + np.linalg.norm(Qw)
    rel = float(np.linalg.norm(res) / scale) if scale > 0 else 0.0
    if rel > CARE_RTOL * (1 + np.linalg.norm(P)):
        raise NumericalError(f"Riccati residual {rel:.3e} exceeds tolerance")
    return P, SolveReport(residual_norm=rel, condition=float(np.linalg.cond(Rw)))


def _sigma_max(F, G, H, w):
    n = F.shape[0]
    T = H @ np.linalg.solve(1j * w * np.eye(n) - F, G)
    return np.linalg.norm(T, 2)


def _imag_axis_frequencies(F, G, H, gamma):
    """Frequencies where ``sigma_max(H (iw - F)^-1 G) == gamma``.

    These are the imaginary-axis eigenvalues of the Hamiltonian-type matrix
    built for level ``gamma``.
    """
    Ham = np.block(
        [
            [F, G @ adjoint(G) / gamma],
            [-adjoint(H) @ H / gamma, -adjoint(F)],
        ]
    )
    ev = np.linalg.eigvals(Ham)
    scale = max(1.0, np.abs(ev).max(initial=0.0))
    on_axis = np.abs(ev.real) < 1e-8 * scale
    return ev[on_axis].imag


def hinf_norm(F, G, H, rtol: float = 1e-6, n_sweep: int = 200) -> float:
    """H-infinity norm of ``H (sI - F)^-1 G`` for Hurwitz ``F``.

    A log-spaced frequency sweep (both signs of frequency, since complex
    systems are not conjugate-symmetric) gives a lower bound; bisection on
    the level ``gamma`` with the imaginary-axis eigenvalue test of the
    Hamiltonian matrix closes the bracket.  Crossing frequencies found
    during bisection raise the lower bound (Boyd-Balakrishnan refinement).
    """
    F = _square(F, "F")
    n = F.shape[0]
    G = np.asarray(G).reshape(n, -1)
    H = np.asarray(H).reshape(-1, n)
    if not is_hurwitz(F):
        raise PreconditionError("H-infinity norm undefined: F is not Hurwitz")
    if n == 0 or not np.any(G) or not np.any(H):
        return 0.0
    ev = np.linalg.eigvals(F)
    wmax = 10 * max(1.0, np.abs(ev).max())
    wmin = 1e-3 * max(1e-3, np.abs(ev).min())
    sweep = np.geomspace(wmin, wmax, n_sweep)
    candidates = np.concatenate([[0.0], sweep, -sweep, ev.imag])
    lo = max(_sigma_max(F, G, H, w) for w in candidates)
    if lo == 0.0:
        return 0.0
    hi = 2 * lo
    while _imag_axis_frequencies(F, G, H, hi).size:
        lo = hi
        hi *= 2
    for _ in range(200):
        if hi - lo <= rtol * lo:
            break
        gamma = (lo + hi) / 2
        crossings = _imag_axis_frequencies(F, G, H, gamma)
        if crossings.size:
            lo = max(gamma, max(_sigma_max(F, G, H, w) for w in crossings))
        else:
            hi = gamma
    # lo is attained at some frequency, so it never overstates the norm
    return float(lo)


def hinf_exceeds(F, G, H, gamma: float) -> bool:
    """True iff ``||H (sI - F)^-1 G||_inf > gamma`` for Hurwitz ``F``.

    Decided by the presence of imaginary-axis eigenvalues of the
    Hamiltonian matrix at level ``gamma``, without bisection.
    """
    F = _square(F, "F")
    n = F.shape[0]
    G = np.asarray(G).reshape(n, -1)
    H = np.asarray(H).reshape(-1, n)
    if not is_hurwitz(F):
        raise PreconditionError("H-infinity norm undefined: F is not Hurwitz")
    if n == 0:
        return False
    return bool(_imag_axis_frequencies(F, G, H, gamma).size)


def skew_factor(Z) -> np.ndarray:
    """Factor a real skew-symmetric ``Z`` as ``B Theta B^T``.

    Uses the real canonical form ``Z = Q blockdiag(s_i J, 0) Q^T``.  Each
    ``+s J`` block contributes ``sqrt(s) I_2``; a ``-s J`` block contributes
    ``sqrt(s) [[0, 1], [1, 0]]``.  The column count equals ``rank(Z)``.
    """
    Z = _square(np.asarray(Z, dtype=float), "Z")
    znorm = np.linalg.norm(Z)
    if np.linalg.norm(Z + Z.T) > SKEW_TOL * (1 + znorm):
        raise DimensionError("matrix is not skew-symmetric within tolerance")
    Z = (Z - Z.T) / 2
    m = Z.shape[0]
    if m == 0 or znorm == 0:
        return np.zeros((m, 0))
    T, Q = sla.schur(Z, output="real")
    flip = np.array([[0.0, 1.0], [1.0, 0.0]])
    rank_tol = 1e-12 * max(1.0, znorm) * m
    cols = []
    i = 0
    while i < m:
        if i + 1 < m and abs(T[i + 1, i]) > 0:
            s = (T[i, i + 1] - T[i + 1, i]) / 2
            if abs(s) > rank_tol:
                block = np.eye(2) if s > 0 else flip
                cols.append(np.sqrt(abs(s)) * Q[:, i : i + 2] @ block)
            i += 2
        else:
            i += 1
    B = np.hstack(cols) if cols else np.zeros((m, 0))
    err = np.abs(B @ commutation_matrix(B.shape[1]) @ B.T - Z).max(initial=0.0)
    if err > SKEW_FACTOR_ATOL * max(1.0, znorm):
        raise NumericalError(f"skew factorization residual {err:.3e}")
    return B
