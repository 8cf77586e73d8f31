"""Physical realizability of linear quantum controllers.

Active (quadrature) controllers are completed with vacuum-noise input
channels so that the open-oscillator identities hold exactly.  Passive
(annihilation) controllers are tested for the bounded-real property and
completed after a state transformation obtained from the bounded-real
Riccati equation.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import DimensionError, NumericalError, PreconditionError
from .lqg import ClassicalController
from .matxeq import adjoint, hinf_exceeds, hinf_norm, is_hurwitz, skew_factor
from .model import QuadratureSystem, commutation_matrix

__all__ = [
    "ActivePRCheck",
    "PassivePRCheck",
    "CoherentController",
    "OscillatorParams",
    "verify_active_pr",
    "complete_active",
    "check_passive_realizable",
    "complete_passive",
    "passive_pr_residuals",
    "oscillator_system",
    "recover_oscillator",
]

PR_RTOL = 1e-8
PASSIVE_PR_ATOL = 1e-7
MINIMALITY_RTOL = 1e-9
BOUNDARY_EPS = 1e-8


@dataclass(frozen=True)
class ActivePRCheck:
    realizable: bool
    commutation_residual: float
    output_residual: float

    def __bool__(self):
        return self.realizable


@dataclass(frozen=True)
class PassivePRCheck:
    realizable: bool
    hurwitz: bool
    hinf_norm: float
    controllable: bool
    observable: bool

    def __bool__(self):
        return self.realizable


@dataclass(frozen=True)
class CoherentController:
    """Classical controller augmented with vacuum-noise inputs.

    ``dx_k = A_k x_k dt + B_y dy + B_v1 dv1 + B_v2 dv2`` and
    ``du_hat = C_k x_k dt + dv1``, in the coordinates of the classical
    controller.  For passive controllers the realizing coordinates
    ``xi' = X^(1/2) xi`` and the completion blocks in those coordinates
    are kept as well.
    """

    A_k: np.ndarray
    B_y: np.ndarray
    C_k: np.ndarray
    B_v1: np.ndarray
    B_v2: np.ndarray
    is_complex: bool = False
    transform: np.ndarray | None = None
    G_c0: np.ndarray | None = None
    G_c1: np.ndarray | None = None
    H_c1: np.ndarray | None = None
    H_c2: np.ndarray | None = None
    hinf_norm: float | None = None

    @property
    def n_k(self) -> int:
        return self.A_k.shape[0]

    @property
    def n_v2(self) -> int:
        return self.B_v2.shape[1]

    def transfer(self, s: complex) -> np.ndarray:
        """Control transfer ``y -> u_hat`` at ``s``."""
        return self.C_k @ np.linalg.solve(s * np.eye(self.n_k) - self.A_k, self.B_y)

    def as_quadrature_system(self) -> QuadratureSystem:
        """Active controller as ``(A_k, [B_v1 B_v2 B_y], C_k, [I 0 0])``."""
        if self.is_complex:
            raise ValueError("passive controllers have no quadrature form here")
        n_hat, n_y = self.C_k.shape[0], self.B_y.shape[1]
        B = np.hstack([self.B_v1, self.B_v2, self.B_y])
        D = np.hstack([np.eye(n_hat), np.zeros((n_hat, self.n_v2 + n_y))])
        return QuadratureSystem(self.A_k, B, self.C_k, D)


@dataclass(frozen=True)
class OscillatorParams:
    """Hamiltonian matrix ``R`` and coupling matrix ``Lam`` of an open oscillator."""

    R: np.ndarray
    Lam: np.ndarray

    def __post_init__(self):
        R = np.atleast_2d(np.asarray(self.R, dtype=float))
        object.__setattr__(self, "R", (R + R.T) / 2)
        object.__setattr__(self, "Lam", np.atleast_2d(np.asarray(self.Lam, dtype=complex)))


# --------------------------------------------------------------------------
# active systems


def verify_active_pr(sys: QuadratureSystem, n_v: int, n_u: int | None = None) -> ActivePRCheck:
    """Check the realizability identities of ``dx = Ax + B_v dv + B_u du``, ``dy = Cx + dv``.

    ``B`` is partitioned as ``[B_v, B_u]`` with ``n_v`` vacuum columns, the
    first ``n_y`` of which feed the output directly.  The result holds
    both Frobenius residuals; it is truthy iff each is at most
    ``1e-8 (1 + ||A||)``.
    """
    n_u = sys.n_w - n_v if n_u is None else n_u
    if n_v + n_u != sys.n_w or n_v < 0 or n_u < 0 or n_v % 2 or n_u % 2:
        raise DimensionError(
            f"channel partition ({n_v}, {n_u}) inconsistent with {sys.n_w} input columns"
        )
    n_y = sys.n_y
    if n_y > n_v:
        raise DimensionError(f"need at least n_y={n_y} vacuum channels, got {n_v}")
    A, C = sys.A, sys.C
    B_v, B_u = sys.B[:, :n_v], sys.B[:, n_v:]
    Th = commutation_matrix(sys.n)
    comm = A @ Th + Th @ A.T + B_v @ commutation_matrix(n_v) @ B_v.T
    comm = comm + B_u @ commutation_matrix(n_u) @ B_u.T
    out = B_v[:, :n_y] - Th @ C.T @ commutation_matrix(n_y)
    feed = sys.D - np.hstack([np.eye(n_y), np.zeros((n_y, sys.n_w - n_y))])
    r1 = float(np.linalg.norm(comm))
    r2 = float(max(np.linalg.norm(out), np.linalg.norm(feed)))
    tol = PR_RTOL * (1 + np.linalg.norm(A))
    return ActivePRCheck(bool(r1 <= tol and r2 <= tol), r1, r2)


def complete_active(ctrl: ClassicalController) -> CoherentController:
    """Add vacuum channels ``B_v1``, ``B_v2`` so the controller is realizable.

    ``B_v1 = Theta C_k^T Theta`` satisfies the output identity for the
    ``u_hat`` port; the commutation defect ``Z`` of the remaining terms is
    cancelled by ``B_v2`` with ``B_v2 Theta B_v2^T = -Z``.  The construction
    is purely algebraic, so lossless (non-Hurwitz) controllers are accepted;
    stability is checked by the synthesis and closed-loop stages.
    """
    A_k = np.asarray(ctrl.A_k, dtype=float)
    B_y = np.asarray(ctrl.B_y, dtype=float)
    C_k = np.asarray(ctrl.C_k, dtype=float)
    n_k, n_y, n_hat = A_k.shape[0], B_y.shape[1], C_k.shape[0]
    if n_k % 2 or n_y % 2 or n_hat % 2:
        raise DimensionError(f"active controller needs even dimensions, got ({n_k}, {n_y}, {n_hat})")
    Th = commutation_matrix(n_k)
    B_v1 = Th @ C_k.T @ commutation_matrix(n_hat)
    Z = (
        A_k @ Th
        + Th @ A_k.T
        + B_y @ commutation_matrix(n_y) @ B_y.T
        + B_v1 @ commutation_matrix(n_hat) @ B_v1.T
    )
    if np.linalg.norm(Z + Z.T) > 1e-10 * (1 + np.linalg.norm(Z)):
        raise NumericalError("commutation defect is not skew-symmetric")
    B_v2 = skew_factor(-Z)
    coh = CoherentController(A_k, B_y, C_k, B_v1, B_v2, is_complex=False)
    check = verify_active_pr(coh.as_quadrature_system(), n_v=n_hat + B_v2.shape[1], n_u=n_y)
    if not check:
        raise NumericalError(f"vacuum completion failed its own check: {check}")
    return coh


def _perm_stack(N: int) -> np.ndarray:
    """Permutation ``P_N`` taking ``(a1, a2, ..., a2N)`` to ``(a1, a3, ..., a2, a4, ...)``."""
    order = list(range(0, 2 * N, 2)) + list(range(1, 2 * N, 2))
    return np.eye(2 * N)[order]


def oscillator_system(R, Lam, n_y: int) -> QuadratureSystem:
    """Open oscillator ``(A, B, C, D)`` generated by Hamiltonian ``R`` and coupling ``Lam``."""
    params = OscillatorParams(R, Lam)
    R, Lam = params.R, params.Lam
    N_w, n = Lam.shape
    if n_y % 2 or n_y > 2 * N_w:
        raise DimensionError(f"n_y={n_y} must be even and at most {2 * N_w}")
    N_y = n_y // 2
    Th = commutation_matrix(n)
    A = 2 * Th @ (R + (adjoint(Lam) @ Lam).imag)
    M = 0.5 * np.array([[1, 1j], [1, -1j]])
    Gamma = _perm_stack(N_w) @ np.kron(np.eye(N_w), M)
    B = 2j * Th @ np.hstack([-adjoint(Lam), Lam.T]) @ Gamma
    Sigma = np.hstack([np.eye(N_y), np.zeros((N_y, N_w - N_y))])
    stacked = np.vstack([Lam + Lam.conj(), -1j * Lam + 1j * Lam.conj()])
    C = _perm_stack(N_y).T @ np.kron(np.eye(2), Sigma) @ stacked
    D = np.hstack([np.eye(n_y), np.zeros((n_y, 2 * N_w - n_y))])
    for name, Mx in (("B", B), ("C", C)):
        if np.abs(Mx.imag).max(initial=0.0) > 1e-12 * (1 + np.abs(Mx).max(initial=0.0)):
            raise NumericalError(f"oscillator {name} matrix is not real")
    return QuadratureSystem(A, B.real, C.real, D)


def recover_oscillator(sys: QuadratureSystem) -> OscillatorParams:
    """Hamiltonian and coupling matrices of a realizable quadrature system.

    ``R`` is the symmetric part of ``Theta^-1 A / 2``.  Coupling rows of the
    output channels are read off ``C``; those of the remaining vacuum
    channels off ``B``.
    """
    check = verify_active_pr(sys, n_v=sys.n_w, n_u=0)
    if not check:
        raise PreconditionError(f"system is not physically realizable: {check}")
    n, N_w, N_y = sys.n, sys.n_w // 2, sys.n_y // 2
    Th = commutation_matrix(n)
    half = -0.5 * Th @ sys.A  # Theta^-1 = -Theta
    R = (half + half.T) / 2
    Lam = np.zeros((N_w, n), dtype=complex)
    for j in range(N_w):
        if j < N_y:
            re, im = sys.C[2 * j] / 2, sys.C[2 * j + 1] / 2
        else:
            im = 0.5 * Th @ sys.B[:, 2 * j]
            re = -0.5 * Th @ sys.B[:, 2 * j + 1]
        Lam[j] = re + 1j * im
    params = OscillatorParams(R, Lam)
    rebuilt = oscillator_system(params.R, params.Lam, sys.n_y)
    err = max(
        np.abs(getattr(rebuilt, k) - getattr(sys, k)).max(initial=0.0) for k in "ABCD"
    )
    if err > PR_RTOL * (1 + np.abs(sys.A).max(initial=0.0)):
        raise NumericalError(f"oscillator reconstruction error {err:.3e}")
    return params


# --------------------------------------------------------------------------
# passive systems


def _full_rank(K: np.ndarray, n: int, what: str) -> bool:
    s = np.linalg.svd(K, compute_uv=False)
    if s.size < n or s[0] == 0:
        return False
    ok = bool(s[n - 1] > MINIMALITY_RTOL * s[0])
    if ok and s[n - 1] < 1e-6 * s[0]:
        warnings.warn(f"controller is nearly un{what} (singular value ratio {s[n - 1] / s[0]:.2e})")
    return ok


def check_passive_realizable(F_c, G_c, H_c) -> PassivePRCheck:
    """Bounded-real test for a minimal passive controller ``(F_c, G_c, H_c)``."""
    F = np.atleast_2d(np.asarray(F_c, dtype=complex))
    n = F.shape[0]
    G = np.asarray(G_c, dtype=complex).reshape(n, -1)
    H = np.asarray(H_c, dtype=complex).reshape(-1, n)
    ctrb = np.hstack([np.linalg.matrix_power(F, i) @ G for i in range(n)])
    obsv = np.vstack([H @ np.linalg.matrix_power(F, i) for i in range(n)])
    controllable = _full_rank(ctrb, n, "controllable")
    observable = _full_rank(obsv, n, "observable")
    hurwitz = is_hurwitz(F)
    norm = hinf_norm(F, G, H) if hurwitz else float("inf")
    bounded = hurwitz and not hinf_exceeds(F, G, H, 1 + 1e-9)
    ok = bool(controllable and observable and bounded)
    return PassivePRCheck(ok, hurwitz, norm, controllable, observable)


def _bounded_real_riccati(F, G, H):
    """Stabilizing ``X`` of ``F* X + X F + X G G* X + H* H = 0``.

    On the bounded-real boundary the Hamiltonian has imaginary-axis
    eigenvalues; the equation is then relaxed by ``-eps I`` and the
    resulting O(eps) defect is absorbed by the completion tolerance.
    """
    n, m = G.shape
    Q = adjoint(H) @ H
    for eps in (0.0, BOUNDARY_EPS):
        try:
            X = sla.solve_continuous_are(F, G, Q - eps * np.eye(n), -np.eye(m))
        except (np.linalg.LinAlgError, ValueError):
            continue
        X = (X + adjoint(X)) / 2
        if np.linalg.eigvalsh(X).min() > 0:
            return X
    raise PreconditionError("bounded-real Riccati equation has no positive definite solution")


def passive_pr_residuals(F, G_tilde, H_tilde) -> tuple[float, float]:
    """Residuals of ``F + F* + G~ G~* = 0`` and ``G~ = -H~*``."""
    r1 = np.abs(F + adjoint(F) + G_tilde @ adjoint(G_tilde)).max(initial=0.0)
    r2 = np.abs(G_tilde + adjoint(H_tilde)).max(initial=0.0)
    return float(r1), float(r2)


def complete_passive(F_c, G_c, H_c, X=None) -> CoherentController:
    """Realize a bounded-real passive controller as a quantum system.

    Parameters
    ----------
    F_c, G_c, H_c : array_like
        Controller drift, input (from ``y``) and output (to ``u_hat``).
    X : array_like, optional
        Positive definite solution of the bounded-real inequality
        ``F* X + X F + X G G* X + H* H <= 0``.  Defaults to the stabilizing
        solution of the corresponding Riccati equation, after checking the
        bounded-real conditions.  A supplied ``X`` is itself the
        certificate: only its inequality is checked, so lossless or
        non-minimal controllers can be completed too.

    Returns
    -------
    CoherentController
        ``B_v1`` and ``B_v2`` are expressed in the original coordinates;
        ``G_c0``, ``G_c1``, ``H_c1``, ``H_c2`` in the realizing coordinates
        ``xi' = X^(1/2) xi``.
    """
    F = np.atleast_2d(np.asarray(F_c, dtype=complex))
    n = F.shape[0]
    G = np.asarray(G_c, dtype=complex).reshape(n, -1)
    H = np.asarray(H_c, dtype=complex).reshape(-1, n)
    norm = None
    if X is None:
        check = check_passive_realizable(F, G, H)
        if not check:
            raise PreconditionError(
                "controller is not physically realizable as a passive system: "
                f"Hurwitz={check.hurwitz}, H-infinity norm={check.hinf_norm:.6g}, "
                f"controllable={check.controllable}, observable={check.observable}"
            )
        norm = check.hinf_norm
        X = _bounded_real_riccati(F, G, H)
    elif is_hurwitz(F):
        norm = hinf_norm(F, G, H)
    X = np.atleast_2d(np.asarray(X, dtype=complex))
    X = (X + adjoint(X)) / 2
    w, V = np.linalg.eigh(X)
    if w.min() <= 0:
        raise PreconditionError("X must be positive definite")
    T = (V * np.sqrt(w)) @ adjoint(V)
    T_inv = (V / np.sqrt(w)) @ adjoint(V)
    F2, G2, H2 = T @ F @ T_inv, T @ G, H @ T_inv

    G_c0 = -adjoint(H2)
    defect = -(F2 + adjoint(F2) + G2 @ adjoint(G2) + G_c0 @ adjoint(G_c0))
    defect = (defect + adjoint(defect)) / 2
    dw, dv = np.linalg.eigh(defect)
    scale = 1 + np.abs(F2).max()
    if dw.min() < -PASSIVE_PR_ATOL * scale:
        raise PreconditionError(
            f"X violates the bounded-real inequality (defect eigenvalue {dw.min():.3e})"
        )
    keep = dw > 1e-12 * scale
    G_c1 = dv[:, keep] * np.sqrt(dw[keep])
    H_c1 = -adjoint(G_c1)
    H_c2 = -adjoint(G2)

    G_tilde = np.hstack([G_c0, G_c1, G2])
    H_tilde = np.vstack([H2, H_c1, H_c2])
    r1, r2 = passive_pr_residuals(F2, G_tilde, H_tilde)
    if max(r1, r2) > PASSIVE_PR_ATOL * scale:
        raise NumericalError(f"passive completion residuals ({r1:.3e}, {r2:.3e}) too large")

    return CoherentController(
        A_k=F,
        B_y=G,
        C_k=H,
        B_v1=T_inv @ G_c0,
        B_v2=T_inv @ G_c1,
        is_complex=True,
        transform=T,
        G_c0=G_c0,
        G_c1=G_c1,
        H_c1=H_c1,
        H_c2=H_c2,
        hinf_norm=norm,
    )
