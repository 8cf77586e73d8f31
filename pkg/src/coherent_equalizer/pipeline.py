"""Closed-loop assembly, cost evaluation and spectral cross-checks.

The cost of the coherent closed loop is ``Tr(Rbar Qbar)`` with ``Qbar`` the
steady-state covariance from the Lyapunov equation.  Two independent
routes reproduce it: the Parseval integral of the output power spectral
density, and a discrete covariance march with exact one-step
discretization.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
import scipy.integrate as sint
import scipy.linalg as sla

from .errors import DimensionError, EqualizerError, PreconditionError
from .lqg import ClassicalController, LqgGains, LqgWeights, _psd_sqrt, lqg_gains
from .matxeq import adjoint, is_hurwitz, solve_lyapunov
from .model import EqualizerPlant, commutation_matrix, quadrature_matrix
from .realize import (
    ActivePRCheck,
    CoherentController,
    complete_active,
    complete_passive,
    passive_pr_residuals,
    verify_active_pr,
)

__all__ = [
    "ClosedLoop",
    "PsdResult",
    "SynthesisReport",
    "close_loop",
    "closed_loop_covariance",
    "evaluate_cost",
    "psd",
    "frequency_grid",
    "parseval_cost",
    "covariance_march",
    "commutation_residual",
    "synthesize_equalizer",
]


@dataclass(frozen=True)
class ClosedLoop:
    """``d zeta = A_cl zeta dt + B_cl dw_cl`` with ``zeta = [x; x_k]``.

    ``W`` maps ``zeta`` to the weighted outputs ``[R1^(1/2) e; (mu R2)^(1/2) u_hat]``
    so that ``Rbar = W* W``.
    """

    A_cl: np.ndarray
    B_cl: np.ndarray
    Rbar: np.ndarray
    W: np.ndarray
    n_plant: int
    is_complex: bool
    channel_sizes: tuple = ()

    @property
    def n(self) -> int:
        return self.A_cl.shape[0]

    def to_quadrature(self) -> "ClosedLoop":
        """Quadrature image of a passive closed loop.

        Costs are not invariant: a passive loop costs exactly twice as much
        when expressed in quadratures, which is the scale active designs
        are reported on.
        """
        if not self.is_complex:
            raise ValueError("closed loop is already real")
        q = quadrature_matrix
        return ClosedLoop(
            q(self.A_cl), q(self.B_cl), q(self.Rbar), q(self.W), 2 * self.n_plant, False,
            tuple(2 * m for m in self.channel_sizes),
        )


@dataclass(frozen=True)
class PsdResult:
    omega: np.ndarray
    total: np.ndarray
    per_output: np.ndarray  # shape (len(omega), n_outputs)


def close_loop(plant: EqualizerPlant, ctrl, weights: LqgWeights) -> ClosedLoop:
    """Interconnect the plant with a coherent (or purely classical) controller.

    A :class:`ClassicalController` is closed without any vacuum channel,
    i.e. ``du_hat = C_k x_k dt``.
    """
    A_k, B_y, C_k = ctrl.A_k, ctrl.B_y, ctrl.C_k
    n, n_k = plant.n, A_k.shape[0]
    if B_y.shape != (n_k, plant.n_y) or C_k.shape != (plant.n_hat, n_k):
        raise DimensionError(
            f"controller shapes B_y {B_y.shape}, C_k {C_k.shape} do not match plant "
            f"(n_y={plant.n_y}, n_hat={plant.n_hat})"
        )
    A_cl = np.block([[plant.A, plant.B_hat @ C_k], [B_y @ plant.C, A_k]])
    top = [plant.B_w1]
    bottom = [B_y @ plant.D_w1]
    sizes = [plant.n_w1]
    if isinstance(ctrl, CoherentController):
        top += [plant.B_hat, np.zeros((n, ctrl.n_v2))]
        bottom += [ctrl.B_v1, ctrl.B_v2]
        sizes += [plant.n_hat, ctrl.n_v2]
    B_cl = np.vstack([np.hstack(top), np.hstack(bottom)])
    Rw = weights.control_weight
    Rbar = sla.block_diag(weights.state_weight(plant), adjoint(C_k) @ Rw @ C_k)
    E = weights.error_output(plant)
    W = np.block(
        [
            [E, np.zeros((E.shape[0], n_k))],
            [np.zeros((plant.n_hat, n)), _psd_sqrt(Rw) @ C_k],
        ]
    )
    cplx = plant.is_complex or np.iscomplexobj(A_cl) or np.iscomplexobj(B_cl)
    return ClosedLoop(A_cl, B_cl, Rbar, W, n, bool(cplx), tuple(sizes))


def closed_loop_covariance(cl: ClosedLoop, intensity: float = 1.0):
    """Steady-state covariance ``Qbar`` and its solver report."""
    if not is_hurwitz(cl.A_cl):
        raise PreconditionError(
            "closed loop is not Hurwitz; eigenvalues " f"{np.linalg.eigvals(cl.A_cl)}"
        )
    return solve_lyapunov(cl.A_cl, intensity * cl.B_cl @ adjoint(cl.B_cl))


def evaluate_cost(cl: ClosedLoop, intensity: float = 1.0) -> float:
    """LQG cost ``Tr(Rbar Qbar)`` under vacuum noise of the given intensity."""
    Q, _ = closed_loop_covariance(cl, intensity)
    return float(np.trace(cl.Rbar @ Q).real)


def psd(cl: ClosedLoop, omegas) -> PsdResult:
    """Power spectral density ``trace(T T*)`` of the weighted outputs.

    ``T(s) = W (sI - A_cl)^-1 B_cl``.  Values are linear and two-sided.
    """
    if not is_hurwitz(cl.A_cl):
        raise PreconditionError("closed loop is not Hurwitz")
    omegas = np.asarray(omegas, dtype=float).ravel()
    if not np.all(np.isfinite(omegas)):
        raise ValueError("frequencies must be finite")
    # diagonalize once; fall back to dense solves if A_cl is defective
    lam, V = np.linalg.eig(cl.A_cl)
    if np.linalg.cond(V) < 1e8:
        left = cl.W @ V
        right = np.linalg.solve(V, cl.B_cl)
        resolvent = 1.0 / (1j * omegas[:, None] - lam[None, :])
        T = np.einsum("ik,wk,kj->wij", left, resolvent, right)
    else:
        eye = np.eye(cl.n)
        T = np.stack(
            [cl.W @ np.linalg.solve(1j * w * eye - cl.A_cl, cl.B_cl) for w in omegas]
        )
    per_output = np.sum(np.abs(T) ** 2, axis=2)
    return PsdResult(omegas, per_output.sum(axis=1), per_output)


def _resonances(A):
    lam = np.linalg.eigvals(A)
    return np.unique(np.round(np.abs(lam.imag[np.abs(lam.imag) > 1e-9]), 9))


def frequency_grid(
    cl: ClosedLoop | None = None,
    omega_min: float = 1e-2,
    omega_max: float = 1e3,
    points: int = 2000,
    halfwidth: float = 5.0,
    refine_points: int = 1001,
) -> np.ndarray:
    """Log-spaced grid plus dense linear refinement around closed-loop resonances."""
    if not 0 < omega_min < omega_max:
        raise ValueError("need 0 < omega_min < omega_max")
    parts = [np.geomspace(omega_min, omega_max, points)]
    if cl is not None:
        for w0 in _resonances(cl.A_cl):
            lo, hi = max(omega_min, w0 - halfwidth), min(omega_max, w0 + halfwidth)
            if lo < hi:
                parts.append(np.linspace(lo, hi, refine_points))
    return np.unique(np.concatenate(parts))


def parseval_cost(cl: ClosedLoop, omega_max: float = 1e4) -> float:
    """``(1/2 pi) int S(w) dw`` over ``[-omega_max, omega_max]`` by adaptive quadrature.

    The interval is split at the closed-loop resonances (both signs) and at
    their half-power neighbours so that quad resolves each peak.
    """

    def S(w):
        return psd(cl, [w]).total[0]

    lam = np.linalg.eigvals(cl.A_cl)
    breaks = {0.0, -omega_max, omega_max}
    for ev in lam:
        for sgn in (1.0, -1.0):
            c = sgn * abs(ev.imag)
            for off in (-3, -1, 0, 1, 3):
                b = c + off * abs(ev.real)
                if -omega_max < b < omega_max:
                    breaks.add(float(b))
    edges = sorted(breaks)
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        val, _ = sint.quad(S, a, b, limit=200, epsrel=1e-10, epsabs=0.0)
        total += val
    return total / (2 * np.pi)


def covariance_march(cl: ClosedLoop, dt: float, t_final: float, intensity: float = 1.0):
    """Propagate ``Sigma_{k+1} = Phi Sigma_k Phi* + Qd`` from ``Sigma_0 = 0``.

    ``Phi = exp(A_cl dt)`` and ``Qd = int_0^dt e^{As} B B* e^{A*s} ds`` are
    obtained together from one matrix exponential (Van Loan).
    """
    A = cl.A_cl
    if not is_hurwitz(A):
        raise PreconditionError("closed loop is not Hurwitz")
    if dt <= 0 or dt * np.linalg.norm(A, 2) >= 0.1:
        raise PreconditionError(
            f"step too large: dt*||A|| = {dt * np.linalg.norm(A, 2):.3g} must be < 0.1"
        )
    n = A.shape[0]
    BB = intensity * cl.B_cl @ adjoint(cl.B_cl)
    M = np.block([[-A, BB], [np.zeros((n, n)), adjoint(A)]]) * dt
    E = sla.expm(M)
    Phi = adjoint(E[n:, n:])
    Qd = Phi @ E[:n, n:]
    Sigma = np.zeros_like(Qd)
    for _ in range(int(round(t_final / dt))):
        Sigma = Phi @ Sigma @ adjoint(Phi) + Qd
    return (Sigma + adjoint(Sigma)) / 2


def commutation_residual(cl: ClosedLoop) -> float:
    """``||A_cl Theta + Theta A_cl^T + B_cl Theta B_cl^T||`` for a real closed loop.

    Vanishes when plant and controller are both realizable.
    """
    if cl.is_complex:
        raise ValueError("commutation identity applies to quadrature closed loops")
    Th = commutation_matrix(cl.n)
    Tw = sla.block_diag(*[commutation_matrix(m) for m in cl.channel_sizes if m])
    Z = cl.A_cl @ Th + Th @ cl.A_cl.T + cl.B_cl @ Tw @ cl.B_cl.T
    return float(np.linalg.norm(Z))


@dataclass
class SynthesisReport:
    """Everything produced by one end-to-end synthesis run."""

    mode: str
    plant: EqualizerPlant
    weights: LqgWeights
    gains: LqgGains
    controller: CoherentController
    closed_loop: ClosedLoop
    covariance: np.ndarray
    cost: float
    cost_half_intensity: float
    pr_residuals: tuple
    hinf_norm: float | None
    solver_residuals: dict
    timing: dict = field(default_factory=dict)

    @property
    def classical(self) -> ClassicalController:
        return self.gains.controller


def _stage(name, fn, *args, **kw):
    try:
        return fn(*args, **kw)
    except EqualizerError as exc:
        raise type(exc)(f"[{name}] {exc}") from exc


def synthesize_equalizer(plant: EqualizerPlant, weights: LqgWeights) -> SynthesisReport:
    """Classical LQG design, coherent implementation, closed loop and cost.

    The mode follows the plant: complex plants get a passive controller,
    real plants an active one.
    """
    timing = {}
    t0 = time.perf_counter()
    gains = _stage("lqg", lqg_gains, plant, weights)
    timing["lqg"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    cls = gains.controller
    if plant.is_complex:
        mode = "passive"
        coh = _stage("realize", complete_passive, cls.A_k, cls.B_y, cls.C_k)
        G_tilde = np.hstack([coh.G_c0, coh.G_c1, coh.transform @ coh.B_y])
        H_tilde = np.vstack(
            [coh.C_k @ np.linalg.inv(coh.transform), coh.H_c1, coh.H_c2]
        )
        F2 = coh.transform @ coh.A_k @ np.linalg.inv(coh.transform)
        pr = passive_pr_residuals(F2, G_tilde, H_tilde)
        hinf = coh.hinf_norm
    else:
        mode = "active"
        coh = _stage("realize", complete_active, cls)
        chk: ActivePRCheck = verify_active_pr(
            coh.as_quadrature_system(), n_v=coh.C_k.shape[0] + coh.n_v2, n_u=coh.B_y.shape[1]
        )
        pr = (chk.commutation_residual, chk.output_residual)
        hinf = None
    timing["realize"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    cl = _stage("closed-loop", close_loop, plant, coh, weights)
    Q, lyap = _stage("cost", closed_loop_covariance, cl)
    cost = float(np.trace(cl.Rbar @ Q).real)
    half = _stage("cost", evaluate_cost, cl, 0.5)
    timing["cost"] = time.perf_counter() - t0

    residuals = {
        "control_riccati": gains.control_report.residual_norm,
        "filter_riccati": gains.filter_residual,
        "lyapunov": lyap.residual_norm,
    }
    return SynthesisReport(
        mode=mode,
        plant=plant,
        weights=weights,
        gains=gains,
        controller=coh,
        closed_loop=cl,
        covariance=Q,
        cost=cost,
        cost_half_intensity=half,
        pr_residuals=pr,
        hinf_norm=hinf,
        solver_residuals=residuals,
        timing=timing,
    )
