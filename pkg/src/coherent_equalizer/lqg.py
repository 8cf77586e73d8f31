"""Classical LQG synthesis for the equalizer plant."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, NumericalError, PreconditionError
from .matxeq import SolveReport, adjoint, is_hurwitz, solve_care
from .model import EqualizerPlant

__all__ = [
    "LqgWeights",
    "NoiseModel",
    "ClassicalController",
    "LqgGains",
    "assemble_noise",
    "lqg_gains",
    "synthesize",
]


@dataclass(frozen=True)
class LqgWeights:
    """Weights of the cost ``lim 1/T int <e* R1 e + mu u_hat* R2 u_hat> dt``.

    ``R1`` may be given on the error ``e`` (size ``n_e``) or directly on
    the plant state (size ``n``); :meth:`state_weight` resolves either.
    """

    R1: np.ndarray
    R2: np.ndarray
    mu: float = 1.0

    def __post_init__(self):
        R1 = np.atleast_2d(np.asarray(self.R1))
        R2 = np.atleast_2d(np.asarray(self.R2))
        if not self.mu > 0:
            raise ValueError(f"control penalty mu must be positive, got {self.mu}")
        if R1.shape[0] != R1.shape[1] or R2.shape[0] != R2.shape[1]:
            raise DimensionError("R1 and R2 must be square")
        if np.linalg.eigvalsh((R1 + adjoint(R1)) / 2).min() < -1e-12:
            raise ValueError("R1 must be positive semidefinite")
        if np.linalg.eigvalsh((R2 + adjoint(R2)) / 2).min() <= 0:
            raise ValueError("R2 must be positive definite")
        object.__setattr__(self, "R1", R1)
        object.__setattr__(self, "R2", R2)
        object.__setattr__(self, "mu", float(self.mu))

    @property
    def control_weight(self) -> np.ndarray:
        """Effective Riccati control weight ``mu R2``."""
        return self.mu * self.R2

    def state_weight(self, plant: EqualizerPlant) -> np.ndarray:
        S = plant.selector
        if self.R1.shape == (plant.n_e, plant.n_e):
            return S.T @ self.R1 @ S
        if self.R1.shape == (plant.n, plant.n):
            return self.R1
        raise DimensionError(
            f"R1 must be {plant.n_e}x{plant.n_e} (on e) or {plant.n}x{plant.n} (on the state)"
        )

    def error_output(self, plant: EqualizerPlant) -> np.ndarray:
        """Map from plant state to the weighted error ``R1^(1/2) e``."""
        if self.R1.shape == (plant.n_e, plant.n_e):
            return _psd_sqrt(self.R1) @ plant.selector
        return _psd_sqrt(self.state_weight(plant))


def _psd_sqrt(M):
    w, V = np.linalg.eigh((M + adjoint(M)) / 2)
    return (V * np.sqrt(np.clip(w, 0, None))) @ adjoint(V)


@dataclass(frozen=True)
class NoiseModel:
    """Process, measurement and cross noise intensities."""

    V1: np.ndarray
    V2: np.ndarray
    V12: np.ndarray


@dataclass(frozen=True)
class ClassicalController:
    """``dx_k = A_k x_k dt + B_y dy``, ``du_hat = C_k x_k dt``."""

    A_k: np.ndarray
    B_y: np.ndarray
    C_k: np.ndarray

    @property
    def n_k(self) -> int:
        return self.A_k.shape[0]

    def transfer(self, s: complex) -> np.ndarray:
        """Frequency response ``C_k (sI - A_k)^-1 B_y`` at ``s``."""
        return self.C_k @ np.linalg.solve(s * np.eye(self.n_k) - self.A_k, self.B_y)


@dataclass(frozen=True)
class LqgGains:
    """Riccati solutions and gains behind a synthesized controller."""

    P: np.ndarray
    Q: np.ndarray
    F: np.ndarray
    K: np.ndarray
    control_report: SolveReport
    filter_report: SolveReport
    filter_residual: float
    controller: ClassicalController


def assemble_noise(plant: EqualizerPlant) -> NoiseModel:
    """Noise intensities from unit-intensity exogenous channels.

    Raises
    ------
    PreconditionError
        If ``V2 = D_w1 D_w1*`` is singular; the message names a null direction.
    """
    B, D = plant.B_w1, plant.D_w1
    V2 = D @ adjoint(D)
    w, vecs = np.linalg.eigh(V2)
    if w.min() <= 1e-12 * max(1.0, w.max()):
        raise PreconditionError(
            "measurement noise intensity V2 is singular; null direction "
            f"{np.round(vecs[:, 0], 6).tolist()}"
        )
    return NoiseModel(V1=B @ adjoint(B), V2=V2, V12=B @ adjoint(D))


def lqg_gains(
    plant: EqualizerPlant, weights: LqgWeights, noise: NoiseModel | None = None
) -> LqgGains:
    """Solve the control and filter Riccati equations and form the controller."""
    if noise is None:
        noise = assemble_noise(plant)
    A, B, C = plant.A, plant.B_hat, plant.C
    Rw = weights.control_weight
    if Rw.shape != (plant.n_hat, plant.n_hat):
        raise DimensionError(f"R2 must be {plant.n_hat}x{plant.n_hat}, got {Rw.shape}")
    Qw = weights.state_weight(plant)

    P, p_rep = solve_care(A, B, Qw, Rw)
    F = np.linalg.solve(Rw, adjoint(B) @ P)

    V2inv = np.linalg.inv(noise.V2)
    A_f = A - noise.V12 @ V2inv @ C
    V1_f = noise.V1 - noise.V12 @ V2inv @ adjoint(noise.V12)
    V1_f = (V1_f + adjoint(V1_f)) / 2
    # filter ARE is the dual control ARE
    Q, q_rep = solve_care(adjoint(A_f), adjoint(C), V1_f, noise.V2)
    K = (Q @ adjoint(C) + noise.V12) @ V2inv

    res = A_f @ Q + Q @ adjoint(A_f) - Q @ adjoint(C) @ V2inv @ C @ Q + V1_f
    scale = 2 * np.linalg.norm(A_f) * np.linalg.norm(Q) + np.linalg.norm(V1_f) + np.linalg.norm(
        Q @ adjoint(C) @ V2inv @ C @ Q
    )
    filt_res = float(np.linalg.norm(res) / scale) if scale else 0.0
    if filt_res > 1e-9 * (1 + np.linalg.norm(Q)):
        raise NumericalError(f"filter Riccati residual {filt_res:.3e}")

    A_k = A - K @ C - B @ F + K @ plant.D_hat @ F
    if not is_hurwitz(A_k):
        raise PreconditionError(
            f"controller matrix A_k is not Hurwitz; eigenvalues {np.linalg.eigvals(A_k)}"
        )
    ctrl = ClassicalController(A_k=A_k, B_y=K, C_k=-F)
    return LqgGains(P, Q, F, K, p_rep, q_rep, filt_res, ctrl)


def synthesize(
    plant: EqualizerPlant, weights: LqgWeights, noise: NoiseModel | None = None
) -> ClassicalController:
    """Output-feedback LQG controller for ``plant``."""
    return lqg_gains(plant, weights, noise).controller
