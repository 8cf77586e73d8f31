"""Passive (annihilation) and active (quadrature) linear quantum system models.

Passive systems live on complex matrices, active ones on real matrices with
canonical commutation structure.  The equalizer plant is the series
combination of a quantum channel and a first-order low-pass filter whose
state is the band-limited estimation error.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, NumericalError

__all__ = [
    "J_THETA",
    "commutation_matrix",
    "conversion_matrix",
    "quadrature_matrix",
    "AnnihilationSystem",
    "QuadratureSystem",
    "LowPassFilter",
    "EqualizerPlant",
    "to_quadrature",
    "compose_equalizer_plant",
    "paper_example_channel",
    "paper_example_plant",
    "EXAMPLE_CONSTANTS",
]

J_THETA = np.array([[0.0, 1.0], [-1.0, 0.0]])

#: Channel/filter constants of the optical cavity equalization example.
EXAMPLE_CONSTANTS = {
    "kappa": 5.0,
    "k": 0.4,
    "m": float(np.sqrt(1.0 - 0.4**2)),
    "Omega": 10.0,
    "tau": 0.1,
}

_IMAG_TOL = 1e-12


def _frozen(M, dtype=None):
    M = np.array(M, dtype=dtype)
    M.setflags(write=False)
    return M


def _as_matrix(M, name, dtype=None):
    M = np.atleast_2d(np.asarray(M, dtype=dtype))
    if M.ndim != 2:
        raise DimensionError(f"{name} must be a 2-D matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise DimensionError(f"{name} has non-finite entries")
    return M


def _with_rows(M, n, name, dtype):
    """``M`` as a matrix with ``n`` rows; 1-D input is reshaped."""
    M = np.asarray(M, dtype=dtype)
    if M.ndim == 2 and M.shape[0] == n:
        return M
    if M.ndim <= 1 and n > 0 and M.size % n == 0:
        return M.reshape(n, -1)
    raise DimensionError(f"{name} must have {n} rows, got shape {M.shape}")


def _with_cols(M, n, name, dtype):
    """``M`` as a matrix with ``n`` columns; 1-D input is a single row."""
    M = np.asarray(M, dtype=dtype)
    if M.ndim == 2 and M.shape[1] == n:
        return M
    if M.ndim <= 1 and M.size == n:
        return M.reshape(1, n)
    raise DimensionError(f"{name} must have {n} columns, got shape {M.shape}")


def commutation_matrix(m: int) -> np.ndarray:
    """Canonical commutation matrix ``blockdiag(J, ..., J)`` of size ``m``.

    ``m = 0`` yields an empty matrix, which is convenient for systems
    without any channel of a given kind.
    """
    if m < 0 or m % 2:
        raise DimensionError(f"commutation matrix size must be even and >= 0, got {m}")
    return np.kron(np.eye(m // 2), J_THETA)


def conversion_matrix(k: int) -> np.ndarray:
    """Annihilation-to-quadrature map for ``k`` modes.

    Acts on the stacked vector ``[a; a#]`` and returns the quadratures in
    per-mode interleaved order ``(q1, p1, q2, p2, ...)``, i.e. the rows of
    ``[[I, I], [-iI, iI]]`` permuted so that the canonical commutation
    matrix is block diagonal.
    """
    eye = np.eye(k)
    phi = np.block([[eye, eye], [-1j * eye, 1j * eye]])
    order = [j for i in range(k) for j in (i, i + k)]
    return phi[order]


def quadrature_matrix(M) -> np.ndarray:
    """Real ``2p x 2q`` image ``Phi_p blockdiag(M, M#) Phi_q^-1`` of a complex ``p x q`` matrix."""
    M = np.atleast_2d(np.asarray(M, dtype=complex))
    p, q = M.shape
    doubled = np.block([[M, np.zeros((p, q))], [np.zeros((p, q)), M.conj()]])
    # Phi_q^-1 = Phi_q^H / 2
    out = conversion_matrix(p) @ doubled @ conversion_matrix(q).conj().T / 2.0
    residue = np.abs(out.imag).max(initial=0.0)
    if residue > _IMAG_TOL * max(1.0, np.abs(out).max(initial=0.0)):
        raise NumericalError(f"quadrature conversion left imaginary residue {residue:.3e}")
    return out.real


@dataclass(frozen=True)
class AnnihilationSystem:
    """Complex state-space model ``da = F a dt + G dw``, ``dy = H a dt + J dw``."""

    F: np.ndarray
    G: np.ndarray
    H: np.ndarray
    J: np.ndarray

    def __post_init__(self):
        F = _as_matrix(self.F, "F", complex)
        n = F.shape[0]
        if F.shape != (n, n):
            raise DimensionError(f"F must be square, got {F.shape}")
        G = _with_rows(self.G, n, "G", complex)
        H = _with_cols(self.H, n, "H", complex)
        J = _as_matrix(self.J, "J", complex)
        if J.shape != (H.shape[0], G.shape[1]):
            raise DimensionError(f"J must be {H.shape[0]}x{G.shape[1]}, got {J.shape}")
        for name, M in zip("FGHJ", (F, G, H, J)):
            object.__setattr__(self, name, _frozen(M))

    @property
    def n(self) -> int:
        return self.F.shape[0]

    @property
    def n_w(self) -> int:
        return self.G.shape[1]

    @property
    def n_y(self) -> int:
        return self.H.shape[0]


@dataclass(frozen=True)
class QuadratureSystem:
    """Real state-space model ``dx = A x dt + B dw``, ``dy = C x dt + D dw``.

    Every dimension is even: each mode carries a position/momentum pair.
    """

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray

    def __post_init__(self):
        A = _as_matrix(self.A, "A", float)
        n = A.shape[0]
        if A.shape != (n, n):
            raise DimensionError(f"A must be square, got {A.shape}")
        B = _with_rows(self.B, n, "B", float)
        C = _with_cols(self.C, n, "C", float)
        D = np.asarray(self.D, dtype=float)
        if D.size == 0:
            D = D.reshape(C.shape[0], B.shape[1])
        D = _as_matrix(D, "D")
        if D.shape != (C.shape[0], B.shape[1]):
            raise DimensionError(f"D must be {C.shape[0]}x{B.shape[1]}, got {D.shape}")
        for label, size in (("n", n), ("n_w", B.shape[1]), ("n_y", C.shape[0])):
            if size % 2:
                raise DimensionError(f"quadrature dimension {label}={size} is odd")
        for name, M in zip("ABCD", (A, B, C, D)):
            object.__setattr__(self, name, _frozen(M))

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def n_w(self) -> int:
        return self.B.shape[1]

    @property
    def n_y(self) -> int:
        return self.C.shape[0]


def to_quadrature(sys: AnnihilationSystem) -> QuadratureSystem:
    """Convert a passive annihilation-operator model to quadrature form."""
    return QuadratureSystem(*(quadrature_matrix(M) for M in (sys.F, sys.G, sys.H, sys.J)))


@dataclass(frozen=True)
class LowPassFilter:
    """First-order weighting filter ``dx_f = -(x_f/tau) dt + (du_hat - du)/tau``.

    Its state is the low-passed estimation error ``e = x_f``.
    """

    tau: float
    dim: int = 1
    is_complex: bool = True

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError(f"filter time constant must be positive, got {self.tau}")
        if self.dim < 1:
            raise DimensionError(f"filter dimension must be >= 1, got {self.dim}")

    @property
    def A(self) -> np.ndarray:
        return -np.eye(self.dim) / self.tau

    @property
    def B_hat(self) -> np.ndarray:
        return np.eye(self.dim) / self.tau

    @property
    def B_u(self) -> np.ndarray:
        return -np.eye(self.dim) / self.tau


@dataclass(frozen=True)
class EqualizerPlant:
    """Equalizer plant driven by the estimate ``u_hat`` and exogenous ``w1 = [u; w]``.

    Matrices are complex on the passive path and real on the active path.
    ``selector`` picks the filter error ``e`` out of the plant state.
    """

    A: np.ndarray
    B_hat: np.ndarray
    B_w1: np.ndarray
    C: np.ndarray
    D_w1: np.ndarray
    D_hat: np.ndarray = None
    selector: np.ndarray = None
    is_complex: bool = field(default=None)

    def __post_init__(self):
        cplx = self.is_complex
        if cplx is None:
            cplx = any(
                np.iscomplexobj(M) for M in (self.A, self.B_hat, self.B_w1, self.C, self.D_w1)
            )
        dtype = complex if cplx else float
        A = _as_matrix(self.A, "A", dtype)
        n = A.shape[0]
        if A.shape != (n, n):
            raise DimensionError(f"A must be square, got {A.shape}")
        B_hat = _as_matrix(self.B_hat, "B_hat", dtype)
        B_w1 = _as_matrix(self.B_w1, "B_w1", dtype)
        C = _as_matrix(self.C, "C", dtype)
        D_w1 = _as_matrix(self.D_w1, "D_w1", dtype)
        if B_hat.shape[0] != n:
            raise DimensionError(f"B_hat must have {n} rows, got {B_hat.shape}")
        if B_w1.shape[0] != n:
            raise DimensionError(f"B_w1 must have {n} rows, got {B_w1.shape}")
        if C.shape[1] != n:
            raise DimensionError(f"C must have {n} columns, got {C.shape}")
        if D_w1.shape != (C.shape[0], B_w1.shape[1]):
            raise DimensionError(
                f"D_w1 must be {C.shape[0]}x{B_w1.shape[1]}, got {D_w1.shape}"
            )
        D_hat = self.D_hat
        D_hat = np.zeros((C.shape[0], B_hat.shape[1])) if D_hat is None else D_hat
        D_hat = _as_matrix(D_hat, "D_hat", dtype)
        if D_hat.shape != (C.shape[0], B_hat.shape[1]):
            raise DimensionError(f"D_hat must be {C.shape[0]}x{B_hat.shape[1]}")
        sel = np.eye(n) if self.selector is None else self.selector
        sel = _as_matrix(sel, "selector", float)
        if sel.shape[1] != n:
            raise DimensionError(f"selector must have {n} columns, got {sel.shape}")
        if np.linalg.matrix_rank(sel) != sel.shape[0]:
            raise DimensionError("selector must have full row rank")
        values = dict(A=A, B_hat=B_hat, B_w1=B_w1, C=C, D_w1=D_w1, D_hat=D_hat, selector=sel)
        for name, M in values.items():
            object.__setattr__(self, name, _frozen(M))
        object.__setattr__(self, "is_complex", bool(cplx))

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def n_hat(self) -> int:
        return self.B_hat.shape[1]

    @property
    def n_w1(self) -> int:
        return self.B_w1.shape[1]

    @property
    def n_y(self) -> int:
        return self.C.shape[0]

    @property
    def n_e(self) -> int:
        return self.selector.shape[0]

    def to_quadrature(self) -> "EqualizerPlant":
        """Quadrature (active) image of a passive plant."""
        if not self.is_complex:
            raise ValueError("plant is already in quadrature form")
        conv = {
            name: quadrature_matrix(getattr(self, name))
            for name in ("A", "B_hat", "B_w1", "C", "D_w1", "D_hat", "selector")
        }
        return EqualizerPlant(**conv, is_complex=False)


def compose_equalizer_plant(channel, filt: LowPassFilter) -> EqualizerPlant:
    """Series-connect a quantum channel with the low-pass error filter.

    Parameters
    ----------
    channel : AnnihilationSystem or QuadratureSystem
        Channel whose input columns are ordered ``[u, w]``; the first
        ``filt.dim`` columns carry the transmitted signal ``u``.
    filt : LowPassFilter
        Weighting filter; it sees the estimate ``u_hat`` and the signal ``u``.

    Returns
    -------
    EqualizerPlant
        State ``[x_channel; x_f]``, output ``y`` of the channel and
        performance output ``e = x_f``.
    """
    if isinstance(channel, AnnihilationSystem):
        A, B, C, D = channel.F, channel.G, channel.H, channel.J
        cplx = True
    elif isinstance(channel, QuadratureSystem):
        A, B, C, D = channel.A, channel.B, channel.C, channel.D
        cplx = False
    else:
        raise TypeError(f"unsupported channel type {type(channel).__name__}")
    if cplx != filt.is_complex:
        raise DimensionError("channel and filter scalar fields differ (complex vs real)")
    nf = filt.dim
    n = A.shape[0]
    if B.shape[1] < nf:
        raise DimensionError(
            f"channel has {B.shape[1]} input columns but the filter needs {nf} signal inputs"
        )
    n_w = B.shape[1] - nf
    dtype = complex if cplx else float
    A_p = np.block([[A, np.zeros((n, nf))], [np.zeros((nf, n)), filt.A]]).astype(dtype)
    B_hat = np.vstack([np.zeros((n, nf)), filt.B_hat]).astype(dtype)
    B_w1 = np.block([[B[:, :nf], B[:, nf:]], [filt.B_u, np.zeros((nf, n_w))]]).astype(dtype)
    C_p = np.hstack([C, np.zeros((C.shape[0], nf))]).astype(dtype)
    selector = np.hstack([np.zeros((nf, n)), np.eye(nf)])
    return EqualizerPlant(
        A=A_p, B_hat=B_hat, B_w1=B_w1, C=C_p, D_w1=np.asarray(D, dtype=dtype),
        selector=selector, is_complex=cplx,
    )


def paper_example_channel(kappa=5.0, k=0.4, Omega=10.0) -> AnnihilationSystem:
    """Cavity plus two beam splitters, in the composed form quoted for the example."""
    m = np.sqrt(1.0 - k**2)
    g = np.sqrt(2.0 * kappa)
    return AnnihilationSystem(
        F=[[-k + 1j * Omega]],
        G=[[-k * g, -m * g]],
        H=[[k * g]],
        J=[[k**2 - m**2, 2.0 * k * m]],
    )


def paper_example_plant(mode: str = "passive") -> EqualizerPlant:
    """Equalizer plant of the optical cavity example (kappa=5, k=0.4, Omega=10, tau=0.1)."""
    c = EXAMPLE_CONSTANTS
    plant = compose_equalizer_plant(
        paper_example_channel(c["kappa"], c["k"], c["Omega"]), LowPassFilter(c["tau"])
    )
    if mode == "passive":
        return plant
    if mode == "active":
        return plant.to_quadrature()
    raise ValueError(f"mode must be 'passive' or 'active', got {mode!r}")
