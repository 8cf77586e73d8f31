import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coherent_equalizer.errors import DimensionError, PreconditionError
from coherent_equalizer.matxeq import (
    adjoint,
    hinf_exceeds,
    hinf_norm,
    is_hurwitz,
    skew_factor,
    solve_care,
    solve_lyapunov,
)
from coherent_equalizer.model import commutation_matrix

SQRT2 = np.sqrt(2.0)
RESONANT = (np.array([[0.0, 1.0], [-1.0, -0.2]]), np.array([[0.0], [1.0]]), np.array([[1.0, 0.0]]))


def random_hurwitz(rng, n, complex_=False):
    M = rng.standard_normal((n, n))
    if complex_:
        M = M + 1j * rng.standard_normal((n, n))
    shift = np.abs(np.linalg.eigvals(M).real).max() + 0.5
    return M - shift * np.eye(n)


def dense_sweep_norm(F, G, H, omegas):
    n = F.shape[0]
    return max(
        np.linalg.norm(H @ np.linalg.solve(1j * w * np.eye(n) - F, G), 2) for w in omegas
    )


# --------------------------------------------------------------------------
# stability


@pytest.mark.parametrize(
    "A, expected",
    [([[-1.0]], True), ([[0.0, 1.0], [-1.0, 0.0]], False), ([[0.0, 1.0], [-2.0, -3.0]], True)],
)
def test_is_hurwitz_examples(A, expected):
    assert is_hurwitz(np.array(A)) is expected


def test_is_hurwitz_rejects_non_finite():
    with pytest.raises(ValueError):
        is_hurwitz(np.array([[np.nan]]))


# --------------------------------------------------------------------------
# Lyapunov


@pytest.mark.parametrize(
    "A, N, X",
    [
        ([[-1.0]], [[2.0]], [[1.0]]),
        (np.diag([-1.0, -2.0]), np.eye(2), np.diag([0.5, 0.25])),
        ([[0.0, 1.0], [-2.0, -3.0]], np.diag([0.0, 2.0]), [[1 / 6, 0.0], [0.0, 1 / 3]]),
    ],
)
def test_lyapunov_examples(A, N, X):
    got, rep = solve_lyapunov(np.array(A), np.array(N))
    assert np.allclose(got, X, atol=1e-10, rtol=0)
    assert rep.residual_norm <= 1e-10 * (1 + np.linalg.norm(got))


def test_lyapunov_requires_hurwitz():
    with pytest.raises(PreconditionError):
        solve_lyapunov(np.array([[0.0, 1.0], [-1.0, 0.0]]), np.eye(2))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 5))
def test_lyapunov_solution_is_hermitian_psd(seed, n):
    rng = np.random.default_rng(seed)
    A = random_hurwitz(rng, n, complex_=True)
    B = rng.standard_normal((n, 2)) + 1j * rng.standard_normal((n, 2))
    X, _ = solve_lyapunov(A, B @ adjoint(B))
    assert np.allclose(X, adjoint(X), atol=1e-12)
    assert np.linalg.eigvalsh(X).min() > -1e-10 * np.linalg.norm(X)
    res = A @ X + X @ adjoint(A) + B @ adjoint(B)
    assert np.linalg.norm(res) <= 1e-9 * (1 + np.linalg.norm(X)) * (1 + np.linalg.norm(A))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 5))
def test_lyapunov_real_and_complex_paths_agree(seed, n):
    rng = np.random.default_rng(seed)
    A = random_hurwitz(rng, n)
    B = rng.standard_normal((n, n))
    Xr, _ = solve_lyapunov(A, B @ B.T)
    Xc, _ = solve_lyapunov(A.astype(complex), (B @ B.T).astype(complex))
    assert np.abs(Xr - Xc).max() <= 1e-12 * max(1.0, np.abs(Xr).max())


# --------------------------------------------------------------------------
# Riccati


@pytest.mark.parametrize(
    "A, P",
    [([[0.0]], 1.0), ([[1.0]], 1 + SQRT2)],
)
def test_care_scalar_examples(A, P):
    got, rep = solve_care(np.array(A), np.eye(1), np.eye(1), np.eye(1))
    assert abs(got[0, 0] - P) <= 1e-9
    assert rep.residual_norm <= 1e-9 * (1 + abs(P))


def test_care_zero_weight_on_stable_plant():
    got, _ = solve_care(np.array([[-1.0]]), np.eye(1), np.zeros((1, 1)), np.eye(1))
    assert abs(got[0, 0]) <= 1e-9


def test_care_unstabilizable_pair_is_rejected():
    with pytest.raises(PreconditionError):
        solve_care(np.array([[1.0]]), np.zeros((1, 1)), np.eye(1), np.eye(1))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 4))
def test_care_closed_loop_is_hurwitz(seed, n):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    B = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    P, _ = solve_care(A, B, np.eye(n), np.eye(n))
    assert is_hurwitz(A - B @ adjoint(B) @ P)
    assert np.linalg.eigvalsh(P).min() > -1e-10


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 4))
def test_care_real_and_complex_paths_agree(seed, n):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((n, n))
    B = rng.standard_normal((n, 2))
    Pr, _ = solve_care(A, B, np.eye(n), np.eye(2))
    Pc, _ = solve_care(A.astype(complex), B.astype(complex), np.eye(n, dtype=complex), np.eye(2))
    assert np.abs(Pr - Pc).max() <= 1e-12 * max(1.0, np.abs(Pr).max())


# --------------------------------------------------------------------------
# H-infinity norm


@pytest.mark.parametrize("F, expected", [([[-2.0]], 0.5), ([[-1.0]], 1.0)])
def test_hinf_first_order_lags(F, expected):
    assert abs(hinf_norm(np.array(F), np.eye(1), np.eye(1)) - expected) <= 1e-6 * expected


def test_hinf_resonant_peak_against_dense_sweep():
    zeta = 0.1
    analytic = 1 / (2 * zeta * np.sqrt(1 - zeta**2))
    sweep = dense_sweep_norm(*RESONANT, np.linspace(0.9, 1.1, 200_001))
    got = hinf_norm(*RESONANT)
    assert abs(sweep - analytic) <= 1e-6 * analytic
    assert abs(got - sweep) <= 1e-3 * sweep
    assert abs(got - 5.0252) <= 1e-3 * 5.0252


def test_hinf_requires_hurwitz():
    with pytest.raises(PreconditionError):
        hinf_norm(np.zeros((1, 1)), np.eye(1), np.eye(1))


def test_hinf_sees_negative_frequencies_of_complex_systems():
    # single mode resonant at -10 rad/s only
    F = np.array([[-0.5 - 10j]])
    assert abs(hinf_norm(F, np.eye(1), np.eye(1)) - 2.0) <= 1e-6 * 2


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 4), st.booleans())
def test_hinf_bounds_every_swept_gain(seed, n, cplx):
    rng = np.random.default_rng(seed)
    F = random_hurwitz(rng, n, cplx)
    G = rng.standard_normal((n, 2))
    H = rng.standard_normal((2, n))
    norm = hinf_norm(F, G, H)
    omegas = np.geomspace(1e-3, 1e3, 200)
    swept = dense_sweep_norm(F, G, H, np.concatenate([omegas, -omegas]))
    assert norm >= swept * (1 - 1e-6)
    assert hinf_exceeds(F, G, H, norm * (1 - 1e-4))
    assert not hinf_exceeds(F, G, H, norm * (1 + 1e-4))


# --------------------------------------------------------------------------
# skew-symmetric factorization


def test_skew_factor_of_canonical_block_is_identity():
    B = skew_factor(commutation_matrix(2))
    assert np.allclose(B @ commutation_matrix(2) @ B.T, commutation_matrix(2), atol=1e-12)
    assert np.allclose(np.abs(B), np.eye(2), atol=1e-12)


def test_skew_factor_of_negated_block_is_flip():
    Z = -commutation_matrix(2)
    B = skew_factor(Z)
    flip = np.array([[0.0, 1.0], [1.0, 0.0]])
    assert np.allclose(flip @ commutation_matrix(2) @ flip.T, Z)
    assert np.allclose(B @ commutation_matrix(2) @ B.T, Z, atol=1e-12)
    assert B.shape == (2, 2)


def test_skew_factor_of_zero_is_empty():
    assert skew_factor(np.zeros((4, 4))).shape == (4, 0)


def test_skew_factor_rejects_non_skew_input():
    with pytest.raises(DimensionError):
        skew_factor(np.eye(2))


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 4), st.integers(0, 3))
def test_skew_factor_reconstructs_with_minimal_columns(seed, half, deficiency):
    rng = np.random.default_rng(seed)
    m = 2 * half + 2
    # rank controlled through a thin factor
    r = max(0, m - 2 * deficiency)
    L = rng.standard_normal((m, r))
    S = rng.standard_normal((r, r))
    Z = L @ (S - S.T) @ L.T
    B = skew_factor(Z)
    assert np.abs(B @ commutation_matrix(B.shape[1]) @ B.T - Z).max() <= 1e-9 * max(1.0, np.linalg.norm(Z))
    assert B.shape[1] == np.linalg.matrix_rank(Z, tol=1e-9 * max(1.0, np.linalg.norm(Z)))
