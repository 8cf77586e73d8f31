import numpy as np
import pytest

from coherent_equalizer.errors import PreconditionError
from coherent_equalizer.lqg import LqgWeights, assemble_noise, lqg_gains, synthesize
from coherent_equalizer.model import EqualizerPlant, paper_example_plant, quadrature_matrix

SQRT2 = np.sqrt(2.0)


def scalar_plant():
    # V1 = V2 = 1, V12 = 0
    return EqualizerPlant(A=[[-1.0]], B_hat=[[1.0]], B_w1=[[1.0, 0.0]], C=[[1.0]], D_w1=[[0.0, 1.0]])


def example_weights(plant):
    return LqgWeights(np.eye(plant.n_e), np.eye(plant.n_hat), 0.1)


def test_noise_of_unit_channel():
    p = EqualizerPlant(A=[[-1.0]], B_hat=[[1.0]], B_w1=[[1.0]], C=[[1.0]], D_w1=[[1.0]])
    nm = assemble_noise(p)
    for M in (nm.V1, nm.V2, nm.V12):
        assert np.allclose(M, [[1.0]])


def test_cavity_measurement_noise_is_unit():
    # (k^2 - m^2)^2 + (2 k m)^2 with m^2 = 1 - k^2
    nm = assemble_noise(paper_example_plant())
    assert abs(nm.V2[0, 0] - 1.0) <= 1e-14


def test_orthogonal_feedthrough_gives_no_cross_noise():
    nm = assemble_noise(scalar_plant())
    assert np.array_equal(nm.V12, [[0.0]])


def test_joint_noise_intensity_is_psd():
    for mode in ("passive", "active"):
        nm = assemble_noise(paper_example_plant(mode))
        joint = np.block([[nm.V1, nm.V12], [nm.V12.conj().T, nm.V2]])
        assert np.linalg.eigvalsh(joint).min() > -1e-12


def test_singular_measurement_noise_names_direction():
    p = EqualizerPlant(A=[[-1.0]], B_hat=[[1.0]], B_w1=[[1.0, 0.0]], C=[[1.0]], D_w1=[[0.0, 0.0]])
    with pytest.raises(PreconditionError, match="null direction"):
        assemble_noise(p)


def test_scalar_lqg_example():
    g = lqg_gains(scalar_plant(), LqgWeights([[1.0]], [[1.0]], 1.0))
    # both Riccati equations reduce to P^2 + 2P - 1 = 0
    assert abs(g.P[0, 0] - (SQRT2 - 1)) <= 1e-9
    assert abs(g.Q[0, 0] - (SQRT2 - 1)) <= 1e-9
    assert abs(g.F[0, 0] - 0.41421356) <= 1e-8
    assert abs(g.K[0, 0] - 0.41421356) <= 1e-8
    assert abs(g.controller.A_k[0, 0] - (1 - 2 * SQRT2)) <= 1e-9
    assert np.allclose(g.controller.C_k, -g.F) and np.allclose(g.controller.B_y, g.K)


def test_zero_state_weight_means_no_actuation():
    p = scalar_plant()
    g = lqg_gains(p, LqgWeights([[0.0]], [[1.0]], 1.0))
    assert np.allclose(g.F, 0, atol=1e-12)
    assert np.allclose(g.controller.C_k, 0, atol=1e-12)
    assert np.allclose(g.controller.A_k, p.A - g.K @ p.C, atol=1e-12)


@pytest.mark.parametrize("mode", ["passive", "active"])
def test_filter_riccati_residual(mode):
    p = paper_example_plant(mode)
    g = lqg_gains(p, example_weights(p))
    assert g.filter_residual <= 1e-9
    assert g.control_report.residual_norm <= 1e-9


@pytest.mark.parametrize("mode", ["passive", "active"])
def test_separation_of_closed_loop_spectrum(mode):
    p = paper_example_plant(mode)
    g = lqg_gains(p, example_weights(p))
    c = g.controller
    A_cl = np.block([[p.A, p.B_hat @ c.C_k], [c.B_y @ p.C, c.A_k]])
    expected = np.concatenate(
        [np.linalg.eigvals(p.A - p.B_hat @ g.F), np.linalg.eigvals(p.A - g.K @ p.C)]
    )
    got = np.linalg.eigvals(A_cl)
    dist = np.abs(expected[:, None] - got[None, :])
    assert dist.min(axis=1).max() <= 1e-8 * (1 + np.abs(expected).max())


def test_feedback_gain_shrinks_as_control_penalty_grows():
    p = paper_example_plant()
    norms = [
        np.linalg.norm(lqg_gains(p, LqgWeights(np.eye(1), np.eye(1), mu)).F)
        for mu in np.geomspace(0.1, 1.0, 5)
    ]
    assert all(a > b for a, b in zip(norms, norms[1:]))
    far = np.linalg.norm(lqg_gains(p, LqgWeights(np.eye(1), np.eye(1), 1e8)).F)
    assert far < 1e-3 * norms[0]


def test_active_gains_are_quadrature_images_of_passive_gains():
    passive, active = paper_example_plant("passive"), paper_example_plant("active")
    gp = lqg_gains(passive, example_weights(passive))
    ga = lqg_gains(active, example_weights(active))
    for name in ("P", "Q", "F", "K"):
        assert np.allclose(quadrature_matrix(getattr(gp, name)), getattr(ga, name), atol=1e-9)


def test_state_and_error_weights_are_equivalent():
    p = paper_example_plant()
    on_error = synthesize(p, LqgWeights([[1.0]], [[1.0]], 0.1))
    on_state = synthesize(p, LqgWeights(np.diag([0.0, 1.0]), [[1.0]], 0.1))
    assert np.allclose(on_error.A_k, on_state.A_k) and np.allclose(on_error.C_k, on_state.C_k)


def test_weights_validation():
    with pytest.raises(ValueError):
        LqgWeights([[1.0]], [[1.0]], 0.0)
    with pytest.raises(ValueError):
        LqgWeights([[-1.0]], [[1.0]], 1.0)
    with pytest.raises(ValueError):
        LqgWeights([[1.0]], [[0.0]], 1.0)
