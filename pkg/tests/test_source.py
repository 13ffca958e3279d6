import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qmfs_readout import (
    LossModel,
    LossPlacement,
    ReadoutConfig,
    measurement_stats,
)
from qmfs_readout.source import (
    apply_loss,
    bandwidth_prefactor,
    broadband_single_mode,
    broadband_two_mode,
    filtered_source,
    joint_basis,
    loss_covariance,
    squeezing_photons,
    vacuum,
)

squeeze = st.floats(0.0, 2.5)
angles = st.floats(-math.pi, math.pi)


def spectrum(model, omega):
    """Symmetrized field spectrum matrix at angular frequency ``omega``."""
    H = model.output_map.astype(complex)
    if model.filter_drift is not None:
        n = model.n_filter
        H = H + model.filter_output @ np.linalg.solve(
            -1j * omega * np.eye(n) - model.filter_drift, model.filter_gain)
    return (H @ model.noise_cov @ H.conj().T).real


@given(r=squeeze, theta=angles)
def test_single_mode_covariance_eigenvalues(r, theta):
    cov = broadband_single_mode(r, theta).field_covariance()
    assert np.linalg.eigvalsh(cov) == pytest.approx([math.exp(-2 * r), math.exp(2 * r)], rel=1e-9)
    # antisqueezed axis at angle theta
    axis = np.array([math.cos(theta), math.sin(theta)])
    assert axis @ cov @ axis == pytest.approx(math.exp(2 * r), rel=1e-9)


@given(r=squeeze)
def test_two_mode_joint_correlators(r):
    P = joint_basis()
    joint = P @ broadband_two_mode(r).field_covariance() @ P.T
    e = math.exp(2 * r)
    assert np.diag(joint) == pytest.approx([1 / e, 1 / e, e, e], rel=1e-9)
    assert np.abs(joint - np.diag(np.diag(joint))).max() < 1e-9 * e
    # each mode alone is thermal with cosh(2r)
    cov = broadband_two_mode(r).field_covariance()
    assert np.diag(cov) == pytest.approx([math.cosh(2 * r)] * 4)


def test_joint_basis_is_orthogonal():
    P = joint_basis()
    assert np.allclose(P @ P.T, np.eye(4))


@pytest.mark.parametrize("kind", ["two_mode", "single_mode"])
@pytest.mark.parametrize("r", [0.3, 1.15])
def test_filter_reaches_target_at_zero_frequency(kind, r):
    target = (broadband_two_mode(r) if kind == "two_mode"
              else broadband_single_mode(r, 0.4)).field_covariance()
    model = filtered_source(r, 3.0, kind=kind, theta=0.4)
    assert np.allclose(model.field_covariance(), target, atol=1e-10)
    assert np.allclose(spectrum(model, 0.0), target, atol=1e-10)
    # far outside the bandwidth the field is vacuum
    assert np.allclose(spectrum(model, 1e6), np.eye(target.shape[0]), atol=1e-6)


@pytest.mark.parametrize("r, Gamma", [(0.5, 2.0), (1.15, 10.0)])
def test_squeezed_spectrum_is_lorentzian_of_width_gamma(r, Gamma):
    model = filtered_source(r, Gamma)
    P = joint_basis()
    for w in [0.0, 0.3 * Gamma, Gamma, 4 * Gamma]:
        S = P @ spectrum(model, w) @ P.T
        expected = 1 - (1 - math.exp(-2 * r)) * Gamma ** 2 / (Gamma ** 2 + w ** 2)
        assert S[0, 0] == pytest.approx(expected, rel=1e-10)
        assert S[1, 1] == pytest.approx(expected, rel=1e-10)
    # antisqueezed excess halves at Gamma e^{-r}
    g_a = Gamma * math.exp(-r)
    S = P @ spectrum(model, g_a) @ P.T
    assert S[2, 2] - 1 == pytest.approx(0.5 * (math.exp(2 * r) - 1), rel=1e-10)


def test_filtered_engine_approaches_broadband():
    broad = measurement_stats(ReadoutConfig.qmfs(0.8, tau=5.0)).snr
    narrow = measurement_stats(ReadoutConfig.qmfs(0.8, tau=5.0, bandwidth=1e4)).snr
    assert narrow == pytest.approx(broad, rel=1e-3)


@given(r=squeeze, eta=st.floats(0, 1))
def test_input_loss_mixes_vacuum(r, eta):
    model = apply_loss(broadband_two_mode(r), eta)
    expected = loss_covariance(broadband_two_mode(r).field_covariance(), eta)
    assert np.allclose(model.field_covariance(), expected, atol=1e-9 * math.exp(2 * r))


def test_input_loss_on_filtered_source():
    base = filtered_source(0.9, 5.0)
    lossy = apply_loss(base, 0.7)
    expected = loss_covariance(base.field_covariance(), 0.7)
    assert np.allclose(lossy.field_covariance(), expected, atol=1e-10)


def test_loss_dual_route_for_statistics():
    """Output loss inside the engine equals the beamsplitter map on lossless statistics."""
    cfg = ReadoutConfig.qmfs(1.0, tau=3.0)
    lossless = measurement_stats(cfg)
    via_engine = measurement_stats(cfg.with_(eta=0.85))
    via_map = apply_loss(lossless, 0.85)
    for name in ("signal_ground", "signal_excited", "noise_ground", "noise_excited"):
        assert getattr(via_engine, name) == pytest.approx(getattr(via_map, name), rel=1e-10)


def test_input_loss_on_coherent_drive_scales_signal():
    cfg = ReadoutConfig.coherent(tau=4.0)
    lossy = cfg.with_(loss=LossModel(0.6, LossPlacement.INPUT))
    a, b = measurement_stats(cfg), measurement_stats(lossy)
    assert b.signal_ground == pytest.approx(math.sqrt(0.6) * a.signal_ground, rel=1e-10)
    assert b.noise_ground == pytest.approx(a.noise_ground, rel=1e-10)


def test_loss_bounds():
    with pytest.raises(ValueError):
        apply_loss(vacuum(2), 1.2)


def test_bandwidth_prefactor_limits():
    assert bandwidth_prefactor(1.0, 1e12, 10.0) == pytest.approx(1.0, abs=1e-9)
    assert bandwidth_prefactor(0.0, 3.0, 10.0) == 1.0
    # Gamma tau -> 0 kills the enhancement: prefactor ~ e^{-r}
    assert bandwidth_prefactor(1.0, 1e-9, 1.0) == pytest.approx(math.exp(-1.0), rel=1e-6)


def test_squeezing_photons():
    assert squeezing_photons(0.7) == pytest.approx(2 * math.sinh(0.7) ** 2)
    assert squeezing_photons(0.7, "single_mode") == pytest.approx(math.sinh(0.7) ** 2)


def test_unknown_kind_rejected():
    with pytest.raises(ValueError):
        filtered_source(0.5, 1.0, kind="three_mode")
    with pytest.raises(ValueError):
        filtered_source(0.5, 0.0)
