import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from qmfs_readout import (
    QubitState,
    ReadoutConfig,
    StepSizeRejected,
    SingularDrift,
    build_system,
    evolve_mean,
    initial_state,
    output_zero_frequency_transfer,
    propagate_covariance,
    state_at,
    steady_state_mean,
    transform_cavities,
    uncertainty_margin,
)
from qmfs_readout.source import joint_basis

G, E = QubitState.GROUND, QubitState.EXCITED


@pytest.mark.parametrize("chi, tau", [(0.5, 0.3), (0.5, 20.0), (0.1, 3.0), (2.0, 7.5)])
@pytest.mark.parametrize("q", [G, E])
def test_coherent_signal_matches_closed_form(chi, tau, q):
    cfg = ReadoutConfig.coherent(chi=chi, nbar0=4.0, tau=tau)
    st_ = state_at(build_system(cfg, q), tau)
    expected = float(oracles.coherent_signal(chi, 1.0, 4.0, tau, q.sign))
    assert st_.M_mean == pytest.approx(expected, rel=1e-11, abs=1e-13)
    assert st_.M_var == pytest.approx(tau, rel=1e-11)  # vacuum noise


@pytest.mark.parametrize("tau", [0.5, 5.0, 30.0])
@pytest.mark.parametrize("theta", [0.0, math.pi / 4, math.pi / 2, 2.0])
def test_single_mode_noise_matches_autocorrelation_oracle(tau, theta):
    r = 0.5 * math.log(10)
    cfg = ReadoutConfig.single_mode(r, theta=theta, tau=tau)
    for q in (G, E):
        got = state_at(build_system(cfg, q), tau).M_var
        ref = oracles.record_variance([(1, 0.5)], oracles.single_mode_cov(r, theta), tau, q.sign)
        assert got == pytest.approx(float(ref), rel=1e-10)


@pytest.mark.parametrize("dchi, dkappa", [(0.0, 0.0), (0.1, 0.2), (0.1, 0.0), (-0.2, 0.3)])
def test_two_cavity_noise_matches_autocorrelation_oracle(dchi, dkappa):
    r, tau = 1.0, 6.0
    cfg = ReadoutConfig.asymmetric(r, dchi, 0.5, dkappa, 1.0, tau=tau)
    cav = [(1.0 + dkappa, dchi + 0.5), (1.0 - dkappa, dchi - 0.5)]
    for q in (G, E):
        got = state_at(build_system(cfg, q), tau).M_var
        ref = oracles.record_variance(cav, oracles.two_mode_cov(r), tau, q.sign)
        assert got == pytest.approx(float(ref), rel=1e-10)


def test_basis_change_equivalence():
    cfg = ReadoutConfig.asymmetric(0.9, 0.07, 0.5, 0.1, 1.0, nbar0=2.0, tau=4.0)
    system = build_system(cfg, G)
    joint = transform_cavities(system)
    S = np.eye(system.dim)
    (first, _), *_ = system.cavity_modes
    S[first:first + 4, first:first + 4] = joint_basis()
    times = [0.5, 2.0, 4.0]
    for a, b in zip(propagate_covariance(system, times), propagate_covariance(joint, times)):
        assert np.abs(S @ a.covariance @ S.T - b.covariance).max() < 1e-8
        assert np.abs(S @ a.mean - b.mean).max() < 1e-8
    assert joint.labels[first:first + 4] == ("X-", "Y+", "X+", "Y-")


@pytest.mark.parametrize("chi", [0.1, 0.5, 2.0])
def test_qmfs_subsystems_stay_decoupled(chi):
    cfg = ReadoutConfig.qmfs(1.2, chi=chi, nbar0=3.0, t0=-2.0)
    joint = transform_cavities(build_system(cfg, E))
    times = np.linspace(0.0, 10.0, 11)
    for s in propagate_covariance(joint, times):
        C = s.covariance
        quiet, loud = [0, 1, 4], [2, 3]  # (X-, Y+, M) against (X+, Y-)
        assert np.abs(C[np.ix_(quiet, loud)]).max() < 1e-10


def test_rk4_matches_expm():
    cfg = ReadoutConfig.single_mode(0.7, theta=1.0, nbar0=2.0, tau=5.0, bandwidth=4.0, t0=-1.0)
    system = build_system(cfg, G)
    times = [1.0, 5.0]
    for a, b in zip(propagate_covariance(system, times),
                    propagate_covariance(system, times, method="rk4")):
        assert np.allclose(a.covariance, b.covariance, rtol=1e-8, atol=1e-9)
        assert np.allclose(a.mean, b.mean, rtol=1e-8, atol=1e-9)


def test_rk4_rejects_tight_tolerance():
    system = build_system(ReadoutConfig.qmfs(1.5, tau=5.0), G)
    with pytest.raises(StepSizeRejected):
        propagate_covariance(system, [5.0], method="rk4", rtol=1e-18)


def test_unknown_method():
    with pytest.raises(ValueError):
        propagate_covariance(build_system(ReadoutConfig.coherent(), G), [1.0], method="euler")


def test_presettled_drive_gives_linear_signal():
    cfg = ReadoutConfig.coherent(nbar0=1.0, drive_presettled=True)
    system = build_system(cfg, G)
    m1, m2 = (state_at(system, t).M_mean for t in (3.0, 6.0))
    assert m2 == pytest.approx(2 * m1, rel=1e-12)
    # SNR = 2 m / sqrt(2 kappa tau) must equal sqrt(2 nbar0 kappa tau): m = kappa tau
    assert m1 == pytest.approx(3.0, rel=1e-12)


def test_mean_from_single_exponential_matches_propagation():
    system = build_system(ReadoutConfig.qmfs(0.3, nbar0=5.0), E)
    ts = [0.0, 1.5, 9.0]
    direct = evolve_mean(system, ts)
    stepped = [s.mean for s in propagate_covariance(system, ts)]
    assert np.allclose(direct, stepped, rtol=1e-10, atol=1e-12)
    with pytest.raises(ValueError):
        evolve_mean(system, -1.0)


def test_singular_drift_detected():
    cfg = ReadoutConfig.coherent(drive_presettled=True)
    system = build_system(cfg, G)
    A = system.drift.copy()
    A[:2, :2] = 0.0
    with pytest.raises(SingularDrift):
        steady_state_mean(replace(system, drift=A))


def test_finite_start_relaxes_to_presqueezed():
    late = ReadoutConfig.qmfs(1.0, t0=-60.0)
    early = ReadoutConfig.qmfs(1.0)
    a = initial_state(build_system(late, G)).covariance
    b = initial_state(build_system(early, G)).covariance
    assert np.allclose(a, b, atol=1e-10)
    fresh = initial_state(build_system(ReadoutConfig.qmfs(1.0, t0=0.0), G)).covariance
    assert np.allclose(fresh[:-1, :-1], np.eye(4))


def test_transfer_is_zero_for_symmetric_qmfs():
    T = output_zero_frequency_transfer(build_system(ReadoutConfig.qmfs(1.0), G))
    assert abs(T[1, 2]) < 1e-14 and abs(T[1, 3]) < 1e-14
    # phi = pi/2 rotates X_- into the measured Y_+
    assert T[1, 0] ** 2 + T[1, 1] ** 2 == pytest.approx(1.0)


def test_transfer_vanishes_on_matched_asymmetry():
    dchi, chi_bar, kappa_bar = 0.1, 0.5, 1.0
    dkappa = kappa_bar * dchi / chi_bar
    cfg = ReadoutConfig.asymmetric(1.0, dchi, chi_bar, dkappa, kappa_bar)
    for q in (G, E):
        T = output_zero_frequency_transfer(build_system(cfg, q))
        assert np.abs(T[1, 2:]).max() < 1e-10


def test_transfer_leaks_without_linewidth_asymmetry():
    cfg = ReadoutConfig.asymmetric(1.0, 0.1, 0.5, 0.0, 1.0)
    T = output_zero_frequency_transfer(build_system(cfg, G))
    leak = np.abs(T[1, 2:]).max()
    # regression value from this implementation
    assert leak == pytest.approx(0.19992003198720498, rel=1e-9)


@given(tau=st.floats(0.01, 30.0), r=st.floats(0, 2), theta=st.floats(0, math.pi))
def test_noise_is_nondecreasing_in_tau(tau, r, theta):
    cfg = ReadoutConfig.single_mode(r, theta=theta, t0=-1.0)
    s = propagate_covariance(build_system(cfg, G), [tau, tau * 1.05 + 1e-3])
    assert s[1].M_var >= s[0].M_var * (1 - 1e-12)


@pytest.mark.parametrize("cfg", [
    ReadoutConfig.qmfs(2.0, t0=-0.5),
    ReadoutConfig.single_mode(1.5, theta=0.3, bandwidth=2.0),
    ReadoutConfig.asymmetric(1.5, 0.2, 0.5, -0.3, 1.0),
])
def test_uncertainty_margins_nonnegative(cfg):
    system = build_system(cfg, G)
    for s in propagate_covariance(system, np.linspace(0, 8, 9)):
        m = uncertainty_margin(s, system)
        assert m["joint"] > -1e-9
        assert m["cavity_det"] > -1e-9
        assert m["covariance"] > -1e-9
