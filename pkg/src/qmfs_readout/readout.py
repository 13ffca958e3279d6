"""Signal, noise, SNR and fidelity, in closed form and from the dynamics engine."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np
from scipy.special import erfc

from .dynamics import build_system, propagate_covariance
from .model import Protocol, QubitState, ReadoutConfig, ValidatedConfig, validate

__all__ = [
    "MeasurementStats",
    "RegimeViolation",
    "fidelity",
    "snr_from_moments",
    "measurement_stats",
    "measurement_stats_grid",
    "snr_coherent_asymptotic",
    "snr_qmfs_asymptotic",
    "noise_single_mode_eq1",
    "snr_heisenberg_optimum",
    "snr_intracavity_optimum",
]


class RegimeViolation(ValueError):
    pass


def fidelity(snr):
    """Readout fidelity ``1 - erfc(SNR/2)/2`` for two equal-width Gaussians."""
    out = 1.0 - 0.5 * erfc(np.asarray(snr, dtype=float) / 2.0)
    return float(out) if np.ndim(out) == 0 else out


def snr_from_moments(signal_ground, signal_excited, noise_ground, noise_excited):
    return abs(signal_ground - signal_excited) / math.sqrt(noise_ground + noise_excited)


@dataclass(frozen=True)
class MeasurementStats:
    signal_ground: float
    signal_excited: float
    noise_ground: float
    noise_excited: float
    vacuum_noise: float

    @property
    def snr(self) -> float:
        return snr_from_moments(self.signal_ground, self.signal_excited,
                                self.noise_ground, self.noise_excited)

    @property
    def fidelity(self) -> float:
        return fidelity(self.snr)

    def with_loss(self, eta: float) -> "MeasurementStats":
        """Detection-side loss: a beamsplitter of transmission ``eta`` before the detector."""
        se = math.sqrt(eta)
        vac = (1 - eta) * self.vacuum_noise
        return replace(
            self,
            signal_ground=se * self.signal_ground,
            signal_excited=se * self.signal_excited,
            noise_ground=eta * self.noise_ground + vac,
            noise_excited=eta * self.noise_excited + vac,
        )


def measurement_stats_grid(config: ReadoutConfig | ValidatedConfig, taus: Sequence[float],
                           method="expm") -> list[MeasurementStats]:
    """:class:`MeasurementStats` at every integration time in ``taus``.

    Loss is handled inside the engine (both placements), so no further
    :meth:`MeasurementStats.with_loss` is needed.
    """
    v = validate(config)
    taus = np.atleast_1d(np.asarray(taus, dtype=float))
    per_state = {}
    for q in QubitState:
        system = build_system(v, q)
        per_state[q] = propagate_covariance(system, taus, method=method)
    out = []
    for i, tau in enumerate(taus):
        g, e = per_state[QubitState.GROUND][i], per_state[QubitState.EXCITED][i]
        out.append(MeasurementStats(g.M_mean, e.M_mean, g.M_var, e.M_var, v.kappa_ref * tau))
    return out


def measurement_stats(config: ReadoutConfig | ValidatedConfig, tau=None,
                      method="expm") -> MeasurementStats:
    """Run the dynamics for both qubit states at ``tau`` (default: ``config.tau``)."""
    v = validate(config)
    tau = v.config.tau if tau is None else tau
    return measurement_stats_grid(v, [tau], method=method)[0]


# -- closed forms -----------------------------------------------------------------

def snr_coherent_asymptotic(config: ReadoutConfig | ValidatedConfig, tau=None) -> float:
    """Long-time coherent-drive SNR ``|sin phi| sqrt(2 nbar0 kappa tau)``."""
    v = validate(config)
    tau = v.config.tau if tau is None else tau
    return abs(math.sin(v.phi_qb[0])) * math.sqrt(2 * v.config.nbar0 * v.kappa_ref * tau)


def snr_qmfs_asymptotic(config: ReadoutConfig | ValidatedConfig, tau=None) -> float:
    """``e^r`` times the coherent SNR: broadband, presqueezed, symmetric, lossless."""
    v = validate(config)
    return math.exp(v.config.source.r) * snr_coherent_asymptotic(v, tau)


def noise_single_mode_eq1(r, theta, kappa_tau, chi=None, kappa=1.0, tol=1e-9):
    """Long-time record noise for single-mode squeezed input at ``phi_qb = pi/2``.

    ``kappa tau [sin^2(theta) e^{-2r} + cos^2(theta) e^{2r}]
    + 2 sqrt(2) sinh(2r) cos(2 theta - 3 pi/4)``, valid up to terms that decay
    exponentially in ``kappa tau``. Passing ``chi`` checks the regime
    ``chi = kappa / 2``.
    """
    if chi is not None and abs(chi - kappa / 2) > tol * kappa:
        raise RegimeViolation(f"formula holds for chi = kappa/2, got chi/kappa = {chi / kappa}")
    s2, c2 = math.sin(theta) ** 2, math.cos(theta) ** 2
    zero_freq = kappa_tau * (s2 * math.exp(-2 * r) + c2 * math.exp(2 * r))
    return zero_freq + 2 * math.sqrt(2) * math.sinh(2 * r) * math.cos(2 * theta - 3 * math.pi / 4)


def snr_heisenberg_optimum(N, phi_qb):
    """Best split of ``N`` input photons between squeezing and displacement.

    Returns ``(N_s, snr)`` with ``N_s = N^2 / (2 (N + 1))`` and
    ``snr = 2 |sin phi| N sqrt(1 + 2/N)``.
    """
    if N <= 0:
        raise ValueError(f"N must be positive, got {N}")
    n_s = N * N / (2 * (N + 1))
    return n_s, 2 * abs(math.sin(phi_qb)) * N * math.sqrt(1 + 2 / N)


def snr_intracavity_optimum(n_bar, phi_qb, kappa_tau):
    """Large-``n_bar`` optimum at fixed intracavity photon number: ``2 |sin(phi/2)| n_bar sqrt(kappa tau)``."""
    if n_bar <= 0:
        raise ValueError(f"n_bar must be positive, got {n_bar}")
    return 2 * abs(math.sin(phi_qb / 2)) * n_bar * math.sqrt(kappa_tau)
