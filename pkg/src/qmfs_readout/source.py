"""Input-field noise models: broadband and Lorentzian squeezing, and loss.

A noise model describes the quadratures ``u`` entering the cavities as

    u = C_f x_f + D_w w,        dx_f = F x_f dt + G dW

where ``w`` is white noise with covariance ``noise_cov`` and ``x_f`` is an
optional filter state (for finite-bandwidth squeezing). Field quadratures
are ordered ``(X1, Y1, X2, Y2, ...)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

__all__ = [
    "InputNoiseModel",
    "joint_basis",
    "vacuum",
    "broadband_single_mode",
    "broadband_two_mode",
    "filtered_source",
    "apply_loss",
    "loss_covariance",
    "squeezing_photons",
    "bandwidth_prefactor",
]


def joint_basis() -> np.ndarray:
    """Orthogonal map ``(X1, Y1, X2, Y2) -> (X_-, Y_+, X_+, Y_-)``."""
    return np.array([
        [1, 0, -1, 0],
        [0, 1, 0, 1],
        [1, 0, 1, 0],
        [0, 1, 0, -1],
    ]) / math.sqrt(2)


@dataclass(frozen=True)
class InputNoiseModel:
    noise_cov: np.ndarray
    output_map: np.ndarray
    filter_drift: np.ndarray | None = None
    filter_gain: np.ndarray | None = None
    filter_output: np.ndarray | None = None
    # filter drift before the pump turns on (plain passive cavities)
    filter_drift_off: np.ndarray | None = None
    active_from: float = -math.inf

    @property
    def n_fields(self) -> int:
        return self.output_map.shape[0]

    @property
    def n_white(self) -> int:
        return self.noise_cov.shape[0]

    @property
    def n_filter(self) -> int:
        return 0 if self.filter_drift is None else self.filter_drift.shape[0]

    @property
    def noise_cov_off(self) -> np.ndarray:
        """White-noise covariance before ``active_from``: vacuum everywhere."""
        return np.eye(self.n_white)

    def field_covariance(self) -> np.ndarray:
        """Zero-frequency covariance of the field quadratures (delta-normalised)."""
        if self.filter_drift is None:
            D = self.output_map
            return D @ self.noise_cov @ D.T
        # u(0) = (D_w - C_f F^{-1} G) w(0)
        T = self.output_map - self.filter_output @ np.linalg.solve(self.filter_drift, self.filter_gain)
        return T @ self.noise_cov @ T.T


def vacuum(n_fields: int = 2) -> InputNoiseModel:
    return InputNoiseModel(np.eye(n_fields), np.eye(n_fields))


def _single_mode_cov(r, theta):
    c, s = math.cos(theta), math.sin(theta)
    R = np.array([[c, -s], [s, c]])
    return R @ np.diag([math.exp(2 * r), math.exp(-2 * r)]) @ R.T


def _two_mode_cov(r):
    P = joint_basis()
    joint = np.diag([math.exp(-2 * r), math.exp(-2 * r), math.exp(2 * r), math.exp(2 * r)])
    return P.T @ joint @ P


def broadband_single_mode(r, theta=0.0, t0=-math.inf) -> InputNoiseModel:
    """White single-mode squeezed vacuum, antisqueezed axis at ``theta`` from X."""
    return InputNoiseModel(_single_mode_cov(r, theta), np.eye(2), active_from=t0)


def broadband_two_mode(r, t0=-math.inf) -> InputNoiseModel:
    """White two-mode squeezed vacuum: ``X_-`` and ``Y_+`` have variance
    ``e^{-2r}``, ``X_+`` and ``Y_-`` have ``e^{2r}``."""
    return InputNoiseModel(_two_mode_cov(r), np.eye(4), active_from=t0)


def filtered_source(r, Gamma, kind="two_mode", theta=0.0, t0=-math.inf) -> InputNoiseModel:
    """Finite-bandwidth squeezed vacuum from a parametric cavity below threshold.

    The parametric cavity has linewidth ``Gamma_f = Gamma (1 + e^{-r})`` and pump
    rate ``eps = Gamma (1 - e^{-r}) / 2``. Each squeezed output quadrature then
    has the Lorentzian spectrum ``1 - (1 - e^{-2r}) Gamma^2 / (Gamma^2 + w^2)``:
    half-width ``Gamma`` and variance ``e^{-2r}`` at zero frequency. The
    antisqueezed quadratures reach ``e^{2r}`` at zero frequency with the
    narrower half-width ``Gamma e^{-r}``.
    """
    if not Gamma > 0:
        raise ValueError(f"Gamma must be positive, got {Gamma}")
    if kind == "two_mode":
        target = _two_mode_cov(r)
    elif kind == "single_mode":
        target = _single_mode_cov(r, theta)
    else:
        raise ValueError(f"unknown source kind {kind!r}")
    n = target.shape[0]
    gamma_f = Gamma * (1 + math.exp(-r))
    eps = 0.5 * Gamma * (1 - math.exp(-r))

    # +1 on squeezed eigendirections, -1 on antisqueezed ones
    vals, vecs = np.linalg.eigh(target)
    signs = np.sign(1.0 - vals)
    signs[np.isclose(vals, 1.0)] = 0.0
    pump = vecs @ np.diag(signs) @ vecs.T

    drift = -0.5 * gamma_f * np.eye(n) - eps * pump
    drift_off = -0.5 * gamma_f * np.eye(n)
    sq = math.sqrt(gamma_f)
    return InputNoiseModel(
        noise_cov=np.eye(n),
        output_map=-np.eye(n),
        filter_drift=drift,
        filter_gain=sq * np.eye(n),
        filter_output=sq * np.eye(n),
        filter_drift_off=drift_off,
        active_from=t0,
    )


def loss_covariance(cov, eta):
    """Beamsplitter loss on a covariance: ``V -> eta V + (1 - eta) I``."""
    cov = np.asarray(cov, dtype=float)
    return eta * cov + (1 - eta) * np.eye(cov.shape[0])


def apply_loss(model, eta):
    """Mix a fraction ``1 - eta`` of vacuum into a noise model or statistics.

    For an :class:`InputNoiseModel` this is input-side loss: every field
    quadrature becomes ``sqrt(eta) u + sqrt(1 - eta) v`` with fresh vacuum
    ``v``. For :class:`~qmfs_readout.readout.MeasurementStats` it is
    detection-side loss: signals scale by ``sqrt(eta)`` and each noise
    variance becomes ``eta * noise + (1 - eta) * vacuum_noise``.
    """
    if not 0.0 <= eta <= 1.0:
        raise ValueError(f"eta must lie in [0, 1], got {eta}")
    if isinstance(model, InputNoiseModel):
        n, m = model.n_fields, model.n_white
        se, sl = math.sqrt(eta), math.sqrt(1 - eta)
        cov = np.zeros((m + n, m + n))
        cov[:m, :m] = model.noise_cov
        cov[m:, m:] = np.eye(n)
        out = np.hstack([se * model.output_map, sl * np.eye(n)])
        kw = {}
        if model.filter_drift is not None:
            kw["filter_gain"] = np.hstack([model.filter_gain, np.zeros((model.n_filter, n))])
            kw["filter_output"] = se * model.filter_output
        return replace(model, noise_cov=cov, output_map=out, **kw)
    # duck-typed MeasurementStats
    return model.with_loss(eta)


def squeezing_photons(r, kind="two_mode"):
    """Photons carried by the squeezed input: ``2 sinh^2 r`` for two modes."""
    per_mode = math.sinh(r) ** 2
    return 2 * per_mode if kind == "two_mode" else per_mode


def bandwidth_prefactor(r, Gamma, tau):
    """SNR reduction factor from a Lorentzian squeezing spectrum of width ``Gamma``.

    ``sqrt(Gamma tau / [Gamma tau + (e^{2r} - 1)(1 - e^{-Gamma tau})])``.
    """
    gt = Gamma * tau
    return math.sqrt(gt / (gt + math.expm1(2 * r) * -math.expm1(-gt)))
