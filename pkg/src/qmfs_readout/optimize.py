"""Optimizers and solvers for squeezing strength, integration time and photon budgets.

Every routine here is deterministic: a fixed grid locates the basin and a
bounded Brent search (``scipy.optimize.minimize_scalar``) refines it. Monotone
problems (time and drive strength to reach a fidelity) use bisection.
"""

from __future__ import annotations

import math
from dataclasses import replace

import numpy as np
from scipy.optimize import bisect, minimize_scalar
from scipy.special import erfcinv

from .dynamics import build_system, propagate_covariance
from .model import (
    CavityParams,
    Protocol,
    QubitState,
    ReadoutConfig,
    ValidatedConfig,
    validate,
)
from .readout import measurement_stats, measurement_stats_grid, snr_from_moments
from .source import squeezing_photons

__all__ = [
    "Unreachable",
    "snr_target",
    "snr_curve",
    "single_mode_response",
    "optimize_single_mode",
    "optimize_single_mode_grid",
    "required_tau",
    "photons_for_fidelity",
    "matched_dkappa",
    "asymmetry_enhancement",
    "optimize_asymmetry",
    "heisenberg_scan",
    "optimize_r_at_fixed_nbar",
]


class Unreachable(RuntimeError):
    pass


def snr_target(target_fidelity: float) -> float:
    """SNR at which ``1 - erfc(SNR/2)/2`` equals ``target_fidelity``."""
    if not 0.5 < target_fidelity < 1.0:
        raise ValueError(f"target fidelity must lie in (0.5, 1), got {target_fidelity}")
    return 2.0 * float(erfcinv(2.0 * (1.0 - target_fidelity)))


def snr_curve(config, taus) -> np.ndarray:
    return np.array([s.snr for s in measurement_stats_grid(config, taus)])


def _refine_max(f, grid, values, xatol):
    """Refine the first grid maximum of ``f`` with a bounded Brent search."""
    i = int(np.argmax(values))
    lo = grid[max(i - 1, 0)]
    hi = grid[min(i + 1, len(grid) - 1)]
    if hi <= lo:
        return grid[i], values[i]
    res = minimize_scalar(lambda x: -f(x), bounds=(lo, hi), method="bounded",
                          options={"xatol": xatol})
    if -res.fun > values[i]:
        return float(res.x), float(-res.fun)
    return float(grid[i]), float(values[i])


# -- single-mode squeezing ------------------------------------------------------------

def single_mode_response(config, taus):
    """Signal separation and a linear model of the summed record noise.

    The record variance is affine in the 2x2 source covariance
    ``cosh(2r) I + sinh(2r) [[cos 2t, sin 2t], [sin 2t, -cos 2t]]``, so for
    each ``tau`` the summed (ground + excited) noise is
    ``n0 + cosh(2r) a + sinh(2r) (b cos 2t + c sin 2t)``.
    Returns ``(dsignal, n0, a, b, c)`` as arrays over ``taus``.
    """
    v = validate(config)
    if v.config.protocol is not Protocol.SINGLE_MODE or not v.config.source.broadband:
        raise ValueError("single_mode_response needs a broadband single-mode config")
    taus = np.atleast_1d(np.asarray(taus, dtype=float))
    basis = {
        "zero": np.zeros((2, 2)),
        "a": np.eye(2),
        "b": np.diag([1.0, -1.0]),
        "c": np.array([[0.0, 1.0], [1.0, 0.0]]),
    }
    totals = {k: np.zeros(len(taus)) for k in basis}
    means = {}
    for q in QubitState:
        system = build_system(v, q)
        for key, Qs in basis.items():
            Q = system.noise_cov.copy()
            Q[:2, :2] = Qs
            states = propagate_covariance(replace(system, noise_cov=Q), taus)
            totals[key] += np.array([s.M_var for s in states])
            if key == "zero":
                means[q] = np.array([s.M_mean for s in states])
    dsignal = np.abs(means[QubitState.GROUND] - means[QubitState.EXCITED])
    n0 = totals["zero"]
    return dsignal, n0, totals["a"] - n0, totals["b"] - n0, totals["c"] - n0


def _single_mode_best(dsig, n0, a, b, c, e2r_max, n_grid):
    """Best ``(r, theta, snr)`` for one ``tau`` given the response coefficients."""
    rho = math.hypot(b, c)
    theta = 0.5 * math.atan2(-c, -b) % math.pi

    def snr_of(r):
        noise = n0 + math.cosh(2 * r) * a - math.sinh(2 * r) * rho
        return dsig / math.sqrt(noise)

    r_max = 0.5 * math.log(e2r_max)
    if r_max <= 0:
        return 0.0, theta, snr_of(0.0)
    grid = np.linspace(0.0, r_max, n_grid)
    vals = np.array([snr_of(r) for r in grid])
    r_opt, best = _refine_max(snr_of, grid, vals, xatol=1e-10)
    # ties go to the smaller squeezing
    if best <= vals[0] * (1 + 1e-12):
        return 0.0, theta, float(vals[0])
    return r_opt, theta, best


def optimize_single_mode(config, tau=None, e2r_max=100.0, n_grid=201):
    """Maximize the single-mode squeezed SNR over strength and angle.

    ``e^{2r}`` is restricted to ``[1, e2r_max]``; the angle optimum is exact
    because the noise is affine in ``(cos 2 theta, sin 2 theta)``.
    Returns ``(r_opt, theta_opt, snr)``.
    """
    v = validate(config)
    tau = v.config.tau if tau is None else tau
    (r, th, s), = optimize_single_mode_grid(v, [tau], e2r_max, n_grid)
    return r, th, s


def optimize_single_mode_grid(config, taus, e2r_max=100.0, n_grid=201):
    v = validate(config)
    if v.config.protocol is not Protocol.SINGLE_MODE:
        v = validate(replace(v.config, protocol=Protocol.SINGLE_MODE))
    dsig, n0, a, b, c = single_mode_response(v, taus)
    return [_single_mode_best(*vals, e2r_max, n_grid) for vals in zip(dsig, n0, a, b, c)]


# -- fidelity targets -------------------------------------------------------------------

def required_tau(config, target_fidelity=0.9999, tau_max=1e4, rtol=1e-6):
    """Shortest integration time reaching ``target_fidelity`` (bisection on SNR(tau))."""
    v = validate(config)
    s_star = snr_target(target_fidelity)

    def f(tau):
        if tau <= 0:
            return -s_star
        return measurement_stats(v, tau).snr - s_star

    hi = 1.0 / v.kappa_ref
    while f(hi) < 0:
        hi *= 2
        if hi > tau_max:
            raise Unreachable(f"fidelity {target_fidelity} not reached by tau={tau_max}")
    return bisect(f, 0.0, hi, xtol=1e-14, rtol=rtol)


def _with_r(config: ReadoutConfig, r: float) -> ReadoutConfig:
    if config.protocol is Protocol.COHERENT:
        return config
    return config.with_(r=r)


def photons_for_fidelity(config, tau=None, target_fidelity=0.9999, e2r_max=1e4, n_grid=81):
    """Smallest intracavity photon number reaching the target at fixed ``tau``.

    For each squeezing strength the drive ``nbar0`` needed follows exactly
    (signal scales as ``sqrt(nbar0)``, noise does not depend on it); the
    squeezing strength is then optimized. Coherent configs use ``r = 0``.
    Returns ``(n_bar, r_opt, nbar0)``.
    """
    v = validate(config)
    cfg = v.config
    tau = cfg.tau if tau is None else tau
    s_star = snr_target(target_fidelity)
    phi = v.phi_qb[0]
    cos2 = math.cos(phi / 2) ** 2
    kind = "two_mode" if cfg.protocol is Protocol.TWO_MODE else "single_mode"

    if cfg.protocol is Protocol.SINGLE_MODE and cfg.source.broadband:
        dsig, n0, a, b, c = (x[0] for x in single_mode_response(replace(cfg, nbar0=1.0), [tau]))
        rho = math.hypot(b, c)

        def unit_snr(r):
            return dsig / math.sqrt(n0 + math.cosh(2 * r) * a - math.sinh(2 * r) * rho)
    else:
        def unit_snr(r):
            return measurement_stats(_with_r(replace(cfg, nbar0=1.0), r), tau).snr

    def nbar_of(r):
        s1 = unit_snr(r)
        if s1 <= 0:
            return math.inf
        nbar0 = (s_star / s1) ** 2
        return nbar0 * cos2 + squeezing_photons(r, kind), nbar0

    if cfg.protocol is Protocol.COHERENT:
        n_bar, nbar0 = nbar_of(0.0)
        if not math.isfinite(n_bar):
            raise Unreachable("no signal: chi = 0 or no drive coupling")
        return n_bar, 0.0, nbar0

    r_max = 0.5 * math.log(e2r_max)
    grid = np.linspace(0.0, r_max, n_grid)
    vals = np.array([-nbar_of(r)[0] for r in grid])
    if not np.isfinite(vals).any():
        raise Unreachable("no signal: chi = 0 or no drive coupling")
    r_opt, _ = _refine_max(lambda r: -nbar_of(r)[0], grid, vals, xatol=1e-8)
    n_bar, nbar0 = nbar_of(r_opt)
    return n_bar, r_opt, nbar0


# -- parameter asymmetry -------------------------------------------------------------------

def matched_dkappa(dchi, chi_bar, kappa_bar):
    """Linewidth asymmetry that keeps the zero-frequency QMFS decoupling:
    ``(chi1 + chi2)/(chi1 - chi2) = (kappa1 - kappa2)/(kappa1 + kappa2)``."""
    return kappa_bar * dchi / chi_bar


def asymmetry_enhancement(r, dchi, dkappa, chi_bar=0.5, kappa_bar=1.0, tau=10.0):
    """``(snr, enhancement)``: SNR with squeezing and its ratio to the same setup at ``r = 0``."""
    cfg = ReadoutConfig.asymmetric(r, dchi, chi_bar, dkappa, kappa_bar, tau=tau)
    snr = measurement_stats(cfg).snr
    return snr, snr / measurement_stats(cfg.with_(r=0.0)).snr


def optimize_asymmetry(dchi, chi_bar=0.5, kappa_bar=1.0, tau=10.0, r=math.log(10),
                       max_rel_dkappa=0.9, n_grid=73):
    """Linewidth asymmetry maximizing the squeezed SNR at fixed ``dchi``.

    Returns ``(dkappa_opt, snr, enhancement)``.
    """
    span = max_rel_dkappa * kappa_bar
    grid = np.linspace(-span, span, n_grid)

    def snr(dk):
        return asymmetry_enhancement(r, dchi, dk, chi_bar, kappa_bar, tau)[0]

    vals = np.array([snr(dk) for dk in grid])
    dk_opt, _ = _refine_max(snr, grid, vals, xatol=1e-9 * kappa_bar)
    s, enh = asymmetry_enhancement(r, dchi, dk_opt, chi_bar, kappa_bar, tau)
    return dk_opt, s, enh


# -- photon-number scaling -------------------------------------------------------------------

def heisenberg_scan(N, kappa_tau=50.0, chi=0.5, kappa=1.0, n_grid=200):
    """Engine SNR across splits of ``N`` input photons into squeezing and drive.

    ``N_s = 2 sinh^2 r`` and ``N_d = nbar0 kappa tau / 4``; the grid covers
    ``N_s`` in ``[0, N)``. Returns ``(N_s_grid, snr)``.
    """
    tau = kappa_tau / kappa
    grid = np.linspace(0.0, N, n_grid, endpoint=False)
    snrs = np.empty(n_grid)
    for i, n_s in enumerate(grid):
        r = math.asinh(math.sqrt(n_s / 2))
        nbar0 = 4 * (N - n_s) / kappa_tau
        cfg = ReadoutConfig.qmfs(r, chi=chi, kappa=kappa, nbar0=nbar0, tau=tau)
        snrs[i] = measurement_stats(cfg).snr
    return grid, snrs


def optimize_r_at_fixed_nbar(n_bar, chi=0.5, kappa=1.0, kappa_tau=20.0, use_engine=True,
                             n_grid=101):
    """Best squeezing at fixed intracavity photons ``nbar0 cos^2(phi/2) + 2 sinh^2 r``.

    With ``use_engine=False`` the SNR is the transient-free ``e^r SNR_alpha``.
    Returns ``(r_opt, snr)``.
    """
    tau = kappa_tau / kappa
    phi = 2 * math.atan(2 * chi / kappa)
    cos2 = math.cos(phi / 2) ** 2
    r_top = math.asinh(math.sqrt(n_bar / 2))

    def snr(r):
        nbar0 = max(n_bar - 2 * math.sinh(r) ** 2, 0.0) / cos2
        if use_engine:
            cfg = ReadoutConfig.qmfs(r, chi=chi, kappa=kappa, nbar0=nbar0, tau=tau)
            return measurement_stats(cfg).snr
        return math.exp(r) * abs(math.sin(phi)) * math.sqrt(2 * nbar0 * kappa_tau)

    grid = np.linspace(0.0, r_top, n_grid)
    vals = np.array([snr(r) for r in grid])
    return _refine_max(snr, grid, vals, xatol=1e-10)
