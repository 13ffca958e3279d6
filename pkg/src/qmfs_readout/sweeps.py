"""Parameter sweeps that regenerate the figure data as plain rows.

Each function returns ``(header, rows)``; headers carry units. Points where a
fidelity target cannot be met are reported as NaN rather than aborting the sweep.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .model import LossModel, LossPlacement, ReadoutConfig
from .optimize import (
    Unreachable,
    asymmetry_enhancement,
    heisenberg_scan,
    optimize_asymmetry,
    optimize_single_mode_grid,
    photons_for_fidelity,
    required_tau,
)
from .readout import measurement_stats_grid, snr_heisenberg_optimum
from .transmon import chi_sweep

__all__ = ["fig3a", "fig3b", "fig3c", "fig4a", "fig4b", "heisenberg"]


def _map(fn, items, threads=1):
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def _or_nan(fn, *args, **kw):
    try:
        return fn(*args, **kw)
    except Unreachable:
        return math.nan


def fig3a(kappa_taus, chi=0.5, kappa=1.0, nbar0=1.0, e2r=100.0):
    """SNR against integration time for the three protocols."""
    taus = np.asarray(kappa_taus, dtype=float) / kappa
    r = 0.5 * math.log(e2r)
    coh = measurement_stats_grid(ReadoutConfig.coherent(chi, kappa, nbar0), taus)
    qmfs = measurement_stats_grid(ReadoutConfig.qmfs(r, chi, kappa, nbar0), taus)
    single = optimize_single_mode_grid(ReadoutConfig.single_mode(r, chi=chi, kappa=kappa, nbar0=nbar0),
                                       taus, e2r_max=e2r)
    header = ["kappa_tau", "snr_coherent", "snr_single_opt", "snr_qmfs",
              "e2r_single_opt", "theta_single_opt_rad"]
    rows = [(kt, c.snr, s[2], q.snr, math.exp(2 * s[0]), s[1])
            for kt, c, q, s in zip(kappa * taus, coh, qmfs, single)]
    return header, rows


def _loss(eta):
    return LossModel(eta, LossPlacement.OUTPUT)


def fig3b(e2r_values, etas=(1.0, 0.9), chi=0.5, kappa=1.0, nbar0=100.0, target=0.9999,
          threads=1):
    """Integration time for a fidelity target against squeezing strength.

    The unsqueezed baseline gets ``nbar0 + 4 sinh^2 r`` so both schemes hold
    the same intracavity photon number.
    """
    def point(e2r):
        r = 0.5 * math.log(e2r)
        out = [e2r]
        for eta in etas:
            q = ReadoutConfig.qmfs(r, chi, kappa, nbar0, tau=1.0)
            c = ReadoutConfig.coherent(chi, kappa, nbar0 + 4 * math.sinh(r) ** 2, tau=1.0)
            out.append(kappa * _or_nan(required_tau, q.with_(eta=eta), target))
            out.append(kappa * _or_nan(required_tau, c.with_(eta=eta), target))
        return tuple(out)

    header = ["e2r"]
    for eta in etas:
        header += [f"kappa_tau_qmfs_eta{eta:g}", f"kappa_tau_coherent_eta{eta:g}"]
    return header, _map(point, list(e2r_values), threads)


def fig3c(kappa_taus, etas=(1.0, 0.9), chi=0.5, kappa=1.0, target=0.9999, e2r_max=1e4,
          threads=1):
    """Intracavity photons for a fidelity target at fixed integration time."""
    def point(kt):
        tau = kt / kappa
        out = [kt]
        for eta in etas:
            c = ReadoutConfig.coherent(chi, kappa, 1.0, tau=tau).with_(eta=eta)
            q = ReadoutConfig.qmfs(0.0, chi, kappa, 1.0, tau=tau).with_(eta=eta)
            out.append(_or_nan(lambda: photons_for_fidelity(c, tau, target)[0]))
            res = _or_nan(lambda: photons_for_fidelity(q, tau, target, e2r_max=e2r_max))
            out += [math.nan, math.nan] if res is math.nan else [res[0], math.exp(2 * res[1])]
        return tuple(out)

    header = ["kappa_tau"]
    for eta in etas:
        header += [f"nbar_coherent_eta{eta:g}", f"nbar_qmfs_eta{eta:g}", f"e2r_qmfs_opt_eta{eta:g}"]
    return header, _map(point, list(kappa_taus), threads)


def fig4a(dchi_values, dkappa_values=(0.0, 0.1, 0.2), chi_bar=0.5, kappa_bar=1.0,
          kappa_tau=10.0, e2r=100.0, threads=1):
    """SNR enhancement against coupling asymmetry, fixed and optimized linewidth asymmetry."""
    r = 0.5 * math.log(e2r)
    tau = kappa_tau / kappa_bar

    def point(dchi):
        out = [dchi / chi_bar]
        for dk in dkappa_values:
            out.append(asymmetry_enhancement(r, dchi, dk, chi_bar, kappa_bar, tau)[1])
        dk_opt, _, enh = optimize_asymmetry(dchi, chi_bar, kappa_bar, tau, r)
        return tuple(out + [enh, dk_opt / kappa_bar])

    header = (["dchi_over_chibar"]
              + [f"enhancement_dkappa_over_kappabar_{dk / kappa_bar:g}" for dk in dkappa_values]
              + ["enhancement_optimized", "dkappa_opt_over_kappabar"])
    return header, _map(point, list(dchi_values), threads)


def fig4b(E_C_values, threads=1):
    """Dispersive shifts of both resonators against the transmon charging energy."""
    rows = _map(lambda ec: chi_sweep([ec])[0], list(E_C_values), threads)
    return ["E_C_GHz", "chi_1_GHz", "chi_2_GHz"], rows


def heisenberg(N, kappa_tau=50.0, chi=0.5, kappa=1.0, n_grid=200):
    """Brute-force split of ``N`` photons next to the closed-form optimum."""
    grid, snrs = heisenberg_scan(N, kappa_tau, chi, kappa, n_grid)
    i = int(np.argmax(snrs))
    phi = 2 * math.atan(2 * chi / kappa)
    n_s_cf, snr_cf = snr_heisenberg_optimum(N, phi)
    header = ["N", "N_s_opt_grid", "snr_grid", "N_s_opt_closed_form", "snr_closed_form",
              "grid_step"]
    return header, [(N, grid[i], snrs[i], n_s_cf, snr_cf, grid[1] - grid[0])]
