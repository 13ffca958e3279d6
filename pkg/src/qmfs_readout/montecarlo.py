"""Monte Carlo homodyne records: an independent check on the moment engine.

Each trajectory integrates the same linear SDE as :mod:`qmfs_readout.dynamics`
but by sampling, either with Euler-Maruyama or with the exact Gaussian
one-step transition. Noise for trajectory ``i`` and qubit state ``q`` comes
from its own counter-based (Philox) stream keyed by ``(seed, q, i)``, so
results do not depend on how trajectories are split across chunks or threads.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .dynamics import _discretize, _drive_step, build_system, initial_state
from .model import QubitState, ReadoutConfig, ValidatedConfig, validate
from .readout import MeasurementStats

__all__ = [
    "TrajectoryEnsemble",
    "StepTooCoarse",
    "sample_records",
    "empirical_stats",
    "empirical_error_rate",
    "write_records_csv",
]


class StepTooCoarse(ValueError):
    pass


@dataclass
class TrajectoryEnsemble:
    n_traj: int
    dt: float
    seed: int
    tau: float
    scheme: str
    kappa_ref: float
    records: dict[QubitState, np.ndarray]


def _sqrt_psd(C):
    w, V = np.linalg.eigh(0.5 * (C + C.T))
    return V * np.sqrt(np.clip(w, 0.0, None))


def _stream(seed, q, traj):
    ss = np.random.SeedSequence(seed, spawn_key=(0 if q is QubitState.GROUND else 1, traj))
    return np.random.Generator(np.random.Philox(ss))


def _run_chunk(system, q, seed, start, stop, steps, dt, scheme):
    n = system.dim
    st0 = initial_state(system)
    L0 = _sqrt_psd(st0.covariance)
    if scheme == "euler":
        L = system.noise_gain @ np.linalg.cholesky(system.noise_cov) * math.sqrt(dt)
        F = np.eye(n) + system.drift * dt
        g = system.drive * dt
    elif scheme == "exact":
        Phi, Qd = _discretize(system.drift, system.diffusion, dt)
        _, g = _drive_step(system.drift, system.drive, dt)
        F = Phi
        L = _sqrt_psd(Qd)
    else:
        raise ValueError(f"unknown scheme {scheme!r}")
    m = L.shape[1]

    count = stop - start
    x = np.empty((count, n))
    Z = np.empty((count, steps, m))
    for k, traj in enumerate(range(start, stop)):
        rng = _stream(seed, q, traj)
        x[k] = st0.mean + L0 @ rng.standard_normal(n)
        Z[k] = rng.standard_normal((steps, m))

    Ft, Lt = F.T, L.T
    for step in range(steps):
        x = x @ Ft + g + Z[:, step, :] @ Lt
    return x[:, -1]


def sample_records(config: ReadoutConfig | ValidatedConfig, n_traj: int, dt=None,
                   seed: int = 0, scheme="euler", chunk_size=1000,
                   threads: int = 1) -> TrajectoryEnsemble:
    """Sample the integrated record ``M(tau)`` for both qubit states.

    ``dt`` defaults to ``1 / (200 * max_rate)`` (trimmed to divide ``tau``);
    anything coarser than ``1 / (50 * max_rate)`` raises :class:`StepTooCoarse`.
    """
    if n_traj < 2:
        raise ValueError("need at least two trajectories")
    v = validate(config)
    tau = v.config.tau
    systems = {q: build_system(v, q) for q in QubitState}
    rate = max(s.max_rate for s in systems.values())
    if dt is None:
        dt = 1.0 / (200 * rate)
    if dt > 1.0 / (50 * rate) * (1 + 1e-12):
        raise StepTooCoarse(f"dt={dt:g} exceeds 1/(50*max_rate)={1 / (50 * rate):g}")
    steps = max(1, int(math.ceil(tau / dt - 1e-9)))
    dt = tau / steps

    bounds = [(a, min(a + chunk_size, n_traj)) for a in range(0, n_traj, chunk_size)]
    records = {}
    for q, system in systems.items():
        def job(b, system=system, q=q):
            return _run_chunk(system, q, seed, b[0], b[1], steps, dt, scheme)

        if threads > 1:
            with ThreadPoolExecutor(threads) as pool:
                parts = list(pool.map(job, bounds))
        else:
            parts = [job(b) for b in bounds]
        records[q] = np.concatenate(parts)
    return TrajectoryEnsemble(n_traj, dt, seed, tau, scheme, v.kappa_ref, records)


def _stats_from(g, e, vacuum):
    return MeasurementStats(float(g.mean()), float(e.mean()),
                            float(g.var(ddof=1)), float(e.var(ddof=1)), vacuum)


def empirical_stats(ensemble: TrajectoryEnsemble, n_blocks: int = 100):
    """Sample moments and their delete-a-block jackknife standard errors.

    Returns ``(stats, errors)`` where ``errors`` maps ``signal_ground``,
    ``signal_excited``, ``noise_ground``, ``noise_excited`` and ``snr`` to
    standard errors.
    """
    g = ensemble.records[QubitState.GROUND]
    e = ensemble.records[QubitState.EXCITED]
    vacuum = ensemble.kappa_ref * ensemble.tau
    full = _stats_from(g, e, vacuum)
    n = len(g)
    n_blocks = max(2, min(n_blocks, n))
    edges = np.linspace(0, n, n_blocks + 1).astype(int)
    keys = ("signal_ground", "signal_excited", "noise_ground", "noise_excited", "snr")
    reps = np.empty((n_blocks, len(keys)))
    for b in range(n_blocks):
        keep = np.ones(n, dtype=bool)
        keep[edges[b]:edges[b + 1]] = False
        s = _stats_from(g[keep], e[keep], vacuum)
        reps[b] = [getattr(s, k) for k in keys]
    spread = reps - reps.mean(axis=0)
    se = np.sqrt((n_blocks - 1) / n_blocks * (spread ** 2).sum(axis=0))
    return full, dict(zip(keys, se.tolist()))


def empirical_error_rate(ensemble: TrajectoryEnsemble, threshold=None):
    """Misassignment rate with a threshold at the midpoint of the sample means.

    Returns ``(rate, binomial_standard_error)``.
    """
    g = ensemble.records[QubitState.GROUND]
    e = ensemble.records[QubitState.EXCITED]
    if threshold is None:
        threshold = 0.5 * (g.mean() + e.mean())
    if g.mean() >= e.mean():
        wrong = np.count_nonzero(g < threshold) + np.count_nonzero(e >= threshold)
    else:
        wrong = np.count_nonzero(g > threshold) + np.count_nonzero(e <= threshold)
    total = len(g) + len(e)
    p = wrong / total
    return p, math.sqrt(max(p * (1 - p), 1.0 / total) / total)


def write_records_csv(ensemble: TrajectoryEnsemble, path) -> None:
    """Dump records as ``traj_id, qubit_state, M`` rows."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["traj_id", "qubit_state", "M"])
        for q in QubitState:
            for i, m in enumerate(ensemble.records[q]):
                w.writerow([i, q.name.lower(), repr(float(m))])
