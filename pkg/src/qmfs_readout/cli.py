"""Command-line front end: ``qmfs-readout <subcommand> [--config FILE] [--out DIR] ...``.

Each subcommand writes ``<out>/<subcommand>.csv`` and a run manifest
``<out>/<subcommand>.json``. Exit codes: 0 success, 2 invalid config,
3 unreachable fidelity target.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import platform
import sys
import time
from importlib import metadata
from pathlib import Path

import numpy as np
import scipy

from . import sweeps
from .model import ConfigError, Protocol, ReadoutConfig, config_to_dict, load_config, validate
from .montecarlo import empirical_stats, sample_records
from .optimize import (
    Unreachable,
    optimize_single_mode,
    optimize_single_mode_grid,
    photons_for_fidelity,
    required_tau,
)
from .readout import measurement_stats_grid

EXIT_CONFIG = 2
EXIT_UNREACHABLE = 3


def parse_grid(spec: str | None, default):
    """``a:b:n`` (linear), ``log:a:b:n`` (geometric) or ``x,y,z``."""
    if spec is None:
        return np.asarray(default, dtype=float)
    try:
        if spec.startswith("log:"):
            a, b, n = spec[4:].split(":")
            return np.geomspace(float(a), float(b), int(n))
        if ":" in spec:
            a, b, n = spec.split(":")
            return np.linspace(float(a), float(b), int(n))
        return np.array([float(x) for x in spec.split(",")])
    except ValueError:
        raise ConfigError("grid", f"cannot parse grid spec {spec!r}") from None


def _fmt(x):
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    if isinstance(x, str):
        return x
    return repr(float(x))


def _csv_text(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(x) for x in row])
    return buf.getvalue()


def _versions():
    try:
        pkg = metadata.version("artifact")
    except metadata.PackageNotFoundError:
        pkg = "unknown"
    return {"qmfs_readout": pkg, "numpy": np.__version__, "scipy": scipy.__version__,
            "python": platform.python_version()}


def _load(args):
    if args.config is None:
        return None
    return load_config(args.config)


def _cavity(v):
    """Single-cavity parameters (chi, kappa) to build comparison protocols from."""
    if v is None:
        return 0.5, 1.0
    c = v.config.cavities[0]
    return abs(c.chi), c.kappa


# -- subcommands: each returns (header, rows, resolved_config_or_None) --------------

def cmd_fig3a(args, v):
    chi, kappa = _cavity(v)
    nbar0 = 1.0 if v is None else v.config.nbar0
    e2r = args.e2r if v is None or v.config.source.r == 0 else math.exp(2 * v.config.source.r)
    grid = parse_grid(args.grid, np.linspace(0.25, 20, 80))
    return (*sweeps.fig3a(grid, chi, kappa, nbar0, e2r), v)


def cmd_fig3b(args, v):
    chi, kappa = _cavity(v)
    nbar0 = 100.0 if v is None else v.config.nbar0
    grid = parse_grid(args.grid, np.geomspace(1, 1e4, 41))
    return (*sweeps.fig3b(grid, args.etas, chi, kappa, nbar0, args.target, args.threads), v)


def cmd_fig3c(args, v):
    chi, kappa = _cavity(v)
    grid = parse_grid(args.grid, np.geomspace(0.5, 20, 30))
    return (*sweeps.fig3c(grid, args.etas, chi, kappa, args.target, threads=args.threads), v)


def cmd_fig4a(args, v):
    grid = parse_grid(args.grid, np.linspace(-0.5, 0.5, 41))
    return (*sweeps.fig4a(grid * 0.5, args.dkappas, threads=args.threads), v)


def cmd_fig4b(args, v):
    grid = parse_grid(args.grid, np.linspace(0.2, 0.6, 161))
    return (*sweeps.fig4b(grid, args.threads), v)


def cmd_heisenberg(args, v):
    chi, kappa = _cavity(v)
    return (*sweeps.heisenberg(args.N, args.kappa_tau, chi, kappa), v)


def cmd_stats(args, v):
    if v is None:
        v = validate(ReadoutConfig.qmfs(math.log(10)))
    cfg = v.config
    chi, kappa = _cavity(v)
    taus = parse_grid(args.grid, [cfg.tau * v.kappa_ref]) / v.kappa_ref
    r = cfg.source.r
    e2r = math.exp(2 * r) if r > 0 else 100.0
    own = measurement_stats_grid(v, taus)
    coh = measurement_stats_grid(ReadoutConfig.coherent(chi, kappa, cfg.nbar0), taus)
    qmfs = measurement_stats_grid(ReadoutConfig.qmfs(r, chi, kappa, cfg.nbar0), taus)
    single = optimize_single_mode_grid(ReadoutConfig.single_mode(r, chi=chi, kappa=kappa,
                                                                  nbar0=cfg.nbar0), taus, e2r)
    header = ["kappa_tau", "snr_coherent", "snr_single_opt", "snr_qmfs",
              "signal_ground", "signal_excited", "noise_ground", "noise_excited",
              "snr", "fidelity"]
    rows = [(t * v.kappa_ref, c.snr, s[2], q.snr, o.signal_ground, o.signal_excited,
             o.noise_ground, o.noise_excited, o.snr, o.fidelity)
            for t, c, q, s, o in zip(taus, coh, qmfs, single, own)]
    return header, rows, v


def cmd_optimize(args, v):
    if v is None:
        raise ConfigError("config", "optimize needs --config")
    cfg = v.config
    header = ["target_fidelity", "kappa_tau_required", "nbar_required_at_tau",
              "e2r_opt_at_tau", "nbar0_required_at_tau"]
    tau_req = required_tau(v, args.target) * v.kappa_ref
    n_bar, r_opt, nbar0 = photons_for_fidelity(v, cfg.tau, args.target)
    row = [args.target, tau_req, n_bar, math.exp(2 * r_opt), nbar0]
    if cfg.protocol is Protocol.SINGLE_MODE and cfg.source.broadband:
        r, th, snr = optimize_single_mode(v)
        header += ["e2r_single_opt", "theta_single_opt_rad", "snr_single_opt"]
        row += [math.exp(2 * r), th, snr]
    return header, [tuple(row)], v


def cmd_trajectories(args, v):
    if v is None:
        v = validate(ReadoutConfig.qmfs(math.log(10)))
    ens = sample_records(v, args.n_traj, dt=args.dt, seed=args.seed, scheme=args.scheme,
                         threads=args.threads)
    stats, se = empirical_stats(ens)
    header = ["traj_id", "qubit_state", "M"]
    rows = [(i, q.name.lower(), m) for q, rec in ens.records.items() for i, m in enumerate(rec)]
    extra = {"empirical": {"signal_ground": stats.signal_ground,
                           "signal_excited": stats.signal_excited,
                           "noise_ground": stats.noise_ground,
                           "noise_excited": stats.noise_excited,
                           "snr": stats.snr},
             "standard_errors": se, "dt_in_inverse_kappa": ens.dt * v.kappa_ref}
    args.manifest_extra = extra
    return header, rows, v


COMMANDS = {
    "fig3a": (cmd_fig3a, "SNR against integration time for the three protocols"),
    "fig3b": (cmd_fig3b, "integration time for a fidelity target against e^{2r}"),
    "fig3c": (cmd_fig3c, "intracavity photons for a fidelity target against tau"),
    "fig4a": (cmd_fig4a, "SNR enhancement against dispersive-shift asymmetry"),
    "fig4b": (cmd_fig4b, "transmon dispersive shifts against E_C"),
    "stats": (cmd_stats, "signal, noise, SNR and fidelity for a config"),
    "optimize": (cmd_optimize, "required tau and photon number for a fidelity target"),
    "trajectories": (cmd_trajectories, "Monte Carlo homodyne records"),
    "heisenberg": (cmd_heisenberg, "best squeezing/drive split of N photons"),
}


def _floats(text):
    return tuple(float(x) for x in text.split(","))


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qmfs-readout",
                                description="Squeezed-light dispersive qubit readout calculator.")
    sub = p.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        s = sub.add_parser(name, help=help_text)
        s.add_argument("--config", help="JSON config file")
        s.add_argument("--out", default=".", help="output directory (default: .)")
        s.add_argument("--seed", type=int, default=0)
        s.add_argument("--threads", type=int, default=1)
        s.add_argument("--grid", help="sweep grid: a:b:n, log:a:b:n or x,y,z")
        if name in ("fig3b", "fig3c", "optimize"):
            s.add_argument("--target", type=float, default=0.9999, help="target fidelity")
        if name in ("fig3b", "fig3c"):
            s.add_argument("--etas", type=_floats, default=(1.0, 0.9))
        if name == "fig3a":
            s.add_argument("--e2r", type=float, default=100.0)
        if name == "fig4a":
            s.add_argument("--dkappas", type=_floats, default=(0.0, 0.1, 0.2))
        if name == "heisenberg":
            s.add_argument("--N", type=float, default=8.0, help="total input photons")
            s.add_argument("--kappa-tau", type=float, default=50.0)
        if name == "trajectories":
            s.add_argument("--n-traj", type=int, default=10000)
            s.add_argument("--dt", type=float, default=None)
            s.add_argument("--scheme", choices=("euler", "exact"), default="euler")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    fn = COMMANDS[args.command][0]
    args.manifest_extra = {}
    start = time.perf_counter()
    try:
        v = _load(args)
        header, rows, resolved = fn(args, v)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Unreachable as exc:
        print(f"unreachable: {exc}", file=sys.stderr)
        return EXIT_UNREACHABLE
    wall = time.perf_counter() - start

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / f"{args.command}.csv"
    csv_path.write_text(_csv_text(header, rows))
    manifest = {
        "command": args.command,
        "argv": list(sys.argv[1:] if argv is None else argv),
        "config": None if resolved is None else config_to_dict(resolved),
        "grid": args.grid,
        "seed": args.seed,
        "threads": args.threads,
        "versions": _versions(),
        "wall_time_s": wall,
        "csv": csv_path.name,
        "columns": header,
        **args.manifest_extra,
    }
    (out / f"{args.command}.json").write_text(json.dumps(manifest, indent=2, default=str) + "\n")
    print(csv_path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
