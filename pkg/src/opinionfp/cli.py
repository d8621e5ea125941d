"""Command-line front end.

Settings are resolved from built-in defaults, then an optional INI file
(``--config``), then command-line flags. Every run writes CSV data files and a
JSON report into ``--out``.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import datetime as _dt
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .agents import MonteCarloConfig, monte_carlo
from .analysis import critical_noise, initial_clusters, order_param_continuum
from .core import DEFAULT_NG, BlowUpError, ConfigurationError, GridDensity, ModelParams, RadicalDensity
from .fourier_ode import build_system, integrate
from .spectral import spectral_run
from .stationary import approx_stationary, bounds, picard_stationary

log = logging.getLogger("opinionfp")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3

# section -> key -> (type, default)
SCHEMA = {
    "model": {"sigma": (float, 0.01), "R": (float, 0.1), "M": (float, 0.1), "A": (float, 0.7), "S": (float, 0.1)},
    "numerics": {"n_f": (int, 128), "dt": (float, 0.01), "t_end": (float, 100.0), "n_g": (int, DEFAULT_NG),
                 "solver": (str, "fourier"), "snapshots": (int, 11)},
    "sde": {"N": (int, 500), "realizations": (int, 300), "seed": (int, 0), "bins": (int, 100),
            "sample_dt": (float, 1.0)},
    "analysis": {"gamma_threshold": (float, 1.0)},
    "run": {"jobs": (int, os.cpu_count() or 1)},
}

# flag dest -> (section, key)
FLAGS = {
    "sigma": ("model", "sigma"), "big_r": ("model", "R"), "big_m": ("model", "M"),
    "a_mean": ("model", "A"), "s_width": ("model", "S"),
    "n_f": ("numerics", "n_f"), "dt": ("numerics", "dt"), "t_end": ("numerics", "t_end"),
    "n_g": ("numerics", "n_g"), "solver": ("numerics", "solver"), "snapshots": ("numerics", "snapshots"),
    "n_agents": ("sde", "N"), "realizations": ("sde", "realizations"), "seed": ("sde", "seed"),
    "bins": ("sde", "bins"), "sample_dt": ("sde", "sample_dt"),
    "gamma_threshold": ("analysis", "gamma_threshold"), "jobs": ("run", "jobs"),
}


def load_config(path: str | None) -> dict:
    """Defaults overlaid with an INI file; unknown sections/keys and bad values are errors."""
    cfg = {sec: {k: d for k, (_, d) in keys.items()} for sec, keys in SCHEMA.items()}
    if path is None:
        return cfg
    parser = configparser.ConfigParser()
    parser.optionxform = str  # keep R / M / N case
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
    for sec in parser.sections():
        if sec not in SCHEMA:
            raise ConfigurationError(f"unknown config section [{sec}]")
        for key, raw in parser.items(sec):
            if key not in SCHEMA[sec]:
                raise ConfigurationError(f"unknown config key [{sec}] {key}")
            typ = SCHEMA[sec][key][0]
            try:
                cfg[sec][key] = typ(raw)
            except ValueError:
                raise ConfigurationError(f"[{sec}] {key}: expected {typ.__name__}, got {raw!r}") from None
    return cfg


def resolve(args: argparse.Namespace) -> dict:
    cfg = load_config(args.config)
    for dest, (sec, key) in FLAGS.items():
        val = getattr(args, dest, None)
        if val is not None:
            cfg[sec][key] = val
    return cfg


def model_of(cfg: dict) -> tuple[ModelParams, RadicalDensity]:
    m = cfg["model"]
    params = ModelParams(R=m["R"], sigma=m["sigma"], M=m["M"])
    return params, RadicalDensity.triangular(m["A"], m["S"])


# ----------------------------------------------------------------------------
# output
# ----------------------------------------------------------------------------


def _fmt(v) -> str:
    return format(float(v), ".17g")


def _timestamp() -> str:
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    when = (_dt.datetime.fromtimestamp(int(epoch), _dt.timezone.utc) if epoch
            else _dt.datetime.now(_dt.timezone.utc))
    return when.isoformat(timespec="seconds")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else str(v)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    return obj


def write_csv(path: Path, header: list[str], rows, cfg: dict) -> None:
    """CSV with a commented metadata block (version and resolved config); no timestamp so reruns match byte for byte."""
    with open(path, "w", newline="") as fh:
        fh.write(f"# opinionfp {__version__}\n")
        fh.write("# config " + json.dumps(_jsonable(cfg), sort_keys=True) + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    log.info("wrote %s", path)


def write_report(path: Path, cfg: dict, results: dict) -> None:
    doc = {
        "params": cfg,
        "results": results,
        "provenance": {"seed": cfg["sde"]["seed"], "version": __version__, "timestamp": _timestamp()},
    }
    with open(path, "w") as fh:
        json.dump(_jsonable(doc), fh, indent=2, sort_keys=True)
        fh.write("\n")
    log.info("wrote %s", path)


# ----------------------------------------------------------------------------
# subcommands
# ----------------------------------------------------------------------------


def cmd_pde(args, cfg, out: Path) -> dict:
    params, rd = model_of(cfg)
    num = cfg["numerics"]
    t_eval = np.linspace(0.0, num["t_end"], max(num["snapshots"], 2))
    if num["solver"] == "fourier":
        traj = integrate(build_system(params, rd, num["n_f"]), None, num["t_end"], num["dt"], t_eval)
        grids = [GridDensity(v) for v in traj.grids(num["n_g"])]
        extra = {}
    elif num["solver"] == "spectral":
        traj = spectral_run(GridDensity.uniform(2 * num["n_f"]), rd, params, num["t_end"], num["dt"],
                            num["n_f"], t_eval)
        grids = [traj[i] for i in range(len(traj))]
        extra = {"max_negativity": traj.max_negativity}
    else:
        raise ConfigurationError(f"[numerics] solver: expected 'fourier' or 'spectral', got {num['solver']!r}")
    x = grids[0].half_x
    rows = [[ti, *g.half()] for ti, g in zip(traj.t, grids)]
    write_csv(out / "pde.csv", ["t", *(f"x={_fmt(xi)}" for xi in x)], rows, cfg)
    final = grids[-1]
    return {"solver": num["solver"], "final_mass": final.integral(),
            "Q_c_final": order_param_continuum(final, params.R), **extra}


def cmd_sde(args, cfg, out: Path) -> dict:
    params, _ = model_of(cfg)
    s, m, num = cfg["sde"], cfg["model"], cfg["numerics"]
    mc = MonteCarloConfig(N=s["N"], dt=num["dt"], t_end=num["t_end"], realizations=s["realizations"],
                          seed=s["seed"], A=m["A"], S=m["S"], bins=s["bins"], sample_dt=s["sample_dt"],
                          jobs=cfg["run"]["jobs"])
    res = monte_carlo(params, mc)
    centers = res.bin_centers
    write_csv(out / "sde_hist.csv", ["t", *(f"x={_fmt(c)}" for c in centers)],
              ([ti, *h] for ti, h in zip(res.t, res.histograms)), cfg)
    write_csv(out / "sde_qd.csv", ["t", "Q_d"], zip(res.t, res.q_d), cfg)
    return {"N_r": int(round(params.M * mc.N)), "Q_d_final": res.q_d[-1], "samples": len(res.t)}


def cmd_stationary(args, cfg, out: Path) -> dict:
    params, rd = model_of(cfg)
    b = bounds(params, rd)
    results = {"bounds": b.as_dict()}
    if args.bounds_only:
        return results
    if params.sigma <= 0:
        raise ConfigurationError("[model] sigma: the stationary problem needs sigma > 0")
    n_g = cfg["numerics"]["n_g"]
    rho, rep = picard_stationary(rd, params, N_g=n_g)
    results["picard"] = {"converged": rep.converged, "iterations": rep.iterations, "residual": rep.residual}
    cols = [rho.half()]
    header = ["x", "picard"]
    try:
        approx = approx_stationary(cfg["model"]["A"], params, n_g)
        cols.append(approx.half())
        header.append("approx")
        results["approx_linf"] = float(np.max(np.abs(approx.values - rho.values)))
    except ConfigurationError as exc:
        results["approx"] = f"not applicable: {exc}"
    write_csv(out / "stationary.csv", header, zip(rho.half_x, *cols), cfg)
    return results


def _parse_range(text: str) -> np.ndarray:
    try:
        parts = [float(v) for v in text.split(":")]
    except ValueError:
        raise ConfigurationError(f"range {text!r}: expected start:stop:step") from None
    if len(parts) == 1:
        return np.array(parts)
    if len(parts) != 3 or parts[2] <= 0:
        raise ConfigurationError(f"range {text!r}: expected start:stop:step with step > 0")
    start, stop, step = parts
    return np.round(np.arange(start, stop + 0.5 * step, step), 12)


def cmd_critical_noise(args, cfg, out: Path) -> dict:
    _, rd = model_of(cfg)
    m = cfg["model"]
    gamma = cfg["analysis"]["gamma_threshold"]
    n_f = cfg["numerics"]["n_f"]
    masses = _parse_range(args.m_sweep) if args.m_sweep else np.array([m["M"]])
    found = [critical_noise(m["R"], float(M), rd, gamma, n_f) for M in masses]
    if args.m_sweep:
        write_csv(out / "critical_noise.csv", ["M", "sigma_c"], ((M, r.sigma_c) for M, r in zip(masses, found)), cfg)
    return {"points": [{"M": float(M), **r.as_dict()} for M, r in zip(masses, found)]}


def cmd_clusters(args, cfg, out: Path) -> dict:
    params, rd = model_of(cfg)
    rep = initial_clusters(params, rd, cfg["numerics"]["n_f"])
    if rep is None:
        return {"clustering_predicted": False}
    return {"clustering_predicted": True, **rep.as_dict()}


def _sweep_point(task):
    sigma, M, cfg = task
    params = ModelParams(R=cfg["model"]["R"], sigma=sigma, M=M)
    rd = RadicalDensity.triangular(cfg["model"]["A"], cfg["model"]["S"])
    num = cfg["numerics"]
    traj = integrate(build_system(params, rd, num["n_f"]), None, num["t_end"], num["dt"])
    return order_param_continuum(traj.grid(-1, num["n_g"]), params.R)


def cmd_sweep(args, cfg, out: Path) -> dict:
    sigmas = _parse_range(args.sigmas)
    masses = _parse_range(args.masses)
    tasks = [(float(s), float(M), cfg) for M in masses for s in sigmas]
    jobs = cfg["run"]["jobs"]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            q = list(pool.map(_sweep_point, tasks))
    else:
        q = [_sweep_point(t) for t in tasks]
    write_csv(out / "sweep.csv", ["sigma", "M", "Q_c"], ((s, M, v) for (s, M, _), v in zip(tasks, q)), cfg)
    return {"points": len(tasks)}


COMMANDS = {
    "pde": cmd_pde, "sde": cmd_sde, "stationary": cmd_stationary,
    "critical-noise": cmd_critical_noise, "clusters": cmd_clusters, "sweep": cmd_sweep,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI file with [model] [numerics] [sde] [analysis] [run] sections")
    common.add_argument("--out", default=".", help="output directory (default: current)")
    common.add_argument("--log-level", default="WARNING")
    g = common.add_argument_group("model")
    g.add_argument("--sigma", type=float)
    g.add_argument("--big-r", type=float, help="confidence range R")
    g.add_argument("--big-m", type=float, help="relative radical mass M")
    g.add_argument("--a-mean", type=float, help="radical mean opinion A")
    g.add_argument("--s-width", type=float, help="radical half-width S")
    g = common.add_argument_group("numerics")
    g.add_argument("--n-f", type=int, help="Fourier truncation")
    g.add_argument("--n-g", type=int, help="grid half-resolution for densities")
    g.add_argument("--dt", type=float)
    g.add_argument("--t-end", type=float)
    g.add_argument("--solver", choices=["fourier", "spectral"])
    g.add_argument("--snapshots", type=int, help="number of output times")
    g = common.add_argument_group("agents")
    g.add_argument("--n-agents", type=int)
    g.add_argument("--realizations", type=int)
    g.add_argument("--seed", type=int)
    g.add_argument("--bins", type=int)
    g.add_argument("--sample-dt", type=float)
    common.add_argument("--gamma-threshold", type=float)
    common.add_argument("--jobs", type=int)

    parser = argparse.ArgumentParser(prog="opinionfp", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("pde", parents=[common], help="mean-field trajectory")
    sub.add_parser("sde", parents=[common], help="Monte Carlo agent ensemble")
    p = sub.add_parser("stationary", parents=[common], help="stationary density and noise bounds")
    p.add_argument("--bounds-only", action="store_true")
    p = sub.add_parser("critical-noise", parents=[common], help="order-disorder noise level")
    p.add_argument("--m-sweep", help="radical masses start:stop:step")
    sub.add_parser("clusters", parents=[common], help="linear prediction of initial clustering")
    p = sub.add_parser("sweep", parents=[common], help="Q_c over a sigma x M grid")
    p.add_argument("--sigmas", default="0.005:0.1:0.005")
    p.add_argument("--masses", default="0:0.5:0.1")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=getattr(logging, str(args.log_level).upper(), logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve(args)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        results = COMMANDS[args.command](args, cfg, out)
        write_report(out / f"{args.command}.json", cfg, results)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (BlowUpError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
