"""Command-line interface.

Commands
--------
kernels       psi0(s;T), psi0(s;T,t) and their difference on an s-grid (CSV/JSON)
baxter-sweep  LHS/RHS ratio sweep, or the t^(1/2) LHS sweep with ``--kind thm43b``
mc-verify     Monte Carlo comparison of Gram-optimal and kernel predictors (JSON)
selftest      run the acceptance criteria

Without ``--out`` (and without ``BAXTERFBM_OUT_DIR``) results go to stdout in
``--format``. With an output directory each command writes ``<command>.csv``
(tabular commands) and ``<command>.json`` (data plus metadata and config hash);
``--plot`` adds ``<command>.png``.

Model files (``--model PATH``) are flat YAML mappings. Either::

    builtin: fbm
    hurst: 0.25

or a measure plus an autoregressive family::

    name: fbm-plus-atom
    hurst: 0.25
    nu_density: [[0.2250790790392765, 0.75, 0.0]]   # (kappa, gamma, sigma) triples
    nu_atoms: [[2.0, 0.5]]                           # (location, mass) pairs
    a_family: shifted_power                          # power | shifted_power
    a_shift: 0.5

Unknown keys are errors. Values in a model file take precedence over
``--hurst``.

Exit codes: 0 success, 1 invalid input, 2 numerical non-convergence,
3 acceptance failure.
"""

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np
import yaml

from .baxter_analysis import DEFAULT_T_GRID, config_hash, ratio_sweep, thm43b_sweep
from .errors import DomainError, IllConditionedError, NonConvergenceError, TruncationError
from .fbm_kernels import PredictionGeometry, psi0_diff, psi0_finite, psi0_infinite
from .process_model import KernelSeriesConfig, NuMeasure, make_fbm_model, make_model
from .regvar import PowerLaw
from .special_fns import validate_hurst, validate_rho

ENV_OUT_DIR = "BAXTERFBM_OUT_DIR"
EXIT_OK, EXIT_INVALID, EXIT_NUMERIC, EXIT_ACCEPTANCE = 0, 1, 2, 3
MODEL_KEYS = {"builtin", "name", "hurst", "nu_density", "nu_atoms", "a_family", "a_shift"}


class ConfigError(ValueError):
    """Invalid command-line or model-file configuration."""


def _float_list(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def load_model_config(path):
    """Parse a model file into a plain dict, rejecting unknown keys."""
    try:
        data = yaml.safe_load(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read model file {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"model file {path} is not valid YAML: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"model file {path} must be a key-value mapping")
    unknown = sorted(set(data) - MODEL_KEYS)
    if unknown:
        raise ConfigError(f"unknown key(s) in model file {path}: {', '.join(unknown)}; allowed: {sorted(MODEL_KEYS)}")
    return data


def build_model(source, hurst):
    """Model from ``--model`` (``fbm`` or a file path) and ``--hurst``."""
    if source in (None, "fbm"):
        return make_fbm_model(hurst), {"builtin": "fbm", "hurst": hurst}
    cfg = load_model_config(source)
    H = cfg.get("hurst", hurst)
    if "builtin" in cfg:
        if cfg["builtin"] != "fbm":
            raise ConfigError(f"unknown builtin model {cfg['builtin']!r}; only 'fbm' is built in")
        if {"nu_density", "nu_atoms", "a_family", "a_shift"} & set(cfg):
            raise ConfigError("builtin models take no measure or a-family keys")
        return make_fbm_model(H), dict(cfg, hurst=H)
    if "nu_density" not in cfg and "nu_atoms" not in cfg:
        raise ConfigError("model file needs either 'builtin: fbm' or a measure ('nu_density'/'nu_atoms')")
    nu = NuMeasure(densities=tuple(cfg.get("nu_density") or ()), atoms=tuple(cfg.get("nu_atoms") or ()))
    model = make_model(
        H, nu, cfg.get("a_family", "power"), cfg.get("a_shift", 0.0), name=cfg.get("name", Path(source).stem)
    )
    return model, dict(cfg, hurst=H)


def _out_dir(args):
    out = args.out or os.environ.get(ENV_OUT_DIR)
    if out:
        path = Path(out)
        path.mkdir(parents=True, exist_ok=True)
        return path
    return None


def _emit(args, command, csv_text, payload):
    """Write CSV/JSON to the output directory or one of them to stdout."""
    json_text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    out = _out_dir(args)
    if out is None:
        sys.stdout.write(csv_text if (args.format == "csv" and csv_text is not None) else json_text)
        return None
    if csv_text is not None:
        (out / f"{command}.csv").write_text(csv_text)
    (out / f"{command}.json").write_text(json_text)
    return out


def _require_plot_dir(args):
    if args.plot and _out_dir(args) is None:
        raise ConfigError("--plot needs an output directory (--out or BAXTERFBM_OUT_DIR)")


# ---------------------------------------------------------------------------


def cmd_kernels(args):
    H = validate_hurst(args.hurst)
    geo = PredictionGeometry.from_horizon(args.horizon, args.window)
    if args.s_values:
        s = np.asarray(args.s_values, dtype=float)
    else:
        lo = args.s_min if args.s_min is not None else 1e-3 * geo.t
        hi = args.s_max if args.s_max is not None else (1 - 1e-3) * geo.t
        if not 0 < lo < hi < geo.t:
            raise DomainError(f"s-grid must satisfy 0 < s_min < s_max < t = {geo.t}, got [{lo}, {hi}]")
        s = np.geomspace(lo, hi, args.s_points)
    _require_plot_dir(args)
    inf = psi0_infinite(s, geo.T, H)
    fin = psi0_finite(s, geo.T, geo.t, H)
    diff = psi0_diff(s, geo.T, geo.t, H)
    meta = {"command": "kernels", "H": H, "T": geo.T, "t": geo.t, "n_points": len(s)}
    meta["config_hash"] = config_hash(meta)
    lines = ["s,psi_infinite,psi_finite,diff"]
    lines += [f"{a!r},{b!r},{c!r},{d!r}" for a, b, c, d in zip(*(map(float, col) for col in (s, inf, fin, diff)))]
    payload = {"metadata": meta, "columns": ["s", "psi_infinite", "psi_finite", "diff"],
               "rows": [[float(a), float(b), float(c), float(d)] for a, b, c, d in zip(s, inf, fin, diff)]}
    out = _emit(args, "kernels", "\n".join(lines) + "\n", payload)
    if args.plot:
        from .plotting import plot_kernels

        plot_kernels(s, inf, fin, diff, out / "kernels.png", f"H={H:g}, T={geo.T:g}, t={geo.t:g}")
    return EXIT_OK


def cmd_baxter_sweep(args):
    model, model_cfg = build_model(args.model, args.hurst)
    H = model.H
    grid = args.t_grid or list(DEFAULT_T_GRID)
    cfg = KernelSeriesConfig(k_max=args.k_max, tol=args.series_tol)
    _require_plot_dir(args)
    if args.kind == "ratio":
        rho = H if args.rho is None else args.rho
        try:
            validate_rho(H, rho, upper=True)
        except DomainError as exc:
            raise DomainError(f"{exc} (the ratio limit needs -1/2 + H < rho < 1/2 + H)") from exc
        sweep = ratio_sweep(model, PowerLaw(rho), args.horizon, grid, cfg, lhs_tol=args.tol, workers=args.workers)
    else:
        sweep = thm43b_sweep(model, args.horizon, args.t1, grid, args.norm, cfg, lhs_tol=args.tol,
                             workers=args.workers)
    sweep.metadata["model_config"] = model_cfg
    sweep.metadata["config_hash"] = config_hash({k: v for k, v in sweep.metadata.items() if k != "m_hat"})
    out = _emit(args, "baxter-sweep", sweep.to_csv(), json.loads(sweep.to_json()))
    if args.plot:
        from .plotting import plot_sweep

        plot_sweep(sweep, out / "baxter-sweep.png")
    return EXIT_OK


def cmd_mc_verify(args):
    from .fbm_simulation import SampleGrid, mc_verify

    H = validate_hurst(args.hurst)
    geo = PredictionGeometry.from_horizon(args.horizon, args.window)
    _require_plot_dir(args)
    sizes = sorted({max(8, args.grid_size // 4), max(8, args.grid_size // 2), args.grid_size})
    report = mc_verify(H, geo.t0, geo.t1, geo.t2, args.grid_size, args.paths, args.seed, tuple(sizes),
                       mse_rel_tol=args.tol, workers=args.workers)
    payload = json.loads(report.to_json())
    meta = {"command": "mc-verify", "H": H, "T": geo.T, "t": geo.t, "n": args.grid_size,
            "paths": args.paths, "seed": args.seed, "tol": args.tol}
    payload["config_hash"] = config_hash(meta)
    out = _emit(args, "mc-verify", None, payload)
    if args.plot:
        from .plotting import plot_mc

        grid = SampleGrid.midpoints(geo.t0, geo.t1, args.grid_size)
        plot_mc(report, grid.points, out / "mc-verify.png")
    return EXIT_OK if report.passed else EXIT_ACCEPTANCE


def cmd_selftest(args):
    from .acceptance import CRITERIA, run_criterion

    names = args.only or list(CRITERIA)
    unknown = [n for n in names if n not in CRITERIA]
    if unknown:
        raise ConfigError(f"unknown criteria {unknown}; choose from {list(CRITERIA)}")
    failed = 0
    for name in names:
        res = run_criterion(name, args.tamper_constant)
        print(res.line(), flush=True)
        failed += not res.passed
    print(f"{len(names) - failed}/{len(names)} criteria passed")
    return EXIT_ACCEPTANCE if failed else EXIT_OK


# ---------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage; 2 is reserved for numerical failure here
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help=f"output directory (default: ${ENV_OUT_DIR}, else stdout)")
    common.add_argument("--format", choices=("csv", "json"), default="csv", help="stdout format")
    common.add_argument("--plot", action="store_true", help="also write PNG figures to the output directory")
    common.add_argument("--hurst", type=float, default=0.25, help="Hurst index H in (0, 1/2)")
    common.add_argument("--horizon", type=float, default=1.0, help="prediction horizon T = t2 - t1")
    common.add_argument("--workers", type=int, default=1, help="threads for independent rows/blocks")

    parser = _Parser(prog="baxterfbm", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("kernels", parents=[common], help="tabulate fBm predictor kernels")
    p.add_argument("--window", type=float, default=5.0, help="observation window length t = t1 - t0")
    p.add_argument("--s-points", type=int, default=100)
    p.add_argument("--s-min", type=float)
    p.add_argument("--s-max", type=float)
    p.add_argument("--s-values", type=_float_list, help="explicit comma-separated s values")
    p.set_defaults(func=cmd_kernels)

    p = sub.add_parser("baxter-sweep", parents=[common], help="Baxter inequality sweep over t")
    p.add_argument("--model", default="fbm", help="'fbm' or a model file path")
    p.add_argument("--kind", choices=("ratio", "thm43b"), default="ratio")
    p.add_argument("--rho", type=float, help="index of g(s) = s^rho (default H)")
    p.add_argument("--t-grid", type=_float_list, help="comma-separated increasing t values >= 1")
    p.add_argument("--t1", type=float, default=0.0, help="last observation time for --kind thm43b")
    p.add_argument("--norm", type=float, default=1.0, help="||X(1)|| for --kind thm43b")
    p.add_argument("--tol", type=float, default=1e-7, help="relative quadrature tolerance of the LHS")
    p.add_argument("--series-tol", type=float, default=1e-8, help="relative truncation tolerance of the series")
    p.add_argument("--k-max", type=int, default=300, help="term cap of the series")
    p.set_defaults(func=cmd_baxter_sweep)

    p = sub.add_parser("mc-verify", parents=[common], help="Monte Carlo predictor comparison")
    p.add_argument("--window", type=float, default=4.0, help="observation window length t = t1 - t0")
    p.add_argument("--grid-size", type=int, default=256)
    p.add_argument("--paths", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=20240601)
    p.add_argument("--tol", type=float, default=0.05, help="allowed relative gap between kernel and Gram MSE")
    p.set_defaults(func=cmd_mc_verify)

    p = sub.add_parser("selftest", parents=[common], help="run the acceptance criteria")
    p.add_argument("--only", type=lambda s: [x.strip() for x in s.split(",") if x.strip()])
    p.add_argument("--tamper-constant", type=float, default=0.0, help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_selftest)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (DomainError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (NonConvergenceError, TruncationError, IllConditionedError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
