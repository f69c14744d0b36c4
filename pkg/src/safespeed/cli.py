"""Command-line front end.

Exit codes: 0 success, 1 bad input, 2 numerical failure, 3 validation bound
exceeded.  Data goes to stdout or files, diagnostics to stderr.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time

import numpy as np

from . import __version__
from .config import ConfigError, Scenario, load_scenario
from .model import PARAM_NAMES, stage1_speed_limit, terminal_state
from .plot import emit_plot
from .report import Report, emit_report, plain
from .sim import StepTooLarge, WorldLayout, empirical_max_speed, simulate_run
from .solver import (
    LatencyModel,
    SolverConfig,
    SweepSpec,
    coupling_surface,
    max_safe_speed,
    saturation_ratio,
    sweep,
)
from .validation import DEFAULT_GRIDS, validate_model

log = logging.getLogger("safespeed")

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC, EXIT_BOUND = 0, 1, 2, 3

# reproduction ranges for figure sweeps
SWEEP_GRIDS = {
    "tau": np.linspace(0.0, 0.03, 7),
    "e": np.linspace(0.0, 0.03, 7),
    "S": np.linspace(4.0, 12.0, 9),
    "R": np.array([2.5, 3.0, 3.5]),
    "r": np.linspace(0.05, 0.15, 6),
    "d": np.linspace(0.2, 0.55, 8),
    "a_max": np.linspace(10.0, 30.0, 9),
    "j_max": np.linspace(60.0, 180.0, 7),
}


class InputError(ValueError):
    pass


def parse_grid(text: str) -> list[float]:
    """``a,b,c`` or ``start:stop:num``."""
    try:
        if ":" in text:
            start, stop, num = text.split(":")
            return [float(v) for v in np.linspace(float(start), float(stop), int(num))]
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise InputError(f"cannot parse grid {text!r}") from None


def crossing_curve(p, cfg: SolverConfig, points: int = 200) -> dict:
    v_x_max = stage1_speed_limit(p)
    grid = v_x_max * np.arange(1, points + 1) / points
    curve = {"v_x": [], "v_y_T": [], "v_y_max_T": [], "ratio": []}
    for v in grid:
        term = terminal_state(p, float(v), cfg.mode)
        curve["v_x"].append(float(v))
        curve["v_y_T"].append(term.v_y_T)
        curve["v_y_max_T"].append(term.v_y_max_T)
        curve["ratio"].append(saturation_ratio(p, float(v), cfg.mode))
    return curve


def _sweep_series(sc: Scenario, param, values, series, simulate, cfg):
    empirical = (lambda q: empirical_max_speed(q, sc.sim).v_max) if simulate else None
    out = []
    bases = [(None, sc.flight)]
    if series:
        key, vals = series
        bases = [(f"{key}={v:g}", sc.flight.replace(**{key: v})) for v in vals]
    for label, base in bases:
        res = sweep(SweepSpec(base, param, tuple(values), simulate), cfg, empirical)
        out.append({"label": label, "param": param, "rows": plain(res.rows)})
    return out


def _run(args, sc: Scenario) -> tuple[Report, int]:
    cfg = sc.solver
    code = EXIT_OK
    if args.command == "solve":
        sol = max_safe_speed(sc.flight, cfg)
        payload = plain(sol)
        print(f"v_safe  = {sol.v_safe:.4f} m/s  (binding: {sol.binding}, mode: {cfg.mode})")
        print(f"v_x_max = {sol.v_x_max:.4f} m/s")
        print(f"v1 = {_opt(sol.v1)}  v2 = {_opt(sol.v2)}")
        kind = "solution"
    elif args.command == "crossings":
        sol = max_safe_speed(sc.flight, cfg)
        payload = {"v1": sol.v1, "v2": sol.v2, "v_x_max": sol.v_x_max,
                   "saturation_ratio_peak": sol.saturation_ratio_peak,
                   "curve": crossing_curve(sc.flight, cfg, args.points)}
        print(f"v1 = {_opt(sol.v1)}  v2 = {_opt(sol.v2)}  v_x_max = {sol.v_x_max:.4f}  "
              f"t'/T peak at v_x = {sol.saturation_ratio_peak:.4f}")
        kind = "crossings"
    elif args.command == "sweep":
        param, values, simulate = _sweep_request(args, sc)
        series = None
        if args.series:
            key, _, vals = args.series.partition("=")
            if key not in PARAM_NAMES or key == param:
                raise InputError(f"--series must name another flight parameter, got {key!r}")
            series = (key, parse_grid(vals))
        payload = {"series": _sweep_series(sc, param, values, series, simulate, cfg)}
        for s in payload["series"]:
            for row in s["rows"]:
                tag = f"[{s['label']}] " if s["label"] else ""
                print(f"{tag}{param}={row['value']:.6g}  v_safe={_opt(row['v_safe'])}  "
                      f"binding={row['binding']}" + (f"  error={row['error']}" if row["error"] else ""))
        kind = "sweep"
    elif args.command == "surface":
        lm = sc.latency_model or LatencyModel()
        res = coupling_surface(sc.flight, parse_grid(args.e_grid), parse_grid(args.S_grid), lm, cfg)
        payload = plain(res)
        print(f"peak v_safe = {np.nanmax(res.v_safe):.4f} m/s at e={res.argmax[0]:.6g}, S={res.argmax[1]:.6g}")
        kind = "surface"
    elif args.command == "simulate":
        layout = WorldLayout.for_config(sc.flight, sc.sim)
        trace, verdict = simulate_run(sc.flight, sc.sim, layout, args.vx)
        if args.trace:
            trace.to_csv(args.trace)
        payload = plain({"v_x": args.vx, "verdict": verdict, "samples": len(trace)})
        print(f"v_x={args.vx:.4f}: {verdict.outcome}  y_max={verdict.y_max:.4f} m  "
              f"v_y at face={verdict.v_y_terminal:.4f} m/s")
        kind = "simulation"
    elif args.command == "empirical":
        res = empirical_max_speed(sc.flight, sc.sim)
        payload = plain(res)
        print(f"empirical v_max = {res.v_max:.4f} m/s  bracket={res.bracket}  runs={res.n_runs}")
        kind = "empirical"
    elif args.command == "validate":
        grids = DEFAULT_GRIDS if args.sweep == "all" else {args.sweep: DEFAULT_GRIDS[args.sweep]}
        vcfg = SolverConfig(cfg.grid_points, cfg.v_tolerance, args.model_mode)
        rep = validate_model(sc.flight, grids, sc.sim, vcfg, bound=args.max_error)
        payload = {
            "bound": rep.bound, "speed_ceiling": rep.speed_ceiling, "max_error": rep.max_error,
            "passed": rep.passed, "model_mode": args.model_mode,
            "panels": {k: {"param": k, "rows": plain(v.rows)} for k, v in rep.panels.items()},
        }
        for row in rep.rows():
            print(f"{row.param}={row.value:.6g}  model={_opt(row.v_safe)}  "
                  f"sim={_opt(row.empirical)}  rel_err={_opt(row.rel_err)}")
        print(f"max relative error (sim <= {rep.speed_ceiling:g} m/s): {_opt(rep.max_error)}  "
              f"bound {rep.bound:g}: {'PASS' if rep.passed else 'FAIL'}")
        if not rep.passed:
            code = EXIT_BOUND
        kind = "validation"
    else:  # pragma: no cover - argparse restricts choices
        raise InputError(f"unknown command {args.command}")
    return Report(kind, sc.to_dict(), payload, sc.digest()), code


def _sweep_request(args, sc: Scenario):
    if args.param:
        param = args.param
        values = parse_grid(args.values) if args.values else list(SWEEP_GRIDS[param])
        simulate = args.simulate
    elif sc.sweep:
        param, values = sc.sweep["param"], sc.sweep["values"]
        simulate = args.simulate or sc.sweep["simulate"]
    else:
        raise InputError("sweep needs --param or a 'sweep' section in the config")
    if any(b <= a for a, b in zip(values, values[1:])):
        raise InputError("sweep values must be strictly increasing")
    return param, [float(v) for v in values], simulate


def _opt(v):
    return "-" if v is None else f"{v:.4f}"


PLOT_FOR = {"sweep": "sweep-line", "crossings": "crossing-curves", "surface": "surface-heatmap"}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--profile", default="defaults", help="named scenario profile")
    common.add_argument("--config", help="JSON scenario file layered over the profile")
    common.add_argument("--set", dest="overrides", action="append", default=[],
                        metavar="KEY=VALUE", help="override, e.g. R=1e6 or solver.mode=exact")
    common.add_argument("--json", dest="json_out", metavar="PATH", help="write JSON report")
    common.add_argument("--csv", dest="csv_out", metavar="PATH", help="write CSV table")
    common.add_argument("--timing", action="store_true", help="record wall time in the report")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="safespeed", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"safespeed {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("solve", parents=[common], help="maximum safe speed for one scenario")
    p = sub.add_parser("crossings", parents=[common], help="v1/v2 and terminal-speed curves")
    p.add_argument("--points", type=int, default=200)
    p.add_argument("--plot", metavar="PATH", help="write SVG")
    p = sub.add_parser("sweep", parents=[common], help="one-parameter sweep")
    p.add_argument("--param", choices=PARAM_NAMES)
    p.add_argument("--values", help="a,b,c or start:stop:num")
    p.add_argument("--series", metavar="KEY=V1,V2", help="one curve per value of another parameter")
    p.add_argument("--simulate", action="store_true", help="also measure with the simulator")
    p.add_argument("--plot", metavar="PATH", help="write SVG")
    p = sub.add_parser("surface", parents=[common], help="latency-coupled (e, S) surface")
    p.add_argument("--e-grid", default="0:0.03:13")
    p.add_argument("--S-grid", default="4:12:9")
    p.add_argument("--plot", metavar="PATH", help="write SVG")
    p = sub.add_parser("simulate", parents=[common], help="single simulated approach")
    p.add_argument("--vx", type=float, required=True, help="forward speed (m/s)")
    p.add_argument("--trace", metavar="PATH", help="write trace CSV")
    sub.add_parser("empirical", parents=[common], help="simulated maximum speed by bisection")
    p = sub.add_parser("validate", parents=[common], help="model vs simulator report")
    p.add_argument("--sweep", choices=["all", *DEFAULT_GRIDS], default="all")
    p.add_argument("--max-error", type=float, default=0.20)
    p.add_argument("--model-mode", choices=["paper", "exact"], default="exact")
    return parser


def run_cli(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    try:
        sc = load_scenario(args.profile, args.config, args.overrides)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    started = time.perf_counter()
    try:
        report, code = _run(args, sc)
    except (InputError, ConfigError, StepTooLarge) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as exc:  # numerical failures of any kind
        log.debug("numerical failure", exc_info=True)
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    if args.timing:
        report.wall_time = time.perf_counter() - started
    try:
        if args.json_out:
            emit_report(report, "json", args.json_out)
        if args.csv_out:
            emit_report(report, "csv", args.csv_out)
        if getattr(args, "plot", None):
            emit_plot(report.payload, PLOT_FOR[args.command], args.plot)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return code


def main():
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
