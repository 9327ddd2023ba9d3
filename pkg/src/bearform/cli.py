"""Command-line interface.

Subcommands:
    simulate <config> [--mode ideal|robust] [--out DIR]
    chain <config> [--out DIR]
    analyze <traj.csv> [--lyapunov] [--periodic T [--settle S]] [--linearize]
                       [--estimate [--window W]] [--pair N] [--manifest PATH]
    sweep <config> --param PATH --values LIST [--out DIR] [--workers N]
    presets

Exit codes: 0 success, 1 usage error, 2 config parse/validation error,
3 runtime or solver error, 4 certificate failure (descent violation or
periodicity residual above threshold).

The default output directory is ./out (override with the BF_OUT_DIR
environment variable), with one subdirectory per run.
"""

from __future__ import annotations

import argparse
import copy
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import detect_periodic_orbit, linearize_equilibrium, verify_descent
from .config import (config_hash, config_to_dict, list_presets, parse_config,
                     parse_config_dict, preset_text)
from .errors import BearformError, ParseError, ValidationError
from .estimator import MeasurementSeries, estimate_leader
from .integrator import Trajectory
from .reports import (build_descent_report, build_estimate_report,
                      build_linearization_report, build_manifest,
                      build_periodicity_report, build_sweep_report, write_json_report)
from .scenarios import run_chain, run_two_agent
from .trajcsv import read_trajectory_csv, write_trajectory_csv

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_CONFIG = 2
EXIT_RUNTIME = 3
EXIT_CERTIFICATE = 4


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage problems through exit code 1."""

    def error(self, message):
        raise _UsageError(message)


def _load_config_source(source: str):
    """A config argument is either a shipped preset name or a YAML file path."""
    if source in list_presets():
        return preset_text(source), source
    path = Path(source)
    if not path.exists():
        raise ParseError(f"{source!r} is neither a preset nor an existing file; "
                         f"presets: {', '.join(list_presets())}")
    return path.read_text(), path.stem


def _out_dir(arg: str | None, run_name: str) -> Path:
    if arg is not None:
        out = Path(arg)
    else:
        out = Path(os.environ.get("BF_OUT_DIR", "out")) / run_name
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_run_outputs(result, out: Path) -> dict[str, str]:
    outputs = {"trajectory_csv": "trajectory.csv", "descent_json": "descent.json"}
    if result.periodicity is not None:
        outputs["periodicity_json"] = "periodicity.json"
    write_trajectory_csv(result, out / "trajectory.csv")
    write_json_report(build_descent_report(result), out / "descent.json")
    if result.periodicity is not None:
        write_json_report(build_periodicity_report(result.periodicity),
                          out / "periodicity.json")
    outputs["manifest_json"] = "manifest.json"
    write_json_report(build_manifest(result, outputs), out / "manifest.json")
    return outputs


def _cmd_simulate(args) -> int:
    text, name = _load_config_source(args.config)
    cfg = parse_config(text)
    if cfg.kind != "two_agent":
        raise ValidationError("scenario", "simulate runs two_agent configs; use `chain`")
    mode = None
    if args.mode is not None:
        from .control import Mode
        mode = Mode(args.mode)
    result = run_two_agent(cfg, mode=mode)
    out = _out_dir(args.out, f"{name}-{result.mode.value}" if mode else name)
    _write_run_outputs(result, out)
    final = result.shapes[-1, 0, :]
    print(f"simulate {name}: mode={result.mode.value} "
          f"final (rho, alpha1, alpha2) = ({final[0]:.6f}, {final[1]:.6f}, {final[2]:.6f})")
    print(f"descent passed: {all(r.passed for r in result.descent)}")
    if result.periodicity is not None:
        print(f"periodicity residual: {result.periodicity.residual:.3e} "
              f"(converged: {result.periodicity.converged})")
    print(f"outputs in {out}")
    return EXIT_OK


def _cmd_chain(args) -> int:
    text, name = _load_config_source(args.config)
    cfg = parse_config(text)
    if cfg.kind != "chain":
        raise ValidationError("scenario", "chain runs chain configs; use `simulate`")
    result = run_chain(cfg)
    out = _out_dir(args.out, name)
    _write_run_outputs(result, out)
    worst = np.max(np.abs(result.shapes[-1, :, 0] - cfg.controller.potential.rho0))
    print(f"chain {name}: {cfg.n_agents} agents, "
          f"worst final |rho - rho0| = {worst:.2e}, {len(result.events)} events")
    print(f"outputs in {out}")
    return EXIT_OK


def _load_manifest(args, csv_path: Path) -> dict | None:
    import json
    path = Path(args.manifest) if args.manifest else csv_path.parent / "manifest.json"
    if not path.exists():
        return None
    return json.loads(path.read_text())


def _cmd_analyze(args) -> int:
    csv_path = Path(args.trajectory)
    table = read_trajectory_csv(csv_path)
    out = _out_dir(args.out, "") if args.out else csv_path.parent
    manifest = _load_manifest(args, csv_path)
    pair = args.pair - 1
    failed = False

    if args.lyapunov:
        if manifest is None:
            raise ParseError("--lyapunov needs the run manifest (pass --manifest)")
        cfg = parse_config_dict(manifest["config"])
        shape = table.pair_shape(pair)
        traj = Trajectory(times=table.times, states=shape)
        u1 = table.column(f"u{pair + 1}")
        v1 = table.column(f"v{pair + 1}")
        # recover the clamp mask by recomputing the raw commands at each sample
        from .control import Mode
        from .scenarios import _follower_commands
        ctrl = cfg.controller
        ideal = ctrl.mode is Mode.IDEAL or cfg.kind == "chain"
        clamped = np.zeros(len(table.times), dtype=bool)
        for i in range(len(table.times)):
            _, _, sig = _follower_commands(shape[i, 0], shape[i, 1], shape[i, 2],
                                           v1[i], u1[i], ctrl, ideal)
            clamped[i] = sig != 0
        report = verify_descent(traj, ctrl, u1, cfg.leader.bounds.k_u,
                                clamped=clamped)
        write_json_report({"schema": "bearform/descent@1",
                           "pairs": [report.to_dict()], "passed": report.passed},
                          out / "descent.json")
        print(f"descent: passed={report.passed} "
              f"(fd mismatch {report.fd_max_mismatch:.2e}, "
              f"{len(report.violations)} violations, "
              f"{report.monotone_increases} increases)")
        failed |= not report.passed

    if args.periodic is not None:
        shape = table.pair_shape(pair)
        traj = Trajectory(times=table.times, states=shape[:, :2])
        t0, t1 = table.times[0], table.times[-1]
        settle = args.settle if args.settle is not None else t0 + 0.75 * (t1 - t0)
        report = detect_periodic_orbit(traj, args.periodic, settle)
        write_json_report(build_periodicity_report(report), out / "periodicity.json")
        print(f"periodicity: T={report.period_T} residual={report.residual:.3e} "
              f"converged={report.converged}")
        failed |= not report.converged

    if args.linearize:
        if manifest is None:
            raise ParseError("--linearize needs the run manifest (pass --manifest)")
        cfg = parse_config_dict(manifest["config"])
        report = linearize_equilibrium(cfg.leader.v1.value, cfg.controller.mu1,
                                       cfg.controller.potential)
        write_json_report(build_linearization_report(report), out / "linearization.json")
        eigs = ", ".join(f"{e.real:.4f}{e.imag:+.4f}j" for e in report.eigenvalues)
        print(f"linearization: eigenvalues [{eigs}] hurwitz={report.hurwitz}")

    if args.estimate:
        times = table.times
        shape = table.pair_shape(pair)
        own = table.agent_controls(pair + 2)
        series = MeasurementSeries(times=times, rho=shape[:, 0], alpha2=shape[:, 2],
                                   v2=own[:, 0], u2=own[:, 1])
        est = estimate_leader(series, window=args.window)
        est_csv = out / "estimate.csv"
        with open(est_csv, "w", newline="\n") as fh:
            fh.write("t,v1_hat,alpha1_hat,u1_hat,u1_residual\n")
            for i in range(len(times)):
                fh.write(",".join("%.17g" % v for v in
                                  (times[i], est.v1_hat[i], est.alpha1_hat[i],
                                   est.u1_hat[i], est.u1_residual[i])) + "\n")
        resid = float(np.max(np.abs(est.u1_residual[est.interior])))
        write_json_report(
            build_estimate_report(args.window, series.dt, len(times), est.interior,
                                  resid, {"estimate_csv": "estimate.csv"}),
            out / "estimate.json")
        print(f"estimate: interior [{est.interior.start}:{est.interior.stop}] "
              f"max |u1 residual| = {resid:.3e}")

    return EXIT_CERTIFICATE if failed else EXIT_OK


def _set_by_path(data: dict, path: str, value) -> None:
    keys = path.split(".")
    node = data
    for key in keys[:-1]:
        node = node.setdefault(key, {})
        if not isinstance(node, dict):
            raise ValidationError(path, f"cannot descend into {key!r}")
    node[keys[-1]] = value


def _sweep_worker(payload):
    index, data, out_dir = payload
    cfg = parse_config_dict(data)
    result = run_two_agent(cfg) if cfg.kind == "two_agent" else run_chain(cfg)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write_run_outputs(result, out)
    return index, {
        "out_dir": out.name,
        "config_hash": config_hash(cfg),
        "terminal_shape": [list(map(float, result.shapes[-1, p, :]))
                           for p in range(result.n_agents - 1)],
        "periodicity_residual": (None if result.periodicity is None
                                 else result.periodicity.residual),
        "descent_passed": all(r.passed for r in result.descent),
    }


def _cmd_sweep(args) -> int:
    import yaml
    text, name = _load_config_source(args.config)
    try:
        base = yaml.safe_load(text) or {}
    except yaml.YAMLError as exc:
        raise ParseError(str(exc)) from exc
    try:
        values = [float(v) for v in args.values.split(",") if v.strip()]
    except ValueError:
        raise _UsageError(f"--values must be comma-separated numbers, got {args.values!r}")
    if not values:
        raise _UsageError("--values is empty")

    out_base = _out_dir(args.out, f"{name}-sweep")
    payloads = []
    for i, value in enumerate(values):
        data = copy.deepcopy(base)
        _set_by_path(data, args.param, value)
        parse_config_dict(data)  # validate up front so workers cannot half-fail
        payloads.append((i, data, str(out_base / f"run{i:03d}")))

    workers = args.workers or min(len(payloads), os.cpu_count() or 1)
    entries: list[dict | None] = [None] * len(payloads)
    if workers <= 1:
        results = map(_sweep_worker, payloads)
    else:
        pool = ProcessPoolExecutor(max_workers=workers)
        results = pool.map(_sweep_worker, payloads)
    for index, entry in results:
        entries[index] = {"value": values[index], **entry}
    if workers > 1:
        pool.shutdown()

    write_json_report(build_sweep_report(args.param, entries), out_base / "sweep.json")
    for e in entries:
        resid = e["periodicity_residual"]
        extra = f" periodicity_residual={resid:.3e}" if resid is not None else ""
        print(f"{args.param}={e['value']}: {e['out_dir']}{extra}")
    print(f"outputs in {out_base}")
    return EXIT_OK


def _cmd_presets(args) -> int:
    for name in list_presets():
        cfg = parse_config(preset_text(name))
        print(f"{name}: {cfg.kind}, mode={cfg.controller.mode.value}, "
              f"{cfg.n_agents} agents, t_span={list(cfg.integrator.t_span)}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="bearform",
                     description="Constant-bearing formation control simulator")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run a two-agent scenario")
    p.add_argument("config", help="preset name or YAML config path")
    p.add_argument("--mode", choices=["ideal", "robust"], default=None,
                   help="override the config's speed-law mode")
    p.add_argument("--out", default=None, help="output directory")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("chain", help="run an N-agent chain scenario")
    p.add_argument("config", help="preset name or YAML config path")
    p.add_argument("--out", default=None, help="output directory")
    p.set_defaults(func=_cmd_chain)

    p = sub.add_parser("analyze", help="run certificates on a trajectory CSV")
    p.add_argument("trajectory", help="trajectory CSV path")
    p.add_argument("--lyapunov", action="store_true", help="descent verification")
    p.add_argument("--periodic", type=float, default=None, metavar="T",
                   help="stroboscopic periodicity test with period T")
    p.add_argument("--settle", type=float, default=None,
                   help="settle time for --periodic (default: 75%% of the horizon)")
    p.add_argument("--linearize", action="store_true",
                   help="equilibrium linearization and Hurwitz test")
    p.add_argument("--estimate", action="store_true",
                   help="leader estimation from follower measurements")
    p.add_argument("--window", type=int, default=3, help="estimator smoothing window")
    p.add_argument("--pair", type=int, default=1, help="1-based pair index")
    p.add_argument("--manifest", default=None,
                   help="run manifest path (default: manifest.json next to the CSV)")
    p.add_argument("--out", default=None, help="report output directory")
    p.set_defaults(func=_cmd_analyze)

    p = sub.add_parser("sweep", help="run a scenario over a list of parameter values")
    p.add_argument("config", help="preset name or YAML config path")
    p.add_argument("--param", required=True,
                   help="dotted config path, e.g. leader.u1.sinusoid.amplitude")
    p.add_argument("--values", required=True, help="comma-separated numbers")
    p.add_argument("--out", default=None, help="output directory")
    p.add_argument("--workers", type=int, default=None, help="parallel workers")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("presets", help="list shipped configuration presets")
    p.set_defaults(func=_cmd_presets)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ParseError, ValidationError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (BearformError, OSError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
