"""Command-line entry point: run, sweep, gen-scenario, oracle."""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from .config import ExperimentConfig, load_config
from .errors import ConfigurationError, ConstraintError, HflsnmError, RoundError
from .fedsim import build_state, run_global_round, state_for, summarize
from .scenario import Scenario

EXIT_OK, EXIT_RUNTIME, EXIT_VALIDATION = 0, 1, 2

ROUND_COLUMNS = (
    "round", "algorithm", "seed", "n_selected", "selection", "r_ef", "r_re", "effective",
    "redundant", "E_total", "t_total", "B_S", "cum_energy", "accuracy",
    "max_sigma_up", "max_sigma_down",
)


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def rounds_csv(reports, cfg: ExperimentConfig) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(ROUND_COLUMNS)
    cum = 0.0
    for r in reports:
        cum += r.E_total
        ups = [v for v in r.noise.sigma_up.values() if v is not None]
        w.writerow([_fmt(x) for x in (
            r.round, cfg.algorithm, cfg.seed, r.M, ";".join(map(str, r.selection)), r.r_ef, r.r_re,
            r.effective, r.redundant, r.E_total, r.t_total, r.B_S, cum, r.accuracy,
            max(ups, default=0.0), max(r.noise.sigma_down.values(), default=0.0),
        )])
    return buf.getvalue()


def _error_payload(exc: BaseException) -> dict:
    cause = exc.cause if isinstance(exc, RoundError) else exc
    out = {"error": type(cause).__name__, "message": str(cause)}
    if isinstance(exc, RoundError):
        out["round"] = exc.round_index
    bound = getattr(cause, "bound", None)
    if bound is not None:
        out["bound"] = bound
    return out


def _exit_code(exc: BaseException) -> int:
    cause = exc.cause if isinstance(exc, RoundError) else exc
    return EXIT_VALIDATION if isinstance(cause, (ConfigurationError, ConstraintError)) else EXIT_RUNTIME


def _resolve_config(args) -> tuple:
    """Config plus an optional scenario snapshot to start from."""
    scenario = None
    if args.config:
        data = json.loads(Path(args.config).read_text())
        if "config" in data and "scenario" in data:
            cfg = ExperimentConfig.from_dict(data["config"])
            scenario = Scenario.from_dict(data["scenario"])
        else:
            cfg = ExperimentConfig.from_dict(data)
    else:
        cfg = ExperimentConfig()
    flags = {
        "algorithm": getattr(args, "algo", None), "r_ef0": getattr(args, "r_ef0", None),
        "rounds": getattr(args, "rounds", None), "seed": getattr(args, "seed", None),
    }
    cfg = replace(cfg, **{k: v for k, v in flags.items() if v is not None})
    if getattr(args, "epsilon", None) is not None:
        cfg = replace(cfg, dp_epsilon=_parse_epsilon(args.epsilon))
    cfg = cfg.with_overrides(getattr(args, "overrides", None) or [])
    if scenario is not None and cfg.seed != json.loads(Path(args.config).read_text())["config"]["seed"]:
        scenario = None  # a different seed means a different deployment
    return cfg, scenario


def _parse_epsilon(raw):
    if raw is None or str(raw).lower() in ("none", "inf", "off"):
        return None
    return float(raw)


def snapshot(cfg: ExperimentConfig, scenario: Scenario) -> dict:
    return {"config": cfg.to_dict(), "scenario": scenario.to_dict()}


def execute(cfg: ExperimentConfig, out_dir: Path, scenario: Scenario | None = None) -> dict:
    """Run one experiment and write rounds.csv, summary.json and scenario.json."""
    out_dir.mkdir(parents=True, exist_ok=True)
    state = state_for(cfg, scenario) if scenario is not None else build_state(cfg)
    (out_dir / "scenario.json").write_text(json.dumps(snapshot(cfg, state.scenario), indent=2, sort_keys=True) + "\n")
    reports = [run_global_round(state) for _ in range(cfg.rounds)]
    (out_dir / "rounds.csv").write_text(rounds_csv(reports, cfg))
    summary = summarize(reports, cfg)
    (out_dir / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return summary


def _write_error(out_dir: Path | None, payload: dict) -> None:
    text = json.dumps(payload, sort_keys=True)
    print(text, file=sys.stderr)
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "error.json").write_text(text + "\n")


def cmd_run(args) -> int:
    out = Path(args.out)
    try:
        cfg, scenario = _resolve_config(args)
        summary = execute(cfg, out, scenario)
    except (HflsnmError, ValueError) as exc:
        _write_error(out, _error_payload(exc))
        return _exit_code(exc)
    print(json.dumps(summary, sort_keys=True))
    return EXIT_OK


def _sweep_one(job):
    cfg, out_dir = job
    try:
        execute(cfg, out_dir)
    except (HflsnmError, ValueError) as exc:
        payload = _error_payload(exc)
        _write_error(out_dir, payload)
        return None, payload
    with open(out_dir / "rounds.csv", newline="") as fh:
        return list(csv.DictReader(fh)), None


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("HFLSNM_THREADS", "1")))
    except ValueError:
        return 1


def cmd_sweep(args) -> int:
    try:
        base, _ = _resolve_config(args)
    except (HflsnmError, ValueError) as exc:
        _write_error(Path(args.out), _error_payload(exc))
        return _exit_code(exc)
    values = [v.strip() for v in args.values.split(",") if v.strip()]
    if not values:
        _write_error(Path(args.out), {"error": "ConfigurationError", "message": "no sweep values"})
        return EXIT_VALIDATION
    out = Path(args.out)
    jobs, labels, failures = [], [], []
    for raw in values:
        try:
            if args.param == "r_ef0":
                cfg = replace(base, r_ef0=float(raw))
            else:
                cfg = replace(base, dp_epsilon=_parse_epsilon(raw))
        except (HflsnmError, ValueError) as exc:
            failures.append({"value": raw, **_error_payload(exc)})
            continue
        jobs.append((cfg, out / f"{args.param}={raw}"))
        labels.append(raw)
    workers = min(_threads(), max(1, len(jobs)))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_one, jobs))
    else:
        results = [_sweep_one(j) for j in jobs]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["param", "value", "round", "accuracy", "cum_energy", "r_ef", "n_selected"])
    for raw, (rows, err) in zip(labels, results):
        if err is not None:
            failures.append({"value": raw, **err})
            continue
        for row in rows:
            w.writerow([args.param, raw, row["round"], row["accuracy"], row["cum_energy"], row["r_ef"], row["n_selected"]])
    out.mkdir(parents=True, exist_ok=True)
    (out / "sweep.csv").write_text(buf.getvalue())
    (out / "sweep_failures.json").write_text(json.dumps(failures, indent=2, sort_keys=True) + "\n")
    print(json.dumps({"runs": len(labels), "failed": [f["value"] for f in failures]}))
    return EXIT_OK if not failures else EXIT_RUNTIME


def cmd_gen_scenario(args) -> int:
    try:
        cfg, _ = _resolve_config(args)
        state = build_state(cfg)
    except (HflsnmError, ValueError) as exc:
        _write_error(None, _error_payload(exc))
        return _exit_code(exc)
    text = json.dumps(snapshot(cfg, state.scenario), indent=2, sort_keys=True) + "\n"
    if args.out == "-":
        sys.stdout.write(text)
    else:
        Path(args.out).write_text(text)
    return EXIT_OK


def cmd_oracle(args) -> int:
    from .association import exhaustive_assoc, fast_greedy
    from .resource import grid_oracle_p1, random_p1_instance, solve_p1
    from .scenario import RadioParams, build_scenario
    from .mobility import place_scenario
    from .socialnet import generate_graph

    rng = np.random.default_rng(args.seed)
    print("P1: solver vs grid oracle")
    print(f"{'inst':>4} {'m':>2} {'bind':>4} {'iters':>5} {'kkt_residual':>12} {'E_solver':>12} {'E_grid':>12} {'ratio':>8}")
    t = time.perf_counter()
    for i in range(args.p1):
        inst = random_p1_instance(rng, int(rng.integers(2, 5)))
        s, o = solve_p1(inst), grid_oracle_p1(inst, args.grid)
        print(f"{i:>4} {inst.m:>2} {int(s.binding.sum()):>4} {s.iterations:>5} {s.kkt_residual:>12.3e} "
              f"{s.energy:>12.6g} {o.energy:>12.6g} {s.energy / o.energy:>8.5f}")
    print(f"({time.perf_counter() - t:.2f}s)\n")
    print("P2: Fast Greedy vs exhaustive (M=5, K=2)")
    print(f"{'inst':>4} {'E_greedy':>12} {'E_opt':>12} {'ratio':>8}")
    radio = RadioParams(model_bits=2e5)
    ratios = []
    for i in range(args.p2):
        seed = rng.integers(2**32)
        graph = generate_graph(5, 1.6, seed=int(seed))
        sites, states = place_scenario(2, (1000.0, 1000.0), 5, np.random.default_rng(seed + 1), coverage_radius=2000.0)
        sc = build_scenario(graph, sites, states, np.random.default_rng(seed + 2), radio)
        try:
            g, o = fast_greedy(graph.clients, sc), exhaustive_assoc(graph.clients, sc)
        except HflsnmError as exc:
            print(f"{i:>4} infeasible: {exc}")
            continue
        ratios.append(g.energy / o.energy)
        print(f"{i:>4} {g.energy:>12.6g} {o.energy:>12.6g} {ratios[-1]:>8.5f}")
    if ratios:
        print(f"mean ratio {math.fsum(ratios) / len(ratios):.5f}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hflsnm", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="JSON config, or a scenario.json snapshot")
        sp.add_argument("--algo", help="do-snm, ra, lg, rd, ed or full")
        sp.add_argument("--r-ef0", dest="r_ef0", type=float)
        sp.add_argument("--rounds", type=int)
        sp.add_argument("--seed", type=int)
        sp.add_argument("--epsilon", help="DP budget; 'none' disables noise")
        sp.add_argument("overrides", nargs="*", help="extra key=value config overrides")

    run = sub.add_parser("run", help="run one experiment")
    common(run)
    run.add_argument("--out", default="runs/latest")
    run.set_defaults(func=cmd_run)

    sw = sub.add_parser("sweep", help="run a parameter sweep")
    common(sw)
    sw.add_argument("--param", choices=("r_ef0", "epsilon"), required=True)
    sw.add_argument("--values", required=True, help="comma-separated values")
    sw.add_argument("--out", default="runs/sweep")
    sw.set_defaults(func=cmd_sweep)

    gs = sub.add_parser("gen-scenario", help="write a reproducibility snapshot without running")
    common(gs)
    gs.add_argument("--out", default="-")
    gs.set_defaults(func=cmd_gen_scenario)

    orc = sub.add_parser("oracle", help="print solver-vs-oracle residual tables")
    orc.add_argument("--p1", type=int, default=20)
    orc.add_argument("--p2", type=int, default=10)
    orc.add_argument("--grid", type=int, default=400)
    orc.add_argument("--seed", type=int, default=0)
    orc.set_defaults(func=cmd_oracle)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
