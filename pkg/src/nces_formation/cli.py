"""Command-line entry point: train, eval, plot, inspect-topology, list-scenarios."""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import kernel
from .formation import FormationPattern, PatternKind
from .io import TraceFormatError, atomic_write_text, write_json, write_trace
from .optimizer import DivergenceError, write_log
from .policy import Layout, LayoutMismatch, load_params, save_params
from .scenarios import ScenarioError, ScenarioSpec, builtin_scenarios, get_scenario, load_scenario
from .topology import SwarmCollapse, build_topology, elect_head, fail_nodes, has_spanning_tree, laplacian
from .workflows import RunConfig, constraint_ablation, evaluate, selected_params, train_scenario

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

OUT_ENV = "NCES_FORMATION_OUT"


class ConfigError(ValueError):
    pass


def resolve_scenario(ref: str) -> ScenarioSpec:
    if ref.endswith(".toml") or os.path.sep in ref:
        return load_scenario(ref)
    return get_scenario(ref)


def out_dir(args, default: str) -> Path:
    if args.out:
        return Path(args.out)
    root = os.environ.get(OUT_ENV)
    return Path(root) / default if root else Path(default)


def resolve_run_config(args) -> RunConfig:
    base = {}
    if args.config:
        with open(args.config, "rb") as fh:
            base = tomllib.load(fh)
    try:
        cfg = RunConfig.from_dict(base)
    except TypeError as exc:
        raise ConfigError(f"bad run config: {exc}") from exc
    if args.scenario:
        cfg.scenario = args.scenario
    if args.seed is not None:
        cfg.seed = args.seed
    if args.iters is not None:
        cfg.iterations = args.iters
    if args.pop_init is not None:
        cfg.evolution = replace(cfg.evolution, pop_init=args.pop_init)
    con = cfg.constraint
    if args.no_constraint:
        con = replace(con, enabled=False)
    if args.constraint_agg:
        con = replace(con, aggregation=args.constraint_agg)
    cfg.constraint = con
    cfg.evolution = replace(cfg.evolution, seed=cfg.seed)
    return cfg


def cmd_train(args) -> int:
    cfg = resolve_run_config(args)
    spec = resolve_scenario(cfg.scenario)
    out = out_dir(args, f"runs/{spec.name}-seed{cfg.seed}")
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.time()
    log_lines = []

    def on_record(rec):
        log_lines.append(rec)
        if args.verbose and "eval_score" in rec:
            print(f"iter {rec['iteration']:5d} pop {rec['pop_size']:4d} objective {rec['eval_score']:.4f}",
                  file=sys.stderr)

    result = train_scenario(spec, cfg, on_record=on_record)
    params = selected_params(result)
    layout = Layout.for_scenario(spec.with_switch_signal)
    write_log(result.log, out / "convergence.jsonl")
    save_params(out / "params.json", list(params), layout, spec.name, cfg.seed,
                extra={"selected": "best" if result.best_params is not None else "final"})
    atomic_write_text(out / "scenario.toml", spec.to_toml())
    summary = {
        "scenario": spec.name,
        "iterations": len(result.log),
        "stop_reason": result.stop_reason,
        "final_mean_fitness": result.log[-1]["mean_fitness"] if result.log else None,
        "best_objective": result.best_score,
        "pop_size_trajectory": [r["pop_size"] for r in result.log],
        "ablation": {"constraint_enabled": cfg.constraint.enabled,
                     "constraint_aggregation": cfg.constraint.aggregation},
        "config": cfg.to_dict(),
        "backend": kernel.BACKEND,
        "wall_time_s": round(time.time() - t0, 3),
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S"),
    }
    write_json(out / "summary.json", summary)
    print(json.dumps({"out": str(out), "iterations": summary["iterations"],
                      "best_objective": summary["best_objective"]}))
    return 0


def cmd_eval(args) -> int:
    params, layout, doc = load_params(args.params)
    spec = resolve_scenario(args.scenario or doc["scenario"])
    if args.seed is not None:
        spec = spec.with_seed(args.seed)
    need = Layout.for_scenario(spec.with_switch_signal)
    if layout != need or len(params) != spec.n_missiles:
        raise LayoutMismatch(f"parameter file has {len(params)} agents x {layout.size}; scenario "
                             f"{spec.name} needs {spec.n_missiles} x {need.size}")
    out = out_dir(args, f"evals/{spec.name}-seed{spec.seed}")
    trace, summary = evaluate(spec, np.stack(params))
    atomic_write_text(out / "scenario.toml", spec.to_toml())
    summary.update({"scenario": spec.name, "seed": spec.seed, "params": str(args.params),
                    "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S")})
    write_trace(trace, out, summary)
    print(json.dumps({"out": str(out), "mean_tail_error": summary["mean_tail_error"]}))
    return 0


def cmd_plot(args) -> int:
    from .plotting import plot_trace

    paths = plot_trace(args.trace_dir, args.out)
    print(json.dumps({"files": [str(p) for p in paths]}))
    return 0


def cmd_inspect(args) -> int:
    if args.scenario:
        pattern = resolve_scenario(args.scenario).pattern
    else:
        pattern = FormationPattern(PatternKind(args.kind), args.n, args.alpha_p, args.l_f)
    alive = pattern.ids
    topo = build_topology(pattern, alive, elect_head(alive))
    if args.fail:
        topo = fail_nodes(topo, [int(x) for x in args.fail.split(",") if x], pattern)
    metrics = laplacian(topo)
    doc = {
        "pattern": pattern.to_dict(),
        "alive": list(topo.alive),
        "head": topo.head,
        "adjacency": topo.adjacency.tolist(),
        "degrees": metrics.degrees.tolist(),
        "molloy_reed": metrics.molloy_reed,
        "spanning_tree": has_spanning_tree(topo),
    }
    print(json.dumps(doc))
    return 0


def cmd_list(args) -> int:
    for name, spec in builtin_scenarios().items():
        print(f"{name}\t{spec.n_missiles} missiles\t{spec.pattern.kind.value}\t{spec.episode_length:g}s")
    return 0


def cmd_export(args) -> int:
    spec = get_scenario(args.name)
    text = spec.to_toml()
    if args.out:
        atomic_write_text(args.out, text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_ablation(args) -> int:
    cfg = resolve_run_config(args)
    spec = resolve_scenario(cfg.scenario)
    seeds = [int(s) for s in args.seeds.split(",")]
    report = constraint_ablation(spec, seeds, cfg.iterations, args.level, evolution=cfg.evolution)
    out = out_dir(args, f"ablation/{spec.name}")
    write_json(out / "ablation.json", report)
    print(json.dumps(report["summary"]))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nces-formation", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    def run_flags(sp):
        sp.add_argument("--scenario", help="built-in scenario name or path to a scenario TOML file")
        sp.add_argument("--config", help="run configuration TOML")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--iters", type=int)
        sp.add_argument("--pop-init", type=int)
        sp.add_argument("--no-constraint", action="store_true")
        sp.add_argument("--constraint-agg", choices=["min", "max"])
        sp.add_argument("--out")

    sp = sub.add_parser("train", help="train per-agent controllers with NCES")
    run_flags(sp)
    sp.add_argument("-v", "--verbose", action="store_true")
    sp.set_defaults(func=cmd_train)

    sp = sub.add_parser("eval", help="fly one episode with trained parameters and write traces")
    sp.add_argument("--params", required=True)
    sp.add_argument("--scenario")
    sp.add_argument("--seed", type=int)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_eval)

    sp = sub.add_parser("plot", help="render SVG charts from a trace directory")
    sp.add_argument("trace_dir")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_plot)

    sp = sub.add_parser("inspect-topology", help="print adjacency, degrees, kappa and connectivity as JSON")
    sp.add_argument("--scenario")
    sp.add_argument("--kind", choices=["polygon", "line"], default="polygon")
    sp.add_argument("--n", type=int, default=5)
    sp.add_argument("--alpha-p", type=float, default=0.0)
    sp.add_argument("--l-f", type=float, default=0.5)
    sp.add_argument("--fail", default="", help="comma-separated node ids to fail")
    sp.set_defaults(func=cmd_inspect)

    sp = sub.add_parser("list-scenarios", help="list built-in scenarios")
    sp.set_defaults(func=cmd_list)

    sp = sub.add_parser("export-scenario", help="write a built-in scenario as TOML")
    sp.add_argument("name")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_export)

    sp = sub.add_parser("ablation", help="compare training with and without the policy constraint")
    run_flags(sp)
    sp.add_argument("--seeds", default="1,2,3")
    sp.add_argument("--level", type=float, default=39.0, help="objective level counted as converged")
    sp.set_defaults(func=cmd_ablation)
    return p


EXPECTED_ERRORS = (ConfigError, ScenarioError, LayoutMismatch, TraceFormatError, DivergenceError,
                   SwarmCollapse, FileNotFoundError, ValueError)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except EXPECTED_ERRORS as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
