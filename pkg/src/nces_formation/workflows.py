"""End-to-end runs: train a scenario, evaluate a policy, compare with/without the constraint."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .optimizer import ConstraintConfig, EvolutionConfig, SwarmProblem, TrainResult, train
from .rollout import EpisodeTrace, run_episode
from .scenarios import ScenarioSpec

TAIL_SECONDS = 10.0


@dataclass
class RunConfig:
    """Fully resolved settings of one training run."""

    scenario: str = "basic-linear"
    seed: int = 0
    iterations: int = 2000
    evolution: EvolutionConfig = field(default_factory=EvolutionConfig)
    constraint: ConstraintConfig = field(default_factory=ConstraintConfig)
    monitor_every: int = 10
    plateau: int | None = None

    def to_dict(self) -> dict:
        d = asdict(self)
        d["evolution"] = asdict(self.evolution)
        d["constraint"] = asdict(self.constraint)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        d = dict(d)
        evo = EvolutionConfig(**d.pop("evolution", {}))
        con = ConstraintConfig(**d.pop("constraint", {}))
        return cls(evolution=evo, constraint=con, **d)


def tail_errors(trace: EpisodeTrace, seconds: float = TAIL_SECONDS) -> dict:
    """Mean and max resultant error of alive agents over the final ``seconds``."""
    res = trace.resultant()
    alive = np.asarray(trace.alive)
    k = min(len(trace), int(round(seconds / trace.tau)))
    tail = res[-k:][alive[-k:]]
    return {"mean_tail_error": float(tail.mean()), "max_tail_error": float(tail.max())}


def objective(spec: ScenarioSpec, params: np.ndarray) -> float:
    """Mean per-agent return of the unperturbed policy, constraint off."""
    _, returns = run_episode(spec, params)
    return float(returns.mean())


def train_scenario(spec: ScenarioSpec, cfg: RunConfig, on_record=None) -> TrainResult:
    """Train with checkpoint selection by the objective of the unperturbed policy."""
    evo = replace(cfg.evolution, seed=cfg.seed)
    problem = SwarmProblem(spec, cfg.constraint, seed=cfg.seed)
    return train(
        problem, evo, cfg.iterations,
        monitor=lambda p, t: objective(spec, p),
        monitor_every=cfg.monitor_every,
        plateau=cfg.plateau,
        on_record=on_record,
    )


def selected_params(result: TrainResult) -> np.ndarray:
    return result.best_params if result.best_params is not None else result.params


def evaluate(spec: ScenarioSpec, params) -> tuple[EpisodeTrace, dict]:
    trace, returns = run_episode(spec, np.asarray(params))
    summary = {"returns": returns.tolist(), "mean_return": float(returns.mean()), "steps": len(trace)}
    summary.update(tail_errors(trace))
    return trace, summary


def iterations_to_level(log: list[dict], level: float, key: str = "eval_score") -> int | None:
    for rec in log:
        if key in rec and rec[key] >= level:
            return rec["iteration"]
    return None


def constraint_ablation(spec: ScenarioSpec, seeds, iterations: int, level: float,
                        aggregations=("min", "max"), evolution: EvolutionConfig | None = None) -> dict:
    """Train with the policy constraint (each aggregation) and without it, per seed.

    Reports iterations until the unperturbed objective first reaches
    ``level`` and the early-termination rate over training.
    """
    evolution = evolution or EvolutionConfig()
    variants = {"off": ConstraintConfig(enabled=False)}
    for agg in aggregations:
        variants[agg] = ConstraintConfig(aggregation=agg)
    rows = []
    for seed in seeds:
        for name, con in variants.items():
            cfg = RunConfig(spec.name, seed, iterations, evolution, con)
            res = train_scenario(spec, cfg)
            rates = [r["early_termination_rate"] for r in res.log]
            rows.append({
                "seed": seed,
                "constraint": name,
                "iterations_to_level": iterations_to_level(res.log, level),
                "early_termination_rate": float(np.mean(rates)),
                "best_objective": res.best_score,
            })
    summary = {}
    for name in variants:
        its = [r["iterations_to_level"] for r in rows if r["constraint"] == name]
        hit = [i for i in its if i is not None]
        summary[name] = {
            "reached": len(hit),
            "runs": len(its),
            "mean_iterations_to_level": float(np.mean(hit)) if hit else None,
            "mean_early_termination_rate": float(np.mean([r["early_termination_rate"] for r in rows
                                                          if r["constraint"] == name])),
        }
    if summary["off"]["mean_iterations_to_level"]:
        base = summary["off"]["mean_iterations_to_level"]
        for name in aggregations:
            its = summary[name]["mean_iterations_to_level"]
            summary[name]["speedup_vs_off"] = None if its is None else (base - its) / base
    return {"scenario": spec.name, "level": level, "iterations": iterations, "runs": rows, "summary": summary}
