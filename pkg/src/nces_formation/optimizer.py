"""Natural co-evolutionary strategy (NCES).

Every agent owns a parameter vector. Each iteration all agents are perturbed
together, m times; every perturbed swarm is flown once and each agent's
gradient weights its own perturbations by its fitness and by the Gaussian
density of its neighbours' perturbations in that same sample. The
population size then adapts to the length of the evolution path.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Protocol, Sequence

import numpy as np

from .seeding import rng as seeded

log = logging.getLogger(__name__)


class DivergenceError(FloatingPointError):
    """Gradient or fitness became non-finite."""


def initial_population(s: int) -> int:
    return int(round(10 + 5 * math.log(s)))


@dataclass(frozen=True)
class EvolutionConfig:
    eta_alpha: float = 0.02
    sigma: float = 0.2
    beta: float = 0.84
    seed: int = 0
    pop_init: int | None = None
    # "center" subtracts the population mean; "zscore" also divides by the std
    fitness_shaping: str = "zscore"
    # "density": weight samples by neighbour perturbation density; "none": plain NES
    neighbor_weighting: str = "density"
    init_scale: float = 0.1

    def __post_init__(self):
        if not 0 < self.beta < 1:
            raise ValueError("beta must lie in (0, 1)")
        if not self.sigma > 0 or not self.eta_alpha > 0:
            raise ValueError("sigma and eta_alpha must be positive")
        if self.fitness_shaping not in ("center", "zscore"):
            raise ValueError(f"unknown fitness shaping {self.fitness_shaping!r}")
        if self.neighbor_weighting not in ("density", "none"):
            raise ValueError(f"unknown neighbour weighting {self.neighbor_weighting!r}")

    def pop_bounds(self, s: int) -> tuple[int, int]:
        p0 = self.pop_init if self.pop_init is not None else initial_population(s)
        return p0, 4 * p0


@dataclass(frozen=True)
class ConstraintConfig:
    delta_s: float = 0.2
    enabled: bool = True
    aggregation: str = "min"

    def __post_init__(self):
        if self.aggregation not in ("min", "max"):
            raise ValueError("aggregation must be 'min' or 'max'")
        if not self.delta_s > 0:
            raise ValueError("delta_s must be positive")

    def check_bound(self, max_neighbors: int, tau: float, v_max: float):
        bound = (2 * max_neighbors + 1) * tau * v_max
        if not self.delta_s < bound:
            raise ValueError(f"delta_s={self.delta_s} must be below (2l+1)*tau*V_max = {bound:.4g}")

    @property
    def rollout_aggregation(self) -> str:
        return self.aggregation if self.enabled else "off"


@dataclass
class EvolutionState:
    params: np.ndarray          # (N, s)
    pop_size: float
    path_prev: float | None = None
    iteration: int = 0


def sample_population(rng: np.random.Generator, n_agents: int, s: int, m: int, sigma: float) -> np.ndarray:
    """(m, N, s) i.i.d. N(0, sigma^2) perturbations."""
    if m < 2:
        raise ValueError("population must hold at least two samples")
    return rng.standard_normal((m, n_agents, s)) * sigma


def neighbor_log_density(neighbor_eps: np.ndarray, sigma: float) -> np.ndarray:
    """Sum over neighbours of log exp(-|eps_c|^2 / 2 sigma^2); input (m, C, s)."""
    if neighbor_eps.shape[1] == 0:
        return np.zeros(neighbor_eps.shape[0])
    return -(neighbor_eps ** 2).sum(axis=(1, 2)) / (2.0 * sigma ** 2)


def natural_gradient(
    fitnesses: np.ndarray,
    perturbations: np.ndarray,
    neighbor_perturbations: np.ndarray | None,
    sigma: float,
    shaping: str = "center",
) -> np.ndarray:
    """Gradient estimate for one agent.

    ``fitnesses`` (m,), ``perturbations`` (m, s), ``neighbor_perturbations``
    (m, C, s) or None. The neighbour density weights are normalised to mean
    one across the population.
    """
    f = np.asarray(fitnesses, dtype=float)
    eps = np.asarray(perturbations, dtype=float)
    m = f.shape[0]
    if not np.isfinite(f).all():
        raise DivergenceError("non-finite fitness in population")
    f = f - f.mean()
    sd = f.std()
    if sd == 0.0 or sd < 1e-14 * max(1.0, float(np.abs(fitnesses).max())):
        return np.zeros(eps.shape[1])
    if shaping == "zscore":
        f = f / sd
    if neighbor_perturbations is not None and neighbor_perturbations.shape[1] > 0:
        logw = neighbor_log_density(neighbor_perturbations, sigma)
        w = np.exp(logw - logw.max())
        w *= m / w.sum()
        f = f * w
    return f @ eps / (m * sigma ** 2)


def update_params(state: EvolutionState, gradients: np.ndarray, eta_alpha: float) -> EvolutionState:
    if not np.isfinite(gradients).all():
        raise DivergenceError(f"non-finite gradient at iteration {state.iteration + 1}")
    return EvolutionState(state.params + eta_alpha * gradients, state.pop_size, state.path_prev, state.iteration + 1)


def evolution_path(before: np.ndarray, after: np.ndarray, sigma: float) -> float:
    d = np.asarray(after) - np.asarray(before)
    return float((d * d).sum() / sigma ** 2)


def adapt_population(pop_prev: float, rho_prev: float | None, rho_now: float,
                     pop_min: float, pop_max: float, beta: float) -> float:
    """Non-decreasing population update driven by the evolution-path ratio."""
    if rho_prev is None:
        return float(pop_min)
    if rho_now <= 0.0:
        log.info("evolution path stalled (rho=0); keeping population %.2f", pop_prev)
        return pop_prev
    grown = pop_prev * (beta + (1.0 - beta) * rho_prev / rho_now)
    return float(min(max(max(grown, pop_prev), pop_min), pop_max))


def constraint_check(delta_e: np.ndarray, delta_s: float, aggregation: str = "min") -> int:
    """Termination indicator from the 3 x n table of predicted error growth."""
    delta_e = np.asarray(delta_e, dtype=float)
    red = delta_e.min() if aggregation == "min" else delta_e.max()
    return int(red > delta_s)


def predicted_deltas(e_r: np.ndarray, e_rate: np.ndarray, tau: float) -> np.ndarray:
    """|e + de*tau| - |e|, elementwise."""
    e_r = np.asarray(e_r, dtype=float)
    return np.abs(e_r + np.asarray(e_rate) * tau) - np.abs(e_r)


# -- training loop -----------------------------------------------------------

class Problem(Protocol):
    n_agents: int
    size: int
    neighbors: Sequence[Sequence[int]]  # 0-based agent indices

    def evaluate(self, params: np.ndarray, iteration: int) -> "Evaluation": ...


@dataclass
class Evaluation:
    fitness: np.ndarray               # (m, N)
    terminated: np.ndarray | None = None  # (m,)


@dataclass
class TrainResult:
    params: np.ndarray
    log: list[dict]
    best_params: np.ndarray | None = None
    best_score: float | None = None
    stop_reason: str = "budget"


def train(
    problem: Problem,
    config: EvolutionConfig,
    iterations: int,
    *,
    init_params: np.ndarray | None = None,
    monitor: Callable[[np.ndarray, int], float] | None = None,
    monitor_every: int = 10,
    plateau: int | None = None,
    target_score: float | None = None,
    on_record: Callable[[dict], None] | None = None,
) -> TrainResult:
    """Run NCES for at most ``iterations`` iterations.

    ``monitor(params, t)`` scores the unperturbed parameters every
    ``monitor_every`` iterations; training stops once it reaches
    ``target_score`` or has not improved for ``plateau`` iterations.
    """
    n, s = problem.n_agents, problem.size
    pop_min, pop_max = config.pop_bounds(s)
    if init_params is None:
        init_params = seeded(config.seed, "params").standard_normal((n, s)) * config.init_scale
    state = EvolutionState(np.array(init_params, dtype=float), float(pop_min))
    sampler = seeded(config.seed, "sampler")
    nbrs = [list(nb) for nb in problem.neighbors]
    records: list[dict] = []
    best_params, best_score, best_iter = None, -np.inf, 0
    stop = "budget"

    for t in range(1, iterations + 1):
        m = int(round(state.pop_size))
        eps = sample_population(sampler, n, s, m, config.sigma)
        ev = problem.evaluate(state.params[None] + eps, t)
        fit = np.asarray(ev.fitness, dtype=float)
        if not np.isfinite(fit).all():
            raise DivergenceError(f"non-finite fitness at iteration {t}")

        grads = np.empty((n, s))
        for i in range(n):
            nb = eps[:, nbrs[i], :] if (nbrs[i] and config.neighbor_weighting == "density") else None
            grads[i] = natural_gradient(fit[:, i], eps[:, i, :], nb, config.sigma, config.fitness_shaping)

        before = state.params
        state = update_params(state, grads, config.eta_alpha)
        rho = evolution_path(before, state.params, config.sigma)
        new_pop = adapt_population(state.pop_size, state.path_prev, rho, pop_min, pop_max, config.beta)
        state.pop_size = new_pop
        state.path_prev = rho if rho > 0 else state.path_prev

        rec = {
            "iteration": t,
            "pop_size": m,
            "next_pop_size": int(round(new_pop)),
            "mean_fitness": float(fit.mean()),
            "max_fitness": float(fit.sum(axis=1).max() / n),
            "rho": rho,
            "grad_norm": float(np.linalg.norm(grads)),
            "early_termination_rate": float(np.mean(ev.terminated)) if ev.terminated is not None else 0.0,
        }
        if monitor is not None and (t % monitor_every == 0 or t == iterations):
            score = float(monitor(state.params, t))
            rec["eval_score"] = score
            if score > best_score:
                best_score, best_params, best_iter = score, state.params.copy(), t
        records.append(rec)
        if on_record is not None:
            on_record(rec)
        if "eval_score" in rec:
            if target_score is not None and rec["eval_score"] >= target_score:
                stop = "target"
                break
            if plateau is not None and t - best_iter >= plateau:
                stop = "plateau"
                break

    return TrainResult(state.params, records, best_params, None if best_params is None else best_score, stop)


# -- problems ----------------------------------------------------------------

@dataclass
class QuadraticProblem:
    """Decoupled bowls f_i = -|theta_i - theta_i*|^2 (optimizer oracle)."""

    optimum: np.ndarray  # (N, s)
    neighbors: Sequence[Sequence[int]] = None

    def __post_init__(self):
        self.optimum = np.asarray(self.optimum, dtype=float)
        if self.neighbors is None:
            self.neighbors = [[] for _ in range(self.n_agents)]

    @property
    def n_agents(self) -> int:
        return self.optimum.shape[0]

    @property
    def size(self) -> int:
        return self.optimum.shape[1]

    def evaluate(self, params, iteration):
        return Evaluation(-((params - self.optimum[None]) ** 2).sum(axis=-1))


@dataclass
class SwarmProblem:
    """Per-agent episode return of a formation scenario."""

    spec: "object"
    constraint: ConstraintConfig = field(default_factory=ConstraintConfig)
    seed: int = 0
    # divide returns by the episode length so fitness lies in (0, 1]
    normalize: bool = False

    def __post_init__(self):
        from .policy import Layout
        from .topology import build_topology, elect_head

        self.layout = Layout.for_scenario(self.spec.with_switch_signal)
        ids = self.spec.pattern.ids
        topo = build_topology(self.spec.pattern, ids, elect_head(ids))
        self.neighbors = [[j - 1 for j in topo.neighbors(i)] if i in topo.alive else []
                          for i in range(1, self.spec.n_missiles + 1)]
        if self.constraint.enabled:
            c = self.spec.constraints
            self.constraint.check_bound(max(len(nb) for nb in self.neighbors), c.tau, c.v_max)

    @property
    def n_agents(self) -> int:
        return self.spec.n_missiles

    @property
    def size(self) -> int:
        return self.layout.size

    def init_states(self, iteration: int):
        from .seeding import rng as seeded_rng

        if not self.spec.init.random:
            return None
        return self.spec.initial_states(seeded_rng(self.seed, "init", iteration))

    def evaluate(self, params, iteration):
        from .rollout import simulate

        res = simulate(self.spec, params, aggregation=self.constraint.rollout_aggregation,
                       delta_s=self.constraint.delta_s, init_states=self.init_states(iteration))
        fit = res.returns / self.spec.episode_length if self.normalize else res.returns
        return Evaluation(fit, res.terminated)


def write_log(records: list[dict], path):
    from .io import atomic_write_text

    atomic_write_text(path, "".join(json.dumps(r, sort_keys=True) + "\n" for r in records))


def config_dict(config: EvolutionConfig) -> dict:
    return asdict(config)
