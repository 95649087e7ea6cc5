"""Batched episode driver around the compiled/NumPy step kernel.

One call simulates ``m`` independent copies of a scenario, each flown by its
own set of per-agent parameters. Topology rebuilds, node failures and
formation switches are handled here between kernel steps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernel
from .dynamics import check_target_command, wrap_angle
from .policy import Layout, LayoutMismatch
from .scenarios import ScenarioSpec, switch_signal
from .topology import Topology, build_topology, elect_head, fail_nodes

AGG_CODES = {"off": -1, "min": 0, "max": 1}


class NonFiniteState(FloatingPointError):
    def __init__(self, msg, dump):
        super().__init__(msg)
        self.dump = dump


@dataclass
class EpisodeTrace:
    """Per-step record of rollout 0 of a batch."""

    tau: float
    n_agents: int
    times: list = field(default_factory=list)
    states: list = field(default_factory=list)   # (N, 4) before the step
    errors: list = field(default_factory=list)   # (N, 3) rotated errors
    commands: list = field(default_factory=list)  # (N, 2)
    fitness: list = field(default_factory=list)  # (N,)
    alive: list = field(default_factory=list)    # (N,) bool
    target: list = field(default_factory=list)   # (3,)
    ts: list = field(default_factory=list)
    events: list = field(default_factory=list)

    def __len__(self):
        return len(self.times)

    def event(self, time, kind, **payload):
        self.events.append({"time": round(time, 10), "kind": kind, "payload": payload})

    def resultant(self) -> np.ndarray:
        return np.linalg.norm(np.asarray(self.errors), axis=-1)


@dataclass
class RolloutResult:
    returns: np.ndarray        # (m, N) sum of J * tau
    steps: np.ndarray          # (m,) steps simulated
    terminated: np.ndarray     # (m,) early termination by the policy constraint
    trace: EpisodeTrace | None = None


def _tables(topo: Topology, n: int, kmax: int = 2):
    """Neighbour slots (-1 padded) and target-visibility flags for all N slots."""
    nbr = np.full((n, kmax), -1, dtype=np.int64)
    zeta = np.zeros(n, dtype=np.int8)
    for node in topo.alive:
        nb = topo.neighbors(node)
        if len(nb) > kmax:
            raise ValueError(f"node {node} has {len(nb)} neighbours, table holds {kmax}")
        nbr[node - 1, : len(nb)] = [j - 1 for j in nb]
    zeta[topo.head - 1] = 1
    return nbr, zeta


def split_params(params: np.ndarray, layout: Layout):
    """(m, N, s) flat parameters -> contiguous W1 (m,N,H,I) and W2 (m,N,O,H)."""
    params = np.asarray(params, dtype=float)
    if params.shape[-1] != layout.size:
        raise LayoutMismatch(f"parameter vectors have length {params.shape[-1]}, layout needs {layout.size}")
    m, n = params.shape[:2]
    k = layout.hidden * layout.n_in
    w1 = np.ascontiguousarray(params[..., :k].reshape(m, n, layout.hidden, layout.n_in))
    w2 = np.ascontiguousarray(params[..., k:].reshape(m, n, layout.n_out, layout.hidden))
    return w1, w2


def simulate(
    spec: ScenarioSpec,
    params: np.ndarray,
    *,
    aggregation: str = "off",
    delta_s: float = 0.2,
    init_states: np.ndarray | None = None,
    record: bool = False,
) -> RolloutResult:
    """Fly ``m`` copies of ``spec``; ``params`` is (m, N, s).

    ``aggregation`` is the early-termination rule ('off', 'min', 'max').
    ``init_states`` is an (N, 4) array; defaults to the scenario seed's draw.
    """
    from .seeding import rng as seeded

    c = spec.constraints
    n = spec.n_missiles
    params = np.asarray(params, dtype=float)
    if params.ndim != 3 or params.shape[1] != n:
        raise LayoutMismatch(f"expected (m, {n}, s) parameters, got {params.shape}")
    m = params.shape[0]
    layout = Layout.for_scenario(spec.with_switch_signal)
    w1, w2 = split_params(params, layout)

    if init_states is None:
        init_states = spec.initial_states(seeded(spec.seed, "init") if spec.init.random else None)
    state = np.ascontiguousarray(np.broadcast_to(init_states, (m, n, 4)), dtype=float).copy()
    target = np.array([spec.target_start.x, spec.target_start.y, spec.target_start.heading])

    patterns = spec.patterns()
    offs_table = np.stack([p.offsets for p in patterns])  # (P, N, 2)
    alive_ids = list(spec.pattern.ids)
    alive = np.zeros(n, dtype=np.int8)
    alive[[i - 1 for i in alive_ids]] = 1
    head = elect_head(alive_ids)
    topos = [build_topology(p, alive_ids, head) for p in patterns]
    tabs = [_tables(t, n) for t in topos]
    nbr_table = np.stack([t[0] for t in tabs])
    zeta_table = np.stack([t[1] for t in tabs])

    pidx = np.zeros(m, dtype=np.int64)
    offsets = np.ascontiguousarray(offs_table[pidx])
    nbr = np.ascontiguousarray(nbr_table[pidx])
    zeta = np.ascontiguousarray(zeta_table[pidx])
    ts = np.zeros(m)
    active = np.ones(m, dtype=np.int8)

    limits = (c.tau, c.v_min, c.v_max, c.a_vmax, c.a_lmax)
    kdiag = spec.weights.as_array()
    agg = AGG_CODES[aggregation]
    err = np.zeros((m, n, 3))
    cmd = np.zeros((m, n, 2))
    jstep = np.zeros((m, n))
    st = np.zeros(m, dtype=np.int8)
    returns = np.zeros((m, n))
    steps = np.zeros(m, dtype=np.int64)
    terminated = np.zeros(m, dtype=bool)

    fail_at = {int(round(t / c.tau)): set(nodes) for t, nodes in spec.failures}
    trace = EpisodeTrace(c.tau, n) if record else None
    if record:
        trace.event(0.0, "topology", head=head, alive=list(topos[0].alive), adjacency=topos[0].adjacency.tolist())

    for k in range(spec.n_steps):
        t = k * c.tau
        if k in fail_at:
            failed = fail_at[k] & set(alive_ids)
            if failed:
                old_head = head
                topo0 = fail_nodes(topos[0], failed, patterns[0])
                alive_ids = list(topo0.alive)
                head = topo0.head
                alive[:] = 0
                alive[[i - 1 for i in alive_ids]] = 1
                topos = [topo0] + [build_topology(p, alive_ids, head) for p in patterns[1:]]
                tabs = [_tables(tp, n) for tp in topos]
                nbr_table = np.stack([tb[0] for tb in tabs])
                zeta_table = np.stack([tb[1] for tb in tabs])
                nbr = np.ascontiguousarray(nbr_table[pidx])
                zeta = np.ascontiguousarray(zeta_table[pidx])
                if record:
                    trace.event(t, "failure", nodes=sorted(failed), step=k)
                    if head != old_head:
                        trace.event(t, "head_change", old=old_head, new=head, step=k)
                    trace.event(t, "topology", head=head, alive=alive_ids, adjacency=topo0.adjacency.tolist())

        if spec.obstacles:
            new_ts, act = switch_signal(state[:, head - 1, :2], spec.obstacles, spec.d_c, spec.safe_distance)
            new_pidx = act + 1
            if not np.array_equal(new_pidx, pidx):
                if record and new_pidx[0] != pidx[0]:
                    trace.event(t, "switch", ts=int(new_ts[0]), pattern=int(new_pidx[0]), step=k)
                pidx = new_pidx
                offsets = np.ascontiguousarray(offs_table[pidx])
                nbr = np.ascontiguousarray(nbr_table[pidx])
                zeta = np.ascontiguousarray(zeta_table[pidx])
            ts = np.ascontiguousarray(new_ts)

        tc = spec.target_program.command(t)
        check_target_command(tc, c)
        tcmd = np.array([tc.v_r, tc.w_r])
        if record:
            trace.times.append(t)
            trace.states.append(state[0].copy())
            trace.target.append(target.copy())
            trace.alive.append(alive.astype(bool))
            trace.ts.append(float(ts[0]))

        kernel.step_batch(state, alive, offsets, nbr, zeta, target, tcmd, w1, w2, ts, active,
                          limits, kdiag, delta_s, agg, err, cmd, jstep, st)

        returns += jstep * c.tau
        steps += active
        if not np.isfinite(state).all():
            bad = np.flatnonzero(~np.isfinite(state).all(axis=(1, 2)))
            raise NonFiniteState(f"non-finite state at t={t:.1f}s in rollouts {bad.tolist()}",
                                 {"step": k, "state": state[bad].tolist()})
        if record:
            trace.errors.append(err[0].copy())
            trace.commands.append(cmd[0].copy())
            trace.fitness.append(jstep[0].copy())
            if spec.obstacles:
                _wall_contacts(trace, spec, trace.states[-1], state[0], alive, t)
        if st.any():
            hit = st.astype(bool)
            terminated |= hit
            active[hit] = 0
            if record and hit[0]:
                trace.event(t, "early_termination", step=k)
            if not active.any():
                break

        target[0] += tc.v_r * math.cos(target[2]) * c.tau
        target[1] += tc.v_r * math.sin(target[2]) * c.tau
        target[2] = wrap_angle(target[2] + tc.w_r * c.tau)

    return RolloutResult(returns, steps, terminated, trace)


def _wall_contacts(trace, spec, before, after, alive, t):
    for ob in spec.obstacles:
        a0 = ob.along(before[:, :2]) - ob.position
        a1 = ob.along(after[:, :2]) - ob.position
        crossed = (a0 < 0) & (a1 >= 0) & (alive != 0)
        for i in np.flatnonzero(crossed):
            lat = float(ob.lateral(after[i, :2]) - ob.center)
            if abs(lat) > ob.gap / 2 and abs(lat) <= ob.gap / 2 + ob.length:
                trace.event(t, "wall_contact", node=int(i + 1), wall=float(ob.position), lateral=lat)


def run_episode(spec: ScenarioSpec, agent_params, *, aggregation: str = "off", delta_s: float = 0.2,
                init_states=None) -> tuple[EpisodeTrace, np.ndarray]:
    """Single traced episode; returns the trace and per-agent returns."""
    p = np.asarray(agent_params, dtype=float)[None]
    res = simulate(spec, p, aggregation=aggregation, delta_s=delta_s, init_states=init_states, record=True)
    return res.trace, res.returns[0]
