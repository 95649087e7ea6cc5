"""Batched kernels against the scalar reference path, for every available backend."""

import numpy as np
import pytest

from nces_formation import kernel
from nces_formation.dynamics import MissileState, SystemConstraints, TargetState, saturate, step_missile
from nces_formation.error_model import CostWeights, fitness_step, rotate_error, tracking_error, error_rate
from nces_formation.formation import polygon_pattern
from nces_formation.optimizer import constraint_check, predicted_deltas
from nces_formation.policy import Layout, Observation, forward, unflatten
from nces_formation.rollout import _tables, split_params
from nces_formation.topology import build_topology, fail_nodes

from conftest import random_world, views

C = SystemConstraints()
W = CostWeights()


def make_batch(rng, m, topo, pattern, n_in=5):
    n = pattern.n
    layout = Layout(n_in)
    params = rng.standard_normal((m, n, layout.size)) * 0.5
    worlds = [random_world(rng, range(1, n + 1), C) for _ in range(m)]
    state = np.array([[[w[0][i].x, w[0][i].y, w[0][i].heading, w[0][i].speed] for i in range(1, n + 1)]
                      for w in worlds])
    tgt, tc = worlds[0][2], worlds[0][3]
    nbr, zeta = _tables(topo, n)
    alive = np.zeros(n, dtype=np.int8)
    alive[[i - 1 for i in topo.alive]] = 1
    ts = rng.integers(0, 2, m).astype(float)
    return dict(
        params=params, layout=layout, state=state, target=tgt, tcmd=tc, alive=alive,
        nbr=np.ascontiguousarray(np.broadcast_to(nbr, (m,) + nbr.shape)),
        zeta=np.ascontiguousarray(np.broadcast_to(zeta, (m, n))),
        offsets=np.ascontiguousarray(np.broadcast_to(pattern.offsets, (m, n, 2))),
        ts=ts,
    )


def run_kernel(step_batch, b, agg=-1, delta_s=0.2, active=None):
    m, n = b["state"].shape[:2]
    w1, w2 = split_params(b["params"], b["layout"])
    state = b["state"].copy()
    err, cmd, j = np.zeros((m, n, 3)), np.zeros((m, n, 2)), np.zeros((m, n))
    st = np.zeros(m, dtype=np.int8)
    act = np.ones(m, dtype=np.int8) if active is None else active
    t, tc = b["target"], b["tcmd"]
    step_batch(state, b["alive"], b["offsets"], b["nbr"], b["zeta"], np.array([t.x, t.y, t.heading]),
               np.array([tc.v_r, tc.w_r]), w1, w2, b["ts"], act, (C.tau, C.v_min, C.v_max, C.a_vmax, C.a_lmax),
               W.as_array(), delta_s, agg, err, cmd, j, st)
    return state, err, cmd, j, st


def reference(b, r, topo, pattern, agg, delta_s):
    """Scalar path for rollout ``r``: errors, commands, fitness, termination flag, next state."""
    s = b["state"][r]
    states = {i: MissileState(*s[i - 1]) for i in topo.alive}
    vw = views(topo)
    errs, cmds, fit = {}, {}, {}
    for i in topo.alive:
        e = rotate_error(tracking_error(i, states, pattern, vw[i], b["target"]), states[i].heading)
        errs[i] = e
        p = unflatten(b["params"][r, i - 1], b["layout"])
        obs = Observation(states[i].heading, states[i].speed, e, b["ts"][r] if b["layout"].n_in == 6 else None)
        cmds[i] = forward(p, obs, C)
        fit[i] = fitness_step(e, W)
    flag = 0
    if agg >= 0:
        deltas = np.array([predicted_deltas(errs[i].as_array(),
                                            error_rate(i, errs[i], states, cmds, vw[i], b["target"], b["tcmd"], C),
                                            C.tau) for i in topo.alive])
        flag = constraint_check(deltas, delta_s, "min" if agg == 0 else "max")
    nxt = {i: states[i] if flag else step_missile(states[i], saturate(cmds[i].a_v, cmds[i].a_l, C), C)
           for i in topo.alive}
    return errs, cmds, fit, flag, nxt


@pytest.mark.parametrize("agg,delta_s", [(-1, 0.2), (0, 0.2), (1, 0.2), (1, 0.05), (0, -0.5)])
@pytest.mark.parametrize("n_in", [5, 6])
def test_kernel_matches_scalar(step_batch, agg, delta_s, n_in):
    rng = np.random.default_rng(42 + n_in)
    pattern = polygon_pattern(5, 0.2, 0.5)
    topo = build_topology(pattern, pattern.ids, 1)
    b = make_batch(rng, 6, topo, pattern, n_in)
    state, err, cmd, j, st = run_kernel(step_batch, b, agg, delta_s)
    for r in range(6):
        errs, cmds, fit, flag, nxt = reference(b, r, topo, pattern, agg, delta_s)
        assert st[r] == flag
        for i in topo.alive:
            assert err[r, i - 1] == pytest.approx(errs[i].as_array(), abs=1e-12)
            assert cmd[r, i - 1] == pytest.approx([cmds[i].a_v, cmds[i].a_l], abs=1e-12)
            assert j[r, i - 1] == pytest.approx(fit[i], abs=1e-12)
            n_i = nxt[i]
            assert state[r, i - 1] == pytest.approx([n_i.x, n_i.y, n_i.heading, n_i.speed], abs=1e-12)


def test_failed_nodes_frozen_and_silent(step_batch):
    rng = np.random.default_rng(3)
    pattern = polygon_pattern(6, 0.0, 0.5)
    topo = fail_nodes(build_topology(pattern, pattern.ids, 1), {1, 4}, pattern)
    b = make_batch(rng, 3, topo, pattern)
    state, err, cmd, j, st = run_kernel(step_batch, b)
    for dead in (0, 3):
        assert np.array_equal(state[:, dead], b["state"][:, dead])
        assert np.all(err[:, dead] == 0) and np.all(j[:, dead] == 0)
    for r in range(3):
        errs, cmds, fit, flag, nxt = reference(b, r, topo, pattern, -1, 0.2)
        for i in topo.alive:
            assert err[r, i - 1] == pytest.approx(errs[i].as_array(), abs=1e-12)


def test_inactive_rollouts_untouched(step_batch):
    rng = np.random.default_rng(5)
    pattern = polygon_pattern(5, 0.0, 0.5)
    b = make_batch(rng, 4, build_topology(pattern, pattern.ids, 1), pattern)
    active = np.array([1, 0, 1, 0], dtype=np.int8)
    state, err, cmd, j, st = run_kernel(step_batch, b, agg=0, delta_s=-1.0, active=active)
    assert st.tolist() == [1, 0, 1, 0]
    assert np.array_equal(state, b["state"])


def test_backends_agree_on_rollout():
    from nces_formation import _kernel_py
    from nces_formation.rollout import simulate
    from nces_formation.scenarios import get_scenario
    from unittest import mock

    if kernel.BACKEND != "cython":
        pytest.skip("compiled kernel not built")
    spec = get_scenario("switch-formation")
    params = np.random.default_rng(0).standard_normal((3, 5, 128)) * 0.1
    fast = simulate(spec, params, aggregation="min")
    with mock.patch.object(kernel, "step_batch", _kernel_py.step_batch):
        slow = simulate(spec, params, aggregation="min")
    assert np.allclose(fast.returns, slow.returns, atol=1e-8)
    assert np.array_equal(fast.steps, slow.steps)
