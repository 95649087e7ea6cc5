import math

import numpy as np
import pytest

from nces_formation.dynamics import ActuationCommand, MissileState, SystemConstraints, TargetCommand, TargetState
from nces_formation.error_model import (CostWeights, ErrorVector, IsolatedNodeWarning, NeighborView, error_rate,
                                        fitness_step, resultant_error, rotate_error, tracking_error)
from nces_formation.formation import polygon_pattern
from nces_formation.topology import build_topology

from conftest import views

PAT = polygon_pattern(5, 0.0, 0.5)
C = SystemConstraints()


def formation_states(center=(0.0, 0.0), heading=0.0, speed=0.5):
    return {i: MissileState(center[0] + PAT.offset(i)[0], center[1] + PAT.offset(i)[1], heading, speed)
            for i in PAT.ids}


def test_zero_error_in_formation():
    states = formation_states((3.0, -1.0), 0.7)
    target = TargetState(3.0, -1.0, 0.7)
    topo = build_topology(PAT, PAT.ids, 1)
    for node, view in views(topo).items():
        assert np.allclose(tracking_error(node, states, PAT, view, target), 0.0)


def test_head_error_against_target():
    states = formation_states()
    target = TargetState(1.0, 0.0, 0.0)
    e = tracking_error(1, states, PAT, NeighborView((), 1), target)
    assert e == pytest.approx([1.0, 0.0, 0.0])


def test_heading_terms_wrapped_individually():
    states = {1: MissileState(0, 0, math.pi - 0.1, 0.5), 2: MissileState(0, 0, -math.pi + 0.1, 0.5)}
    pat = polygon_pattern(2, 0.0, 0.0001)
    e = tracking_error(1, states, pat, NeighborView((2,)), TargetState(0, 0, 0))
    assert e[2] == pytest.approx(0.2)


def test_rotation_into_body_frame():
    e = rotate_error([1.0, 0.0, 0.0], math.pi / 2)
    assert (e.e_x, e.e_y) == pytest.approx((0.0, -1.0), abs=1e-12)
    assert resultant_error(e) == pytest.approx(1.0)


def test_isolated_node_warns_and_returns_zero():
    with pytest.warns(IsolatedNodeWarning):
        e = tracking_error(2, formation_states(), PAT, NeighborView(()), TargetState(0, 0, 0))
    assert np.all(e == 0)


def test_fitness_step():
    w = CostWeights()
    assert fitness_step(ErrorVector(0, 0, 0), w) == 1.0
    assert fitness_step(ErrorVector(1.0, 0, 0), w) == pytest.approx(math.exp(-0.15))
    with pytest.raises(ValueError):
        CostWeights(0.0, 1.0, 1.0)


def test_error_rate_in_steady_formation_is_zero():
    states = formation_states(heading=0.3)
    target = TargetState(0, 0, 0.3)
    cmds = {i: ActuationCommand() for i in PAT.ids}
    topo = build_topology(PAT, PAT.ids, 1)
    for node, view in views(topo).items():
        e = rotate_error(tracking_error(node, states, PAT, view, target), 0.3)
        r = error_rate(node, e, states, cmds, view, target, TargetCommand(0.5, 0.0), C)
        assert r == pytest.approx([0, 0, 0], abs=1e-12)


def test_error_rate_rejects_slow_agents():
    states = formation_states(speed=0.2)
    cmds = {i: ActuationCommand() for i in PAT.ids}
    with pytest.raises(ValueError):
        error_rate(2, ErrorVector(0, 0, 0), states, cmds, NeighborView((1, 3)), None, None, C)
