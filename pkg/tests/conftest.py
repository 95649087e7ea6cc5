import numpy as np
import pytest

from nces_formation import _kernel_py
from nces_formation.dynamics import ActuationCommand, MissileState, SystemConstraints, TargetCommand, TargetState
from nces_formation.error_model import NeighborView


def kernel_backends():
    out = [("python", _kernel_py.step_batch)]
    try:
        from nces_formation import _kernel

        out.append(("cython", _kernel.step_batch))
    except ImportError:
        pass
    return out


@pytest.fixture(params=kernel_backends(), ids=lambda b: b[0])
def step_batch(request):
    return request.param[1]


def views(topo):
    """NeighborView per alive node of a topology."""
    return {node: NeighborView(tuple(topo.neighbors(node)), int(node == topo.head)) for node in topo.alive}


def random_world(rng, ids, c: SystemConstraints, spread=2.0):
    """Random missile states, saturated commands and a valid target command."""
    states = {i: MissileState(*rng.uniform(-spread, spread, 2), rng.uniform(-np.pi, np.pi),
                              rng.uniform(c.v_min + 0.05, c.v_max - 0.05)) for i in ids}
    cmds = {i: ActuationCommand(rng.uniform(-c.a_vmax, c.a_vmax), rng.uniform(-c.a_lmax, c.a_lmax)) for i in ids}
    target = TargetState(*rng.uniform(-spread, spread, 2), rng.uniform(-np.pi, np.pi))
    v = rng.uniform(c.v_min + 0.05, c.v_max - 0.05)
    tcmd = TargetCommand(v, rng.uniform(-1, 1) * c.a_lmax / v)
    return states, cmds, target, tcmd


# -- acceptance report -------------------------------------------------------

ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for n in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[n])
