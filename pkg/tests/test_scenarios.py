import math

import numpy as np
import pytest

from nces_formation.formation import polygon_pattern
from nces_formation.scenarios import (InitSpec, Obstacle, ScenarioError, ScenarioSpec, TargetProgram,
                                      builtin_scenarios, get_scenario, lateral_half_width, load_scenario,
                                      switch_signal)
from nces_formation.seeding import rng


@pytest.mark.parametrize("name", sorted(builtin_scenarios()))
def test_builtins_valid_and_roundtrip(name, tmp_path):
    spec = get_scenario(name)
    spec.validate_target_program()
    path = tmp_path / "s.toml"
    path.write_text(spec.to_toml())
    back = load_scenario(path)
    assert back.to_dict() == spec.to_dict()
    assert back.to_toml() == spec.to_toml()


def test_unknown_scenario():
    with pytest.raises(ScenarioError):
        get_scenario("nope")


def test_malformed_toml():
    with pytest.raises(ScenarioError):
        ScenarioSpec.from_toml('name = "x"\n')


def test_failures_validated():
    pat = polygon_pattern(4)
    with pytest.raises(ScenarioError):
        ScenarioSpec("x", pat, TargetProgram(), failures=((10.0, (7,)),))
    with pytest.raises(ScenarioError):
        ScenarioSpec("x", pat, TargetProgram(), failures=((50.0, (1,)),))


def test_alternate_pattern_size_checked():
    with pytest.raises(ScenarioError):
        ScenarioSpec("x", polygon_pattern(4), TargetProgram(),
                     obstacles=(Obstacle(5.0, 0.0, 1.0, polygon_pattern(5)),))


def test_spiral_stays_in_envelope_to_the_end():
    spec = get_scenario("basic-spiral")
    assert spec.target_program.command(spec.episode_length - spec.constraints.tau).v_r >= 0.3


def test_box_init_seeded():
    spec = get_scenario("move-into-formation")
    a = spec.initial_states(rng(1, "init"))
    b = spec.initial_states(rng(1, "init"))
    assert np.array_equal(a, b)
    assert np.all((a[:, 0] >= -2) & (a[:, 0] <= 2) & (a[:, 1] >= -3.5) & (a[:, 1] <= -0.5))
    assert np.all((a[:, 2] > -math.pi) & (a[:, 2] <= math.pi))
    with pytest.raises(ScenarioError):
        InitSpec("box", x0=1, x1=0, y0=0, y1=1)


def test_formation_init_on_slots():
    spec = get_scenario("basic-linear")
    s = spec.initial_states()
    assert s[:, :2] == pytest.approx(spec.pattern.offsets)
    assert np.all(s[:, 2] == math.pi / 4) and np.all(s[:, 3] == 0.5)


def test_switch_signal_window():
    spec = get_scenario("switch-formation")
    d_c = spec.d_c
    assert d_c == pytest.approx(2.5)
    assert switch_signal([0.0, 3.0], spec.obstacles, d_c, 1.0) == (0.0, -1)
    assert switch_signal([0.0, 3.6], spec.obstacles, d_c, 1.0) == (1.0, 0)
    assert switch_signal([0.0, 7.0], spec.obstacles, d_c, 1.0) == (1.0, 0)
    assert switch_signal([0.0, 7.2], spec.obstacles, d_c, 1.0) == (0.0, -1)
    assert switch_signal([0.0, 12.0], spec.obstacles, d_c, 1.0) == (1.0, 1)
    ts, act = switch_signal(np.array([[0, 0.0], [0, 13.0]]), spec.obstacles, d_c, 1.0)
    assert ts.tolist() == [0.0, 1.0] and act.tolist() == [-1, 1]


def test_alternate_patterns_fit_their_gaps():
    for ob in get_scenario("switch-formation").obstacles:
        assert lateral_half_width(ob.alternate, ob.axis) < ob.gap / 2


def test_wall_segments():
    ob = Obstacle(6.0, 0.0, 1.0, polygon_pattern(5), length=2.0)
    assert ob.segments() == [((-2.5, 6.0), (-0.5, 6.0)), ((0.5, 6.0), (2.5, 6.0))]
