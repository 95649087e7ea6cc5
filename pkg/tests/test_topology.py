import numpy as np
import pytest

from nces_formation.formation import line_pattern, polygon_pattern
from nces_formation.topology import (SwarmCollapse, Topology, build_topology, elect_head, fail_nodes,
                                     has_spanning_tree, laplacian, molloy_reed)

A1 = [[0, 0, 0, 0, 0],
      [1, 0, 1, 0, 0],
      [1, 1, 0, 0, 0],
      [1, 0, 1, 0, 0],
      [1, 0, 0, 1, 0]]


def test_pentagon_metrics():
    topo = build_topology(polygon_pattern(5, 0.0, 0.5), range(1, 6), 1)
    assert topo.adjacency.tolist() == A1
    m = laplacian(topo)
    assert m.degrees.tolist() == [4, 2, 3, 3, 2]
    assert m.molloy_reed == pytest.approx(3.0)
    assert np.all(m.laplacian.sum(axis=1) == 0)


def test_small_swarm_kappa():
    assert molloy_reed(build_topology(polygon_pattern(3), [1, 2, 3], 1)) == 2.0
    assert molloy_reed(build_topology(polygon_pattern(4), [1, 2, 3, 4], 1)) == pytest.approx(2.6)


def test_hexagon_failure_rebuild():
    p = polygon_pattern(6, 0.0, 0.5)
    topo = fail_nodes(build_topology(p, range(1, 7), 1), {1, 4}, p)
    assert topo.alive == (2, 3, 5, 6)
    assert topo.head == 2
    assert topo.adjacency.tolist() == [[0, 0, 0, 0], [1, 0, 1, 0], [1, 0, 0, 1], [1, 0, 1, 0]]
    assert has_spanning_tree(topo)


def test_head_keeps_role_when_follower_fails():
    p = polygon_pattern(5)
    topo = fail_nodes(build_topology(p, range(1, 6), 1), {3}, p)
    assert topo.head == 1 and topo.alive == (1, 2, 4, 5)


def test_head_is_min_alive():
    assert elect_head([4, 2, 7]) == 2
    with pytest.raises(SwarmCollapse):
        elect_head([])


def test_collapse_and_bad_failures():
    p = line_pattern(3)
    topo = build_topology(p, [1, 2, 3], 1)
    with pytest.raises(SwarmCollapse):
        fail_nodes(topo, {1, 2}, p)
    with pytest.raises(ValueError):
        fail_nodes(topo, {9}, p)
    assert fail_nodes(topo, set(), p) is topo


def test_neighbors_and_serialisation():
    topo = build_topology(polygon_pattern(5, 0.0, 0.5), range(1, 6), 1)
    assert topo.neighbors(2) == [1, 3]
    assert topo.neighbors(1) == []
    d = topo.to_dict()
    assert Topology(tuple(d["alive"]), d["head"], np.array(d["adjacency"], dtype=np.int8)) == topo


def test_line_followers_pick_lowest_id_on_tie():
    # node 3 is equidistant from 2 and 4
    topo = build_topology(line_pattern(5, 0.0, 1.0), range(1, 6), 1)
    assert topo.neighbors(3) == [1, 2]


def test_disconnected_graph_detected():
    adj = np.array([[0, 0, 0], [1, 0, 0], [0, 0, 0]], dtype=np.int8)
    assert not has_spanning_tree(Topology((1, 2, 3), 1, adj))
