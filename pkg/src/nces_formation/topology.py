"""Cluster-head communication topology with failover.

Every follower listens to the cluster head and to its nearest non-head peer
(distances taken from the formation definition, ties to the lowest id). The
head listens to nobody but the reference target.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .formation import FormationPattern, distance_matrix


_TIE_RTOL = 1e-9


class SwarmCollapse(RuntimeError):
    """Fewer than two nodes remain, so no formation can be held."""


@dataclass(frozen=True)
class Topology:
    alive: tuple[int, ...]
    head: int
    adjacency: np.ndarray  # a[i, j] = 1: alive[i] receives from alive[j]

    def index(self, node: int) -> int:
        return self.alive.index(node)

    def neighbors(self, node: int) -> list[int]:
        row = self.adjacency[self.index(node)]
        return [self.alive[j] for j in np.flatnonzero(row)]

    def to_dict(self) -> dict:
        return {"alive": list(self.alive), "head": self.head, "adjacency": self.adjacency.tolist()}

    def __eq__(self, other):
        if not isinstance(other, Topology):
            return NotImplemented
        return (self.alive == other.alive and self.head == other.head
                and np.array_equal(self.adjacency, other.adjacency))

    __hash__ = None


@dataclass(frozen=True)
class GraphMetrics:
    degrees: np.ndarray
    laplacian: np.ndarray
    molloy_reed: float


def elect_head(alive) -> int:
    if not alive:
        raise SwarmCollapse("no alive nodes left to elect a head")
    return min(alive)


def build_topology(pattern: FormationPattern, alive, head: int) -> Topology:
    alive = tuple(sorted(alive))
    if len(alive) < 2:
        raise SwarmCollapse(f"only {len(alive)} node(s) alive")
    if head not in alive:
        raise ValueError(f"head {head} is not alive")
    d = distance_matrix(pattern)
    n = len(alive)
    adj = np.zeros((n, n), dtype=np.int8)
    h = alive.index(head)
    tie = _TIE_RTOL * float(d.max())
    for a, i in enumerate(alive):
        if i == head:
            continue
        adj[a, h] = 1
        best, best_d = None, np.inf
        # ascending id order with strict '<' keeps the lowest id on ties
        for b, k in enumerate(alive):
            if k == i or k == head:
                continue
            if d[i - 1, k - 1] < best_d - tie:
                best, best_d = b, d[i - 1, k - 1]
        if best is not None:
            adj[a, best] = 1
    adj.setflags(write=False)
    return Topology(alive, head, adj)


def fail_nodes(topo: Topology, failed, pattern: FormationPattern) -> Topology:
    failed = set(failed)
    if not failed:
        return topo
    unknown = failed - set(topo.alive)
    if unknown:
        raise ValueError(f"nodes {sorted(unknown)} are not alive")
    alive = [i for i in topo.alive if i not in failed]
    if not alive:
        raise SwarmCollapse("all nodes failed")
    head = topo.head if topo.head in alive else elect_head(alive)
    return build_topology(pattern, alive, head)


def has_spanning_tree(topo: Topology) -> bool:
    """True iff every alive node hears the head through a chain of edges."""
    adj = np.asarray(topo.adjacency)
    n = len(topo.alive)
    root = topo.index(topo.head)
    seen = {root}
    queue = deque([root])
    while queue:
        j = queue.popleft()
        # information flows j -> i wherever i receives from j
        for i in np.flatnonzero(adj[:, j]):
            if i not in seen:
                seen.add(int(i))
                queue.append(int(i))
    return len(seen) == n


def undirected_support(adjacency) -> np.ndarray:
    a = np.asarray(adjacency) != 0
    return (a | a.T).astype(np.int64)


def laplacian(topo: Topology) -> GraphMetrics:
    a = undirected_support(topo.adjacency)
    deg = a.sum(axis=1)
    lap = np.diag(deg) - a
    return GraphMetrics(deg, lap, _kappa(deg))


def _kappa(deg) -> float:
    deg = np.asarray(deg, dtype=float)
    mean = deg.mean()
    if mean == 0:
        return 0.0
    return float((deg ** 2).mean() / mean)


def molloy_reed(topo: Topology) -> float:
    return _kappa(undirected_support(topo.adjacency).sum(axis=1))
