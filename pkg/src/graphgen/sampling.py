"""Node-collecting samplers that return induced subgraphs.

All three methods collect ``ceil(fraction * n)`` nodes (random-edge sampling
may overshoot by one) and return the subgraph induced on them.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from .graph import GraphError, SimpleGraph, induced_subgraph

METHODS = ("ff", "dfs", "edge")
DEFAULT_BURN = 0.7


@dataclass(frozen=True)
class SampleConfig:
    method: str
    target_fraction: float
    burn_prob: float = DEFAULT_BURN
    seed: int = 0

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")
        if not 0 < self.target_fraction <= 1:
            raise ValueError("target_fraction must be in (0, 1]")
        if not 0 < self.burn_prob < 1:
            raise ValueError("burn_prob must be in (0, 1)")


def target_count(n: int, fraction: float) -> int:
    if not 0 < fraction <= 1:
        raise ValueError("target_fraction must be in (0, 1]")
    # guard against 0.3 * 1000 = 300.00000000000006
    return min(n, math.ceil(round(fraction * n, 9)))


def _uniform_unvisited(visited, rng):
    free = np.flatnonzero(~visited)
    return int(free[rng.integers(0, free.size)])


def forest_fire_order(g: SimpleGraph, burn_prob: float, target: int, rng) -> list[int]:
    """Burn order of a forest fire that stops after ``target`` nodes.

    The front is processed first-in first-out; each unburned neighbour of a
    burning node ignites independently with probability ``burn_prob``.  When
    the front empties, a new seed is drawn uniformly from unburned nodes.
    """
    n = g.node_count
    burned = np.zeros(n, dtype=bool)
    order: list[int] = []
    front: deque[int] = deque()
    while len(order) < target:
        if not front:
            s = _uniform_unvisited(burned, rng)
            burned[s] = True
            order.append(s)
            front.append(s)
            continue
        u = front.popleft()
        nbrs = g.neighbors(u)
        nbrs = nbrs[~burned[nbrs]]
        if nbrs.size == 0:
            continue
        nbrs = nbrs[rng.permutation(nbrs.size)]
        lit = nbrs[rng.random(nbrs.size) < burn_prob]
        for v in lit:
            v = int(v)
            burned[v] = True
            order.append(v)
            front.append(v)
            if len(order) >= target:
                break
    return order[:target]


def forest_fire(g: SimpleGraph, burn_prob: float = DEFAULT_BURN,
                target_fraction: float = 0.5, rng=None) -> SimpleGraph:
    if g.node_count == 0:
        raise GraphError("cannot sample an empty graph")
    if not 0 < burn_prob < 1:
        raise ValueError("burn_prob must be in (0, 1)")
    rng = np.random.default_rng(rng)
    order = forest_fire_order(g, burn_prob, target_count(g.node_count, target_fraction), rng)
    return induced_subgraph(g, order)


def dfs_order(g: SimpleGraph, target: int, rng, start: int | None = None) -> list[int]:
    """Preorder of an iterative depth-first search with shuffled neighbour order."""
    n = g.node_count
    visited = np.zeros(n, dtype=bool)
    order: list[int] = []
    while len(order) < target:
        s = _uniform_unvisited(visited, rng) if start is None or visited[start] else start
        visited[s] = True
        order.append(s)
        stack = [iter(g.neighbors(s)[rng.permutation(g.neighbors(s).size)])]
        while stack and len(order) < target:
            for v in stack[-1]:
                v = int(v)
                if not visited[v]:
                    visited[v] = True
                    order.append(v)
                    nb = g.neighbors(v)
                    stack.append(iter(nb[rng.permutation(nb.size)]))
                    break
            else:
                stack.pop()
    return order[:target]


def dfs_sample(g: SimpleGraph, target_fraction: float = 0.5, rng=None,
               start: int | None = None) -> SimpleGraph:
    if g.node_count == 0:
        raise GraphError("cannot sample an empty graph")
    rng = np.random.default_rng(rng)
    order = dfs_order(g, target_count(g.node_count, target_fraction), rng, start)
    return induced_subgraph(g, order)


def random_edge_nodes(g: SimpleGraph, target: int, rng) -> np.ndarray:
    """Endpoints of edges drawn without replacement until ``target`` nodes are covered."""
    edges = g.edges()
    if edges.shape[0] == 0:
        raise GraphError("random-edge sampling needs at least one edge")
    seen = np.zeros(g.node_count, dtype=bool)
    count = 0
    for e in rng.permutation(edges.shape[0]):
        for v in edges[e]:
            if not seen[v]:
                seen[v] = True
                count += 1
        if count >= target:
            break
    return np.flatnonzero(seen)


def random_edge_sample(g: SimpleGraph, target_fraction: float = 0.5, rng=None) -> SimpleGraph:
    """Induced subgraph on the endpoints of uniformly drawn edges.

    If isolated nodes keep the edge endpoints from ever reaching the target,
    all non-isolated nodes are returned.
    """
    rng = np.random.default_rng(rng)
    nodes = random_edge_nodes(g, target_count(g.node_count, target_fraction), rng)
    return induced_subgraph(g, nodes)


def sample(g: SimpleGraph, config: SampleConfig, rng=None) -> SimpleGraph:
    """Dispatch on ``config.method``; ``rng`` defaults to one seeded by ``config.seed``."""
    rng = np.random.default_rng(config.seed) if rng is None else rng
    if config.method == "ff":
        return forest_fire(g, config.burn_prob, config.target_fraction, rng)
    if config.method == "dfs":
        return dfs_sample(g, config.target_fraction, rng)
    return random_edge_sample(g, config.target_fraction, rng)
