"""Growing multigraph with degree-proportional sampling, plus the simple view used for analysis."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from . import _kernels

_ID = np.int32


class GraphError(ValueError):
    """Invalid graph operation or malformed graph input."""


@dataclass(frozen=True)
class GraphSpec:
    """Initial graph for a growth process: ``empty``, ``clique`` or ``edge_list``."""

    kind: str = "empty"
    k: int = 0
    path: str | None = None

    def __post_init__(self):
        if self.kind not in ("empty", "clique", "edge_list"):
            raise GraphError(f"unknown graph spec kind {self.kind!r}")
        if self.kind == "clique" and self.k < 1:
            raise GraphError("clique(k) requires k >= 1")
        if self.kind == "edge_list" and not self.path:
            raise GraphError("edge_list spec needs a path")

    @classmethod
    def empty(cls) -> "GraphSpec":
        return cls("empty")

    @classmethod
    def clique(cls, k: int) -> "GraphSpec":
        return cls("clique", k=k)

    @classmethod
    def edge_list(cls, path) -> "GraphSpec":
        return cls("edge_list", path=str(path))

    def build(self) -> "MultiGraph":
        if self.kind == "empty":
            return MultiGraph()
        if self.kind == "clique":
            g = MultiGraph(self.k)
            for u in range(self.k):
                for v in range(u + 1, self.k):
                    g.add_edge(u, v)
            return g
        return load_edge_list(self.path)

    def __str__(self):
        if self.kind == "clique":
            return f"clique:{self.k}"
        if self.kind == "edge_list":
            return f"edge_list:{self.path}"
        return "empty"


class MultiGraph:
    """Undirected multigraph with self-loops, stored as a flat endpoint array.

    Edge ``i`` occupies endpoint slots ``2i`` and ``2i+1``, so a uniformly random
    slot is a degree-proportional node and a self-loop counts twice toward the
    degree of its node.  Contraction only rewrites the raw-id -> node-id label
    table, which keeps the endpoint array append-only during growth.  Node ids
    are the raw ids that survive contraction; merged ids become tombstones that
    :meth:`simplify` compacts away.
    """

    def __init__(self, n_nodes: int = 0, edge_capacity: int = 16):
        self._ends = np.empty(2 * max(edge_capacity, 1), dtype=_ID)
        self._label = np.empty(max(n_nodes, 16), dtype=_ID)
        self._label[:n_nodes] = np.arange(n_nodes, dtype=_ID)
        self._n_edges = 0
        self._n_raw = n_nodes
        self._n_alive = n_nodes
        self._version = 0
        self._cache: dict = {}

    # -- storage -------------------------------------------------------------

    def reserve(self, extra_edges: int, extra_nodes: int) -> None:
        """Make room for ``extra_edges`` more edges and ``extra_nodes`` more raw nodes."""
        need = 2 * (self._n_edges + extra_edges)
        if need > self._ends.shape[0]:
            grown = np.empty(max(need, int(self._ends.shape[0] * 1.25)), dtype=_ID)
            grown[: 2 * self._n_edges] = self._ends[: 2 * self._n_edges]
            self._ends = grown
        need = self._n_raw + extra_nodes
        if need > self._label.shape[0]:
            grown = np.empty(max(need, 2 * self._label.shape[0]), dtype=_ID)
            grown[: self._n_raw] = self._label[: self._n_raw]
            self._label = grown

    def _touch(self):
        self._version += 1
        self._cache.clear()

    def _sync(self, n_edges: int, n_raw: int, n_alive: int) -> None:
        self._n_edges, self._n_raw, self._n_alive = int(n_edges), int(n_raw), int(n_alive)
        self._touch()

    # -- basic queries -------------------------------------------------------

    @property
    def node_count(self) -> int:
        return self._n_alive

    @property
    def n_edges(self) -> int:
        return self._n_edges

    @property
    def id_bound(self) -> int:
        """One past the largest node id ever issued (tombstones included)."""
        return self._n_raw

    def is_node(self, v: int) -> bool:
        return 0 <= v < self._n_raw and self._label[v] == v

    def nodes(self) -> np.ndarray:
        ids = np.arange(self._n_raw)
        return ids[self._label[: self._n_raw] == ids]

    @property
    def endpoint_list(self) -> np.ndarray:
        """Flat endpoint sequence in current node ids (length ``2 * n_edges``)."""
        if "endpoints" not in self._cache:
            self._cache["endpoints"] = self._label[self._ends[: 2 * self._n_edges]]
        return self._cache["endpoints"]

    @property
    def edges(self) -> np.ndarray:
        return self.endpoint_list.reshape(-1, 2)

    def degrees(self) -> np.ndarray:
        """Degree array indexed by node id; tombstoned ids have degree 0."""
        if "deg" not in self._cache:
            self._cache["deg"] = _kernels.multi_degrees(
                self._ends, self._n_edges, self._label, self._n_raw)
        return self._cache["deg"]

    def degree(self, v: int) -> int:
        self._check_node(v)
        return int(self.degrees()[v])

    def self_loop_counts(self) -> np.ndarray:
        if "loops" not in self._cache:
            e = self.edges
            loops = e[e[:, 0] == e[:, 1], 0]
            self._cache["loops"] = np.bincount(loops, minlength=self._n_raw)
        return self._cache["loops"]

    def self_loop_count(self, v: int) -> int:
        self._check_node(v)
        return int(self.self_loop_counts()[v])

    def theta(self, v: int) -> float:
        """Share of the total degree held by self-loops on ``v``."""
        if self._n_edges == 0:
            return 0.0
        return 2 * self.self_loop_count(v) / (2 * self._n_edges)

    def _slots_by_node(self):
        if "slots" not in self._cache:
            ep = self.endpoint_list
            order = np.argsort(ep, kind="stable")
            starts = np.searchsorted(ep[order], np.arange(self._n_raw + 1))
            self._cache["slots"] = (order, starts)
        return self._cache["slots"]

    def incident(self, v: int) -> list[int]:
        """Indices of edges touching ``v``; a self-loop is listed once."""
        self._check_node(v)
        order, starts = self._slots_by_node()
        return sorted({int(s) // 2 for s in order[starts[v]:starts[v + 1]]})

    def _check_node(self, v: int) -> None:
        if not self.is_node(int(v)):
            raise GraphError(f"unknown node id {v}")

    # -- mutation ------------------------------------------------------------

    def add_node(self) -> int:
        return self.add_nodes(1)

    def add_nodes(self, k: int) -> int:
        """Add ``k`` isolated nodes; returns the first new id."""
        self.reserve(0, k)
        first = self._n_raw
        self._label[first:first + k] = np.arange(first, first + k, dtype=_ID)
        self._n_raw += k
        self._n_alive += k
        self._touch()
        return first

    def add_edge(self, u: int, v: int) -> int:
        self._check_node(u)
        self._check_node(v)
        self.reserve(1, 0)
        i = self._n_edges
        self._ends[2 * i] = u
        self._ends[2 * i + 1] = v
        self._n_edges += 1
        self._touch()
        return i

    def contract(self, nodes: Iterable[int]) -> int:
        """Merge ``nodes`` into one node carrying the smallest id.

        Edges inside the set become self-loops, so total degree and edge count
        are unchanged.
        """
        members = np.unique(np.fromiter((int(v) for v in nodes), dtype=np.int64))
        if members.size == 0:
            raise GraphError("contract needs a nonempty node set")
        for v in members:
            self._check_node(v)
        root = members[0]
        lab = self._label[: self._n_raw]
        lab[np.isin(lab, members)] = root
        self._n_alive -= members.size - 1
        self._touch()
        return int(root)

    # -- sampling ------------------------------------------------------------

    def sample_endpoint(self, rng: np.random.Generator) -> int:
        """Node chosen with probability degree(v) / (2 * n_edges)."""
        if self._n_edges == 0:
            raise GraphError("cannot sample from a graph without edges")
        return int(self._label[self._ends[rng.integers(0, 2 * self._n_edges)]])

    def sample_incident_neighbor(self, u: int, rng: np.random.Generator) -> int:
        """Opposite endpoint of a uniformly chosen incident slot of ``u``."""
        self._check_node(u)
        order, starts = self._slots_by_node()
        lo, hi = starts[u], starts[u + 1]
        if hi == lo:
            raise GraphError(f"node {u} is isolated")
        slot = order[lo + rng.integers(0, hi - lo)]
        return int(self._label[self._ends[slot ^ 1]])

    # -- conversion ----------------------------------------------------------

    def copy(self) -> "MultiGraph":
        g = MultiGraph.__new__(MultiGraph)
        g._ends = self._ends[: max(2 * self._n_edges, 2)].copy()
        g._label = self._label[: max(self._n_raw, 1)].copy()
        g._n_edges, g._n_raw, g._n_alive = self._n_edges, self._n_raw, self._n_alive
        g._version = 0
        g._cache = {}
        return g

    def simplify(self) -> "SimpleGraph":
        """Drop self-loops, collapse parallel edges and compact node ids."""
        alive = self.nodes()
        index_of = np.full(max(self._n_raw, 1), -1, dtype=np.int64)
        index_of[alive] = np.arange(alive.size)
        # raw id -> compact index of its current node
        index_of = index_of[self._label[: self._n_raw]] if self._n_raw else index_of
        keys = _simple_keys(self._ends, self._n_edges, index_of, alive.size)
        return _csr_from_keys(keys, alive.size, original_ids=alive)

    @classmethod
    def from_edges(cls, edges: Iterable[Sequence[int]], n_nodes: int | None = None) -> "MultiGraph":
        arr = np.asarray(list(edges), dtype=np.int64).reshape(-1, 2)
        n = int(arr.max()) + 1 if arr.size else 0
        if n_nodes is not None:
            if n_nodes < n:
                raise GraphError("n_nodes smaller than largest id in edges")
            n = n_nodes
        g = cls(n, edge_capacity=len(arr))
        g._ends[: 2 * len(arr)] = arr.ravel()
        g._n_edges = len(arr)
        return g

    def __repr__(self):
        return f"MultiGraph(nodes={self.node_count}, edges={self.n_edges})"


_KEY_CHUNK = 1 << 22


def _simple_keys(ends, n_edges, index_of, n_nodes, chunk=_KEY_CHUNK):
    """Sorted unique ``u * n + v`` keys (u < v) of the non-loop edges.

    Works through the endpoint array in chunks so memory stays proportional to
    the simple edge count rather than the raw one.
    """
    keys = np.empty(0, dtype=np.int64)
    for lo in range(0, n_edges, chunk):
        hi = min(n_edges, lo + chunk)
        a = index_of[ends[2 * lo:2 * hi:2]]
        b = index_of[ends[2 * lo + 1:2 * hi:2]]
        keep = a != b
        lo_, hi_ = np.minimum(a[keep], b[keep]), np.maximum(a[keep], b[keep])
        keys = np.union1d(keys, lo_ * np.int64(n_nodes) + hi_)
    return keys


def _csr_from_keys(keys, n_nodes, original_ids=None):
    u, v = np.divmod(keys, np.int64(max(n_nodes, 1)))
    src = np.concatenate([u, v])
    dst = np.concatenate([v, u])
    order = np.lexsort((dst, src))
    indptr = np.zeros(n_nodes + 1, dtype=np.int64)
    np.cumsum(np.bincount(src, minlength=n_nodes), out=indptr[1:])
    return SimpleGraph(indptr, dst[order], original_ids=original_ids)


class SimpleGraph:
    """Loop-free, duplicate-free undirected graph in CSR form (sorted neighbour lists).

    ``original_ids[i]`` records which node of the parent graph compact node ``i``
    came from.
    """

    def __init__(self, indptr, indices, original_ids=None):
        self.indptr = np.asarray(indptr, dtype=np.int64)
        self.indices = np.asarray(indices, dtype=np.int32)
        n = self.indptr.shape[0] - 1
        self.original_ids = (np.arange(n) if original_ids is None
                             else np.asarray(original_ids, dtype=np.int64))

    @classmethod
    def from_edges(cls, edges, n_nodes: int | None = None) -> "SimpleGraph":
        return MultiGraph.from_edges(edges, n_nodes).simplify()

    @property
    def node_count(self) -> int:
        return self.indptr.shape[0] - 1

    @property
    def n_edges(self) -> int:
        return self.indices.shape[0] // 2

    def neighbors(self, v: int) -> np.ndarray:
        return self.indices[self.indptr[v]:self.indptr[v + 1]]

    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    def edges(self) -> np.ndarray:
        """Edge array with ``u < v``, sorted lexicographically."""
        src = np.repeat(np.arange(self.node_count, dtype=np.int64), self.degrees())
        keep = src < self.indices
        return np.column_stack([src[keep], self.indices[keep]])

    def adjacency(self) -> sp.csr_matrix:
        n = self.node_count
        data = np.ones(self.indices.shape[0], dtype=np.float64)
        return sp.csr_matrix((data, self.indices, self.indptr), shape=(n, n))

    def __eq__(self, other):
        if not isinstance(other, SimpleGraph):
            return NotImplemented
        return (np.array_equal(self.indptr, other.indptr)
                and np.array_equal(self.indices, other.indices))

    def __repr__(self):
        return f"SimpleGraph(nodes={self.node_count}, edges={self.n_edges})"


def simplify(g: MultiGraph | SimpleGraph) -> SimpleGraph:
    if isinstance(g, SimpleGraph):
        return g
    return g.simplify()


def induced_subgraph(g: SimpleGraph, nodes) -> SimpleGraph:
    """Subgraph on ``nodes`` with every edge of ``g`` between them.

    Compact ids follow the sorted order of the selected nodes; ``original_ids``
    is carried through from ``g``.
    """
    sel = np.unique(np.asarray(nodes, dtype=np.int64))
    if sel.size and (sel[0] < 0 or sel[-1] >= g.node_count):
        raise GraphError("induced_subgraph: node id out of range")
    sub = g.adjacency()[sel][:, sel].tocsr()
    sub.sort_indices()
    return SimpleGraph(sub.indptr, sub.indices, original_ids=g.original_ids[sel])


def load_edge_list(path) -> MultiGraph:
    """Read a whitespace-separated edge list; ``#`` lines are comments, nodes are 0..max id.

    A ``# nodes N ...`` header (as written by :func:`write_edge_list`) keeps
    trailing isolated nodes.
    """
    edges = []
    n_nodes = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            s = line.strip()
            if s.startswith("#"):
                head = s[1:].split()
                if len(head) >= 2 and head[0] == "nodes" and head[1].isdigit():
                    n_nodes = int(head[1])
                continue
            if not s:
                continue
            parts = s.split()
            if len(parts) != 2:
                raise GraphError(f"{path}:{lineno}: expected two node ids, got {s!r}")
            try:
                u, v = int(parts[0], 10), int(parts[1], 10)
            except ValueError:
                raise GraphError(f"{path}:{lineno}: node ids must be base-10 integers") from None
            if u < 0 or v < 0:
                raise GraphError(f"{path}:{lineno}: negative node id")
            edges.append((u, v))
    if edges and n_nodes is not None and max(max(e) for e in edges) >= n_nodes:
        raise GraphError(f"{path}: node id exceeds the declared node count {n_nodes}")
    return MultiGraph.from_edges(edges, n_nodes)


def write_edge_list(g: MultiGraph | SimpleGraph, path) -> None:
    """Write the simplified edge set, one ``u v`` pair per line with ``u < v``."""
    s = simplify(g)
    lines = [f"# nodes {s.node_count} edges {s.n_edges}"]
    lines += [f"{u} {v}" for u, v in s.edges()]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
