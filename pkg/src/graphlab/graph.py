"""Multigraphs, connected components and isolated-tree counting.

Vertices are 0-based integers. A loop ``(v, v)`` is one edge contributing 2
to the degree of ``v``, which matches half-edge accounting in the
configuration model.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components


@dataclass(frozen=True)
class MultiGraph:
    vertex_count: int
    edges: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.vertex_count < 1:
            raise ValueError("vertex_count must be positive")
        e = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        if e.size and (e.min() < 0 or e.max() >= self.vertex_count):
            raise ValueError("edge endpoint out of range")
        e = e.copy()
        e.flags.writeable = False
        object.__setattr__(self, "edges", e)

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    def degrees(self) -> np.ndarray:
        return np.bincount(self.edges.ravel(), minlength=self.vertex_count)

    def adjacency(self) -> list[list[int]]:
        """Adjacency lists; a loop appears twice in its vertex's list."""
        adj: list[list[int]] = [[] for _ in range(self.vertex_count)]
        for u, v in self.edges.tolist():
            adj[u].append(v)
            adj[v].append(u)
        return adj

    def edge_set(self) -> frozenset:
        """Edges as a frozenset of sorted pairs. Only meaningful for simple graphs."""
        return frozenset((min(u, v), max(u, v)) for u, v in self.edges.tolist())


@dataclass(frozen=True)
class ComponentSummary:
    component_sizes: np.ndarray = field(repr=False)
    labels: np.ndarray = field(repr=False)

    @property
    def largest(self) -> int:
        return int(self.component_sizes.max())

    @property
    def count(self) -> int:
        return len(self.component_sizes)


def is_simple(g: MultiGraph) -> bool:
    e = g.edges
    if len(e) == 0:
        return True
    u, v = e[:, 0], e[:, 1]
    if np.any(u == v):
        return False
    lo = np.minimum(u, v)
    hi = np.maximum(u, v)
    keys = lo * g.vertex_count + hi
    return len(np.unique(keys)) == len(keys)


def components(g: MultiGraph) -> ComponentSummary:
    n = g.vertex_count
    e = g.edges
    adj = coo_matrix((np.ones(len(e), dtype=np.int8), (e[:, 0], e[:, 1])), shape=(n, n))
    _, labels = connected_components(adj, directed=False)
    sizes = np.bincount(labels)
    return ComponentSummary(component_sizes=sizes, labels=labels)


def largest_component_size(g: MultiGraph) -> int:
    return components(g).largest


def tree_component_sizes(g: MultiGraph) -> Counter:
    """Counter ``{s: number of components with s vertices and s - 1 edges}``.

    Works on multigraphs: a connected component with exactly ``s - 1`` edges
    cannot contain a loop or a parallel edge, so it is always a tree.
    """
    summary = components(g)
    labels = summary.labels
    edge_counts = np.bincount(labels[g.edges[:, 0]], minlength=summary.count) if len(g.edges) else np.zeros(summary.count, dtype=np.int64)
    is_tree = edge_counts == summary.component_sizes - 1
    return Counter(summary.component_sizes[is_tree].tolist())


def count_isolated_trees(g: MultiGraph, s: int) -> int:
    if s < 1:
        raise ValueError("s must be a positive integer")
    if not is_simple(g):
        raise ValueError("count_isolated_trees requires a simple graph")
    return tree_component_sizes(g).get(s, 0)


def induced_subgraph(g: MultiGraph, vertices) -> MultiGraph:
    """Subgraph induced on ``vertices``, relabelled 0..k-1 in the given order."""
    vertices = np.asarray(vertices, dtype=np.int64)
    index = np.full(g.vertex_count, -1, dtype=np.int64)
    index[vertices] = np.arange(len(vertices))
    mapped = index[g.edges]
    keep = (mapped[:, 0] >= 0) & (mapped[:, 1] >= 0)
    return MultiGraph(len(vertices), mapped[keep])


def write_edge_list(g: MultiGraph, path) -> None:
    lines = [f"# vertices {g.vertex_count}"]
    lines.extend(f"{u} {v}" for u, v in g.edges.tolist())
    Path(path).write_text("\n".join(lines) + "\n")


def read_edge_list(path, vertex_count: int | None = None) -> MultiGraph:
    """Read the ``u v`` per line format. A ``# vertices N`` header sets the order."""
    pairs = []
    for raw in Path(path).read_text().splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            parts = line[1:].split()
            if len(parts) == 2 and parts[0] == "vertices" and vertex_count is None:
                vertex_count = int(parts[1])
            continue
        u, v = line.split()
        pairs.append((int(u), int(v)))
    edges = np.array(pairs, dtype=np.int64).reshape(-1, 2)
    if vertex_count is None:
        vertex_count = int(edges.max()) + 1 if len(edges) else 1
    return MultiGraph(vertex_count, edges)
