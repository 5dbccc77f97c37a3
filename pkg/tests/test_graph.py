from collections import deque

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from graphlab.graph import (
    MultiGraph,
    components,
    count_isolated_trees,
    induced_subgraph,
    is_simple,
    read_edge_list,
    tree_component_sizes,
    write_edge_list,
)


def bfs_sizes(g):
    adj = g.adjacency()
    seen = [False] * g.vertex_count
    sizes = []
    for s in range(g.vertex_count):
        if seen[s]:
            continue
        seen[s] = True
        q, k = deque([s]), 0
        while q:
            u = q.popleft()
            k += 1
            for v in adj[u]:
                if not seen[v]:
                    seen[v] = True
                    q.append(v)
        sizes.append(k)
    return sorted(sizes)


edge_lists = st.integers(1, 25).flatmap(
    lambda n: st.tuples(st.just(n), st.lists(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)), max_size=40))
)


def test_is_simple_examples():
    assert is_simple(MultiGraph(2, [(0, 1)]))
    assert not is_simple(MultiGraph(1, [(0, 0)]))
    assert not is_simple(MultiGraph(2, [(0, 1), (1, 0)]))


def test_loop_counts_two():
    g = MultiGraph(2, [(0, 0), (0, 1)])
    assert g.degrees().tolist() == [3, 1]
    assert g.edge_count == 2


def test_component_examples():
    c = components(MultiGraph(2, [(0, 1)]))
    assert sorted(c.component_sizes.tolist()) == [2] and c.largest == 2
    c = components(MultiGraph(5, np.empty((0, 2))))
    assert c.component_sizes.tolist() == [1] * 5 and c.largest == 1
    c = components(MultiGraph(4, [(0, 1), (1, 2)]))
    assert sorted(c.component_sizes.tolist()) == [1, 3] and c.largest == 3


def test_isolated_tree_examples():
    assert count_isolated_trees(MultiGraph(3, [(0, 1), (1, 2)]), 3) == 1
    assert count_isolated_trees(MultiGraph(3, [(0, 1), (1, 2), (2, 0)]), 3) == 0
    assert count_isolated_trees(MultiGraph(4, [(0, 1), (2, 3)]), 2) == 2
    with pytest.raises(ValueError):
        count_isolated_trees(MultiGraph(2, [(0, 1), (0, 1)]), 2)


@settings(max_examples=200, deadline=None)
@given(edge_lists)
def test_components_match_bfs(data):
    n, edges = data
    g = MultiGraph(n, np.array(edges, dtype=np.int64).reshape(-1, 2))
    c = components(g)
    assert sorted(c.component_sizes.tolist()) == bfs_sizes(g)
    assert c.component_sizes.sum() == n
    assert c.largest >= -(-n // c.count)
    assert g.degrees().sum() == 2 * g.edge_count


@settings(max_examples=100, deadline=None)
@given(edge_lists, st.tuples(st.integers(0, 24), st.integers(0, 24)))
def test_adding_edge_is_monotone(data, extra):
    n, edges = data
    u, v = extra[0] % n, extra[1] % n
    g = MultiGraph(n, np.array(edges, dtype=np.int64).reshape(-1, 2))
    h = MultiGraph(n, np.array(edges + [(u, v)], dtype=np.int64).reshape(-1, 2))
    assert components(h).count <= components(g).count
    assert components(h).largest >= components(g).largest


@settings(max_examples=100, deadline=None)
@given(edge_lists)
def test_trees_of_size_one_are_isolated_vertices(data):
    n, edges = data
    simple = sorted({(min(a, b), max(a, b)) for a, b in edges if a != b})
    g = MultiGraph(n, np.array(simple, dtype=np.int64).reshape(-1, 2))
    assert count_isolated_trees(g, 1) == int(np.sum(g.degrees() == 0))


def test_tree_sizes_on_multigraph():
    # a double edge is a component with 2 vertices and 2 edges: not a tree
    g = MultiGraph(5, [(0, 1), (0, 1), (2, 3)])
    assert tree_component_sizes(g) == {2: 1, 1: 1}


def test_induced_subgraph():
    g = MultiGraph(5, [(0, 1), (1, 2), (3, 4), (2, 4)])
    sub = induced_subgraph(g, [1, 2, 4])
    assert sorted(map(tuple, sub.edges.tolist())) == [(0, 1), (1, 2)]


def test_edge_list_roundtrip(tmp_path):
    g = MultiGraph(6, [(0, 1), (2, 2), (3, 4)])
    write_edge_list(g, tmp_path / "g.txt")
    h = read_edge_list(tmp_path / "g.txt")
    assert h.vertex_count == 6
    assert np.array_equal(h.edges, g.edges)
