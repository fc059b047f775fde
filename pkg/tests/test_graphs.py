import itertools
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bowtielift.graphs import (
    Graph,
    bowtie_graph,
    canonical_code,
    chimney_graph,
    complete_graph,
    contains_bowtie,
    disjoint_union,
    edge_type_partition,
    find_monomorphism,
    triangle_graph,
    triangles,
)

from helpers import (
    all_graphs_up_to_iso,
    naive_contains_bowtie,
    naive_triangles,
    permute_graph,
    random_graph,
)


small_graphs = st.integers(0, 7).flatmap(
    lambda n: st.builds(
        lambda es: Graph.from_edges(n, es),
        st.sets(
            st.tuples(st.integers(0, max(n - 1, 0)), st.integers(0, max(n - 1, 0)))
            .filter(lambda p: p[0] != p[1]),
            max_size=n * 2,
        ),
    )
)


def test_graph_rejects_self_loops_and_bad_endpoints():
    with pytest.raises(ValueError):
        Graph.from_edges(3, [(1, 1)])
    with pytest.raises(ValueError):
        Graph.from_edges(2, [(0, 5)])
    with pytest.raises(ValueError):
        Graph(3, frozenset(), order=(0, 1, 1))


def test_monomorphism_triangle_in_k4():
    m = find_monomorphism(triangle_graph(), complete_graph(4))
    assert m is not None
    for u, v in triangle_graph().edges:
        assert complete_graph(4).has_edge(m[u], m[v])


def test_monomorphism_bowtie_needs_five_vertices():
    assert find_monomorphism(bowtie_graph(), complete_graph(4)) is None


def test_monomorphism_bowtie_self_embedding():
    m = find_monomorphism(bowtie_graph(), bowtie_graph())
    assert m is not None
    for u, v in bowtie_graph().edges:
        assert bowtie_graph().has_edge(m[u], m[v])


def test_monomorphism_empty_pattern():
    assert find_monomorphism(Graph(0, frozenset()), complete_graph(3)) == {}


def test_contains_bowtie_on_bowtie():
    assert contains_bowtie(bowtie_graph())


def test_contains_bowtie_chimney_is_free():
    # two triangles sharing an edge, not only a vertex
    assert not contains_bowtie(chimney_graph(2))


def test_contains_bowtie_k4_plus_pendant_triangle():
    # glue a fresh triangle onto one edge of K4: K4 on 0..3, apex 4 over (0,1),
    # then a second triangle at vertex 0 only
    g = Graph.from_edges(6, list(complete_graph(4).edges) + [(0, 4), (1, 4), (0, 5), (4, 5)])
    assert naive_contains_bowtie(g)
    assert contains_bowtie(g)


def test_triangles_examples():
    assert triangles(triangle_graph()) == [(0, 1, 2)]
    assert len(triangles(complete_graph(4))) == 4
    assert triangles(Graph.from_edges(3, [(0, 1), (1, 2)])) == []


def test_edge_type_partition_chimney_all_type0():
    e0, e1 = edge_type_partition(chimney_graph(2))
    assert len(e0) == 5 and not e1


def test_edge_type_partition_single_edge():
    e0, e1 = edge_type_partition(Graph.from_edges(2, [(0, 1)]))
    assert not e0 and e1 == {(0, 1)}


def test_edge_type_partition_triangle_with_pendant():
    g = Graph.from_edges(4, [(0, 1), (0, 2), (1, 2), (2, 3)])
    e0, e1 = edge_type_partition(g)
    assert len(e0) == 3 and e1 == {(2, 3)}


@given(small_graphs)
@settings(max_examples=200)
def test_triangles_match_naive(g):
    assert triangles(g) == naive_triangles(g)


@given(small_graphs)
@settings(max_examples=200)
def test_contains_bowtie_matches_naive(g):
    assert contains_bowtie(g) == naive_contains_bowtie(g)


@given(small_graphs)
@settings(max_examples=200)
def test_edge_in_e0_iff_in_some_triangle(g):
    e0, e1 = edge_type_partition(g)
    in_triangle = set()
    for t in triangles(g):
        for u, v in itertools.combinations(t, 2):
            in_triangle.add((u, v))
    assert e0 == in_triangle
    assert e0 | e1 == g.edges and not (e0 & e1)


def test_canonical_code_relabelled_chimneys_agree():
    g = chimney_graph(2)
    h = permute_graph(g, [3, 1, 0, 2])
    assert canonical_code(g) == canonical_code(h)
    assert canonical_code(g) != canonical_code(complete_graph(4))


def test_canonical_code_thousand_permutations():
    rng = random.Random(7)
    g = random_graph(8, 0.4, rng)
    base = canonical_code(g)
    perms = [list(p) for p in itertools.permutations(range(8))]
    for _ in range(1000):
        perm = rng.choice(perms)
        assert canonical_code(permute_graph(g, perm)) == base


def test_canonical_code_respects_vertex_labels():
    g = Graph.from_edges(2, [(0, 1)])
    a = canonical_code(g, vertex_labels={0: "x"})
    b = canonical_code(g, vertex_labels={1: "x"})
    assert a == b  # symmetric relabelling
    c = canonical_code(g, vertex_labels={0: "x", 1: "x"})
    assert a != c


def test_canonical_code_respects_edge_labels_and_order():
    g = Graph.from_edges(3, [(0, 1), (1, 2)])
    a = canonical_code(g, edge_labels={(0, 1): "t0"})
    b = canonical_code(g, edge_labels={(1, 2): "t0"})
    assert a == b
    ordered1 = Graph.from_edges(3, [(0, 1), (1, 2)], order=[0, 1, 2])
    ordered2 = Graph.from_edges(3, [(0, 1), (1, 2)], order=[2, 1, 0])
    assert canonical_code(ordered1) == canonical_code(ordered2)  # path reversal
    ordered3 = Graph.from_edges(3, [(0, 1), (1, 2)], order=[1, 0, 2])
    assert canonical_code(ordered1) != canonical_code(ordered3)


def test_exhaustive_class_counts_up_to_seven():
    # known counts of unlabelled graphs on 0..7 vertices; a collision or an
    # invariance failure in canonical_code would change these totals
    by_n = all_graphs_up_to_iso(7)
    assert [len(by_n[n]) for n in range(8)] == [1, 1, 2, 4, 11, 34, 156, 1044]


def test_disjoint_union_offsets():
    g = disjoint_union(triangle_graph(), Graph.from_edges(2, [(0, 1)]))
    assert g.n == 5 and (3, 4) in g.edges
