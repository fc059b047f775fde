import random

import pytest

from bowtielift.errors import BowtieFound, DecompositionError, NotGood
from bowtielift.good import (
    CHIMNEY,
    K4,
    Centre,
    GoodGraph,
    centres,
    check_bowtie_free_structurally,
    complete_to_good,
    decompose,
    is_good,
)
from bowtielift.graphs import (
    Graph,
    bowtie_graph,
    chimney_graph,
    complete_graph,
    contains_bowtie,
    disjoint_union,
    edge_type_partition,
    find_monomorphism,
    triangle_graph,
    triangles,
)

from helpers import random_bowtie_free_graph


def test_is_good_chimney_and_k4():
    assert is_good(chimney_graph(2)) == (True, None)
    assert is_good(complete_graph(4)) == (True, None)


def test_is_good_lone_triangle_fails():
    ok, diag = is_good(triangle_graph())
    assert not ok
    assert "component" in diag or "vertex" in diag


def test_is_good_rejects_bowtie_with_certificate():
    with pytest.raises(BowtieFound) as err:
        is_good(bowtie_graph())
    mono = err.value.payload["monomorphism"]
    assert sorted(mono.values()) == [0, 1, 2, 3, 4]


def test_decompose_c3():
    gg = decompose(chimney_graph(3))
    assert [c.kind for c in gg.components] == [CHIMNEY]
    assert gg.components[0].size == 3
    assert gg.components[0].centre == (0, 1)


def test_decompose_k4_and_c2():
    gg = decompose(disjoint_union(complete_graph(4), chimney_graph(2)))
    kinds = sorted(c.kind for c in gg.components)
    assert kinds == [CHIMNEY, K4]


def test_decompose_two_chimneys_joined_by_apex_edge():
    g = disjoint_union(chimney_graph(2), chimney_graph(2))
    joined = Graph(g.n, g.edges | {(2, 6)})  # apex of first to apex of second
    gg = decompose(joined)
    assert sorted(c.size for c in gg.components if c.kind == CHIMNEY) == [2, 2]
    assert (2, 6) in gg.e1


def test_decompose_reassembly_invariants():
    g = disjoint_union(chimney_graph(4), complete_graph(4), chimney_graph(2))
    gg = decompose(g)
    covered = []
    e0_rebuilt = set()
    for comp in gg.components:
        covered.extend(comp.vertices)
        if comp.kind == K4:
            vs = comp.vertices
            e0_rebuilt.update(
                (vs[i], vs[j]) for i in range(4) for j in range(i + 1, 4)
            )
        else:
            u, v = comp.centre
            e0_rebuilt.add((u, v))
            for a in comp.apexes:
                e0_rebuilt.add(tuple(sorted((u, a))))
                e0_rebuilt.add(tuple(sorted((v, a))))
    assert sorted(covered) == list(range(g.n))
    assert e0_rebuilt == set(gg.e0)


def test_decompose_error_names_component():
    # C2 plus an edge between apexes is K4, fine; a 5-cycle of triangles is not
    g = Graph.from_edges(6, [(0, 1), (1, 2), (0, 2), (2, 3), (3, 4), (2, 4),
                             (4, 5), (0, 5), (0, 4)])
    with pytest.raises((DecompositionError, NotGood, BowtieFound)):
        decompose(g)
        raise BowtieFound("fallthrough")


def test_complete_single_vertex_becomes_c2():
    gg = complete_to_good(Graph(1, frozenset()))
    assert gg.graph.n == 4
    assert [c.kind for c in gg.components] == [CHIMNEY]
    assert is_good(gg.graph)[0]


def test_complete_lone_triangle_adds_one_vertex():
    gg = complete_to_good(triangle_graph())
    assert gg.graph.n == 4
    comp = gg.components[0]
    assert comp.kind == CHIMNEY and comp.centre == (0, 1)
    assert sorted(comp.apexes) == [2, 3]


def test_complete_k4_fixed_point():
    gg = complete_to_good(complete_graph(4))
    assert gg.graph.n == 4 and gg.components[0].kind == K4


def test_complete_single_edge_two_chimneys():
    g = Graph.from_edges(2, [(0, 1)])
    gg = complete_to_good(g)
    assert gg.graph.n == 8
    assert (0, 1) in gg.e1
    assert sorted(c.kind for c in gg.components) == [CHIMNEY, CHIMNEY]


def test_complete_rejects_bowtie():
    with pytest.raises(BowtieFound):
        complete_to_good(bowtie_graph())


def test_complete_random_corpus():
    rng = random.Random(20240811)
    for _ in range(60):
        g = random_bowtie_free_graph(rng.randint(1, 12), rng)
        gg = complete_to_good(g)
        assert is_good(gg.graph)[0]
        assert not contains_bowtie(gg.graph)
        assert find_monomorphism(g, gg.graph) is not None
        assert g.edges <= gg.graph.edges
        for comp in gg.components:
            if comp.kind == CHIMNEY:
                assert comp.size >= 2


def test_structural_check_k4_and_chimneys():
    assert check_bowtie_free_structurally(decompose(complete_graph(4)))
    g = disjoint_union(chimney_graph(2), chimney_graph(3))
    joined = Graph(g.n, g.edges | {(2, 7), (3, 8)})
    assert check_bowtie_free_structurally(decompose(joined))


def test_structural_check_rejects_chord_between_apexes():
    # claiming the apex chord of a C2 is a type-1 edge is stale: the chord
    # closes triangles (the true graph is K4, still bowtie-free)
    base = chimney_graph(2)
    g = Graph(4, base.edges | {(2, 3)})
    stale = GoodGraph(g, edge_type_partition(base)[0], frozenset({(2, 3)}),
                      decompose(base).components)
    assert not check_bowtie_free_structurally(stale)
    assert not contains_bowtie(g)


def test_structural_check_true_implies_bowtie_free():
    rng = random.Random(5)
    for _ in range(40):
        g = random_bowtie_free_graph(rng.randint(2, 10), rng)
        gg = complete_to_good(g)
        assert check_bowtie_free_structurally(gg)
        assert not contains_bowtie(gg.graph)


def test_centres_chimney():
    c = centres(decompose(chimney_graph(3)))
    assert c.vertex_sets[2] == (0, 1) and c.vertex_sets[0] == (0, 1)
    assert c.central_flags[0] and c.central_flags[1]
    assert not any(c.central_flags[a] for a in (2, 3, 4))


def test_centres_k4_all_central():
    c = centres(decompose(complete_graph(4)))
    assert all(c.central_flags[v] for v in range(4))
    assert all(c.vertex_sets[v] == (0, 1, 2, 3) for v in range(4))


def test_centres_disjoint_union():
    g = disjoint_union(chimney_graph(2), complete_graph(4))
    c = centres(decompose(g))
    seen = {c.vertex_sets[v] for v in range(g.n)}
    assert seen == {(0, 1), (4, 5, 6, 7)}


def test_centre_disjointness_property():
    rng = random.Random(99)
    for _ in range(30):
        gg = complete_to_good(random_bowtie_free_graph(rng.randint(1, 10), rng))
        c = centres(gg)
        sets = {c.vertex_sets[v] for v in range(gg.graph.n)}
        for s1 in sets:
            for s2 in sets:
                assert s1 == s2 or not (set(s1) & set(s2))
