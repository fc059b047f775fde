import itertools
import random

import pytest

from bowtielift.good import CHIMNEY, K4, decompose
from bowtielift.graphs import chimney_graph, complete_graph, disjoint_union
from bowtielift.lifting import (
    Config,
    FLAG_NAMES,
    LiftedStructure,
    NO_FLAG,
    induced_substructure,
    lift_L2,
    random_admissible_order,
    some_admissible_order,
    structure_code,
)
from bowtielift.membership import (
    FIRST_ROOT_CENTRE,
    PAIR_SURFACE,
    Obstruction,
    TypeCatalogue,
    Witness,
    build_catalogue,
    check_pair,
    check_small,
    enumerate_pair_types,
    is_member,
    reconstruct_witness,
)

from helpers import perturb_structure, random_good_graph, random_member_substructure

# frozen after the first verified build; a change means the type enumeration
# or the code format moved and must be reviewed
EXPECTED_TYPE_COUNT = 3928


@pytest.fixture(scope="module")
def cat():
    return build_catalogue()


def two_vertex_structure(code: bytes) -> LiftedStructure:
    cfg = Config.decode(code)
    ru, rv = cfg.roots
    unary = {}
    if cfg.flags[ru] != NO_FLAG:
        unary[0] = FLAG_NAMES[cfg.flags[ru]]
    if cfg.flags[rv] != NO_FLAG:
        unary[1] = FLAG_NAMES[cfg.flags[rv]]
    tag = cfg.edge_tag(ru, rv)
    e0 = frozenset({(0, 1)}) if tag == "e0" else frozenset()
    e1 = frozenset({(0, 1)}) if tag == "e1" else frozenset()
    return LiftedStructure(2, (0, 1), unary, e0, e1, {(0, 1): code})


def test_catalogue_size_frozen(cat):
    assert len(cat.types) == EXPECTED_TYPE_COUNT
    assert len(cat.types) <= 2**25 * 25  # coarse closure-size bound
    assert list(cat.types) == sorted(cat.types)


def test_catalogue_deterministic_across_threads(cat):
    assert enumerate_pair_types(threads=4) == cat.types
    assert enumerate_pair_types(threads=1) == cat.types


def test_catalogue_save_load_roundtrip(tmp_path, cat):
    p = tmp_path / "cat.json"
    cat.save(p)
    again = TypeCatalogue.load(p)
    assert again.types == cat.types
    cat.save(tmp_path / "cat2.json")
    assert (tmp_path / "cat.json").read_bytes() == (tmp_path / "cat2.json").read_bytes()


def test_every_lift_pair_type_is_catalogued(cat):
    rng = random.Random(8)
    for _ in range(120):
        gg = random_good_graph(rng, max_n=12)
        a = lift_L2(random_admissible_order(gg, rng))
        for code in a.pair_types.values():
            assert code in cat


def test_shared_centre_apexes_with_edge_is_forbidden(cat):
    # two apexes on one chimney centre: realizable without an edge between
    # them, forbidden with one (it closes a triangle with the centre)
    base = Config(
        k=4,
        roots=(2, 3),
        flags=(1, 2, 0, 0),
        e0=frozenset({(0, 1), (0, 2), (1, 2), (0, 3), (1, 3)}),
        e1=frozenset(),
    )
    assert base.encode() in cat
    with_edge = Config(base.k, base.roots, base.flags, base.e0,
                       frozenset({(2, 3)}))
    assert with_edge.encode() not in cat
    as_e0 = Config(base.k, base.roots, base.flags,
                   base.e0 | {(2, 3)}, frozenset())
    assert as_e0.encode() not in cat  # that shape is a K4, flagged differently


def test_every_catalogued_type_is_sound(cat):
    for code in cat.types:
        a = two_vertex_structure(code)
        ok, _ = check_small(a, cat)
        assert ok
        res = reconstruct_witness(a, cat)
        assert isinstance(res, Witness)


def test_check_small_accepts_lift_substructures(cat):
    rng = random.Random(13)
    for _ in range(40):
        sub = random_member_substructure(rng, max_vertices=5)
        ok, obstruction = check_small(sub, cat)
        assert ok and obstruction is None


def test_check_small_rejects_dropped_centre_edge(cat):
    # take a same-centre pair (L, R): its type asserts a type-0 edge; the
    # surface without that edge is not realizable
    a = lift_L2(some_admissible_order(decompose(chimney_graph(2))))
    pair_key = (0, 1) if a.positions()[0] < a.positions()[1] else (1, 0)
    code = a.pair_types[pair_key]
    broken = LiftedStructure(2, (0, 1), {0: "L", 1: "R"},
                             frozenset(), frozenset(), {(0, 1): code})
    ok, obstruction = check_small(broken, cat)
    assert not ok
    assert obstruction.vertices == (0, 1)


def test_check_small_rejects_intransitive_centre_sharing(cat):
    # u=L and v=R of one chimney, w an apex: u,w share a centre and u,v do,
    # so v,w claiming different centres cannot glue
    one = lift_L2(some_admissible_order(decompose(chimney_graph(2))))
    t_uv = one.pair_types[(0, 1)]
    t_uw = one.pair_types[(0, 2)]
    two = lift_L2(some_admissible_order(decompose(
        disjoint_union(chimney_graph(2), chimney_graph(2)))))
    # R vertex of the first chimney against an apex of the second
    pos = two.positions()
    r1 = next(v for v, f in two.unary.items() if f == "R" and pos[v] == min(
        pos[x] for x, g in two.unary.items() if g == "R"))
    apex2 = max(
        (v for v in range(two.n) if v not in two.unary), key=lambda v: pos[v]
    )
    t_vw = two.pair_types[two.pair_key(r1, apex2)]
    glued = LiftedStructure(
        3, (0, 1, 2), {0: "L", 1: "R"},
        frozenset({(0, 1), (0, 2)}), frozenset(),
        {(0, 1): t_uv, (0, 2): t_uw, (1, 2): t_vw},
    )
    for u, v in itertools.combinations(range(3), 2):
        assert check_pair(glued, cat, u, v)
    ok, obstruction = check_small(glued, cat)
    assert not ok and len(obstruction.vertices) == 3


def test_witness_from_two_apexes(cat):
    a = lift_L2(some_admissible_order(decompose(chimney_graph(2))))
    apexes = sorted(v for v in range(a.n) if v not in a.unary)
    sub = induced_substructure(a, apexes)
    res = reconstruct_witness(sub, cat)
    assert isinstance(res, Witness)
    comps = res.graph.good.components
    assert [c.kind for c in comps] == [CHIMNEY]
    assert comps[0].size == 2  # both apexes revived, no fillers needed
    image = sorted(res.embedding.values())
    relift = induced_substructure(lift_L2(res.graph), image)
    assert structure_code(relift) == structure_code(sub)


def test_witness_from_single_k1_vertex(cat):
    a = LiftedStructure(1, (0,), {0: "K1"}, frozenset(), frozenset(), {})
    res = reconstruct_witness(a, cat)
    assert isinstance(res, Witness)
    assert [c.kind for c in res.graph.good.components] == [K4]
    assert res.graph.good.graph.n == 4


def test_witness_from_single_plain_vertex(cat):
    a = LiftedStructure(1, (0,), {}, frozenset(), frozenset(), {})
    res = reconstruct_witness(a, cat)
    assert isinstance(res, Witness)
    assert [c.kind for c in res.graph.good.components] == [CHIMNEY]
    assert res.graph.good.graph.n == 4  # centre pair + the vertex + one filler


def test_obstruction_for_dropped_centre_edge(cat):
    a = lift_L2(some_admissible_order(decompose(chimney_graph(2))))
    code = a.pair_types[(0, 1)]
    broken = LiftedStructure(2, (0, 1), {0: "L", 1: "R"},
                             frozenset(), frozenset(), {(0, 1): code})
    res = reconstruct_witness(broken, cat)
    assert isinstance(res, Obstruction)
    assert res.reason == PAIR_SURFACE
    assert res.vertices == (0, 1)
    member, cert = is_member(broken, cat)
    assert not member and isinstance(cert, Obstruction)


def test_double_flag_slot_conflict(cat):
    # two L-flagged vertices forced into one centre cannot coexist
    one = lift_L2(some_admissible_order(decompose(chimney_graph(2))))
    t_lr = one.pair_types[(0, 1)]
    two = lift_L2(some_admissible_order(decompose(
        disjoint_union(chimney_graph(2), chimney_graph(2)))))
    l1, l2 = sorted(v for v, f in two.unary.items() if f == "L")
    t_ll = two.pair_types[two.pair_key(l1, l2)]
    pos = two.positions()
    r2 = next(v for v, f in two.unary.items() if f == "R" and pos[v] > pos[l2])
    # structure: 0=L, 1=L, 2=R; claim 0,2 same centre and 1,2 same centre
    t_lr_cross = two.pair_types[two.pair_key(l1, r2)]
    glued = LiftedStructure(
        3, (0, 1, 2), {0: "L", 1: "L", 2: "R"},
        frozenset({(1, 2)}), frozenset(),
        {(0, 1): t_ll, (0, 2): t_lr_cross, (1, 2): t_lr},
    )
    cs, _ = check_small(glued, cat)
    member, cert = is_member(glued, cat)
    assert cs == member
    if not member:
        sub = induced_substructure(glued, cert.vertices)
        ok, _ = check_small(sub, cat)
        assert not ok


def test_equivalence_on_perturbed_structures(cat):
    rng = random.Random(20250810)
    members = nonmembers = 0
    for _ in range(1200):
        base = random_member_substructure(rng, max_vertices=4)
        a = perturb_structure(base, cat.types, rng) if rng.random() < 0.8 else base
        cs, _ = check_small(a, cat)
        im, cert = is_member(a, cat)
        assert cs == im
        if im:
            members += 1
        else:
            nonmembers += 1
            sub = induced_substructure(a, cert.vertices)
            ok, _ = check_small(sub, cat)
            assert not ok
    assert members > 100 and nonmembers > 100


def test_soundness_on_random_lifts(cat):
    rng = random.Random(3)
    for _ in range(60):
        sub = random_member_substructure(rng, max_vertices=6)
        member, witness = is_member(sub, cat)
        assert member
        relift = lift_L2(witness.graph)
        image = sorted(witness.embedding[x] for x in range(sub.n))
        assert structure_code(induced_substructure(relift, image)) == structure_code(sub)
