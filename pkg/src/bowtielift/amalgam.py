"""Free amalgamation over centres, amalgamation of lifts, and a seeded
generic-structure sampler.

Two good graphs glue freely over a partial isomorphism of whole vertex-centres;
chimneys with identified centres pool their apexes.  Lifts amalgamate by
rebuilding witnesses, identifying the base's vertices together with their
closures (centre members matched role by role), merging the two admissible
orders around the shared anchors, and re-lifting.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass

from .errors import BowtieFound, DecompositionError, NotGood, StructureError
from .good import CHIMNEY, GoodGraph, centres, decompose
from .graphs import Graph, edge
from .lifting import (
    LiftedStructure,
    OrderedGoodGraph,
    is_admissible,
    lift_L2,
    random_admissible_order,
)
from .membership import TypeCatalogue, Witness, reconstruct_witness


def _validate_centre_map(g1: GoodGraph, g2: GoodGraph, f: dict[int, int]) -> None:
    c1, c2 = centres(g1), centres(g2)
    domain = set(f)
    if len(set(f.values())) != len(f):
        raise StructureError("centre map is not injective")
    for x in domain:
        if not c1.central_flags.get(x):
            raise StructureError("centre map domain contains a non-central vertex",
                                 vertex=x)
        if not c2.central_flags.get(f[x]):
            raise StructureError("centre map image contains a non-central vertex",
                                 vertex=f[x])
        mine = set(c1.vertex_sets[x])
        if not mine <= domain:
            raise StructureError("centre map must cover whole vertex-centres",
                                 centre=sorted(mine))
        if {f[y] for y in mine} != set(c2.vertex_sets[f[x]]):
            raise StructureError("centre map does not respect centre boundaries",
                                 vertex=x)
    for x, y in itertools.combinations(sorted(domain), 2):
        tag1 = "e0" if edge(x, y) in g1.e0 else "e1" if edge(x, y) in g1.e1 else "none"
        fx, fy = f[x], f[y]
        tag2 = "e0" if edge(fx, fy) in g2.e0 else "e1" if edge(fx, fy) in g2.e1 else "none"
        if tag1 != tag2:
            raise StructureError("centre map does not preserve edges",
                                 pair=[x, y])


def amalgamate_centres(g1: GoodGraph, g2: GoodGraph, f: dict[int, int]) -> GoodGraph:
    """Free amalgam of two good graphs glued along a centre isomorphism.

    `f` maps whole vertex-centres of g1 onto vertex-centres of g2 (possibly
    none of them).  Chimneys whose centres are identified merge into one
    bigger chimney; the result is re-decomposed and must come out good.
    """
    _validate_centre_map(g1, g2, f)
    inverse = {v: k for k, v in f.items()}
    n = g1.graph.n
    relabel: dict[int, int] = {}
    for v in range(g2.graph.n):
        if v in inverse:
            relabel[v] = inverse[v]
        else:
            relabel[v] = n
            n += 1
    merged = set(g1.graph.edges)
    merged |= {edge(relabel[u], relabel[v]) for u, v in g2.graph.edges}
    try:
        return decompose(Graph(n, frozenset(merged)))
    except (NotGood, DecompositionError, BowtieFound) as err:
        raise StructureError(
            "free amalgam over the given centre map is not good", **err.payload
        ) from err


def _merge_anchored(s1: list, s2: list, shared: set) -> list:
    """Merge two sequences sharing an ordered set of anchors.

    Elements of s2 between anchors land after the corresponding s1 segment;
    both input orders are preserved.
    """
    out: list = []
    i2 = 0
    for x in s1:
        if x in shared:
            while i2 < len(s2) and s2[i2] != x:
                if s2[i2] in shared:
                    raise StructureError("shared elements ordered differently")
                out.append(s2[i2])
                i2 += 1
            if i2 == len(s2):
                raise StructureError("anchor missing from the second sequence")
            i2 += 1
        out.append(x)
    while i2 < len(s2):
        if s2[i2] in shared:
            raise StructureError("shared elements ordered differently")
        out.append(s2[i2])
        i2 += 1
    return out


def _check_induced(a: LiftedStructure, b: LiftedStructure, emb: dict[int, int],
                   label: str) -> None:
    pos_a, pos_b = a.positions(), b.positions()
    for x in range(a.n):
        if b.unary.get(emb[x], "") != a.unary.get(x, ""):
            raise StructureError(f"embedding into {label} breaks a flag", vertex=x)
    for x, y in itertools.combinations(range(a.n), 2):
        if (pos_a[x] < pos_a[y]) != (pos_b[emb[x]] < pos_b[emb[y]]):
            raise StructureError(f"embedding into {label} breaks the order")
        key_a = a.pair_key(x, y)
        key_b = b.pair_key(emb[x], emb[y])
        if a.pair_types.get(key_a) != b.pair_types.get(key_b):
            raise StructureError(f"embedding into {label} breaks a pair type",
                                 pair=[x, y])


@dataclass(frozen=True)
class LiftAmalgam:
    structure: LiftedStructure
    left_embedding: dict[int, int]
    right_embedding: dict[int, int]


def amalgamate_lifts(a: LiftedStructure, b1: LiftedStructure, b2: LiftedStructure,
                     emb1: dict[int, int], emb2: dict[int, int],
                     cat: TypeCatalogue) -> LiftAmalgam:
    """Amalgamate two member structures over a common substructure.

    Witnesses are rebuilt, the base's vertices and their closure centres are
    identified (roles matching), everything else stays disjoint, and the two
    admissible orders merge around the shared anchors.  Identification beyond
    the base's image touches central vertices only.
    """
    _check_induced(a, b1, emb1, "left")
    _check_induced(a, b2, emb2, "right")
    res1 = reconstruct_witness(b1, cat)
    res2 = reconstruct_witness(b2, cat)
    if not isinstance(res1, Witness) or not isinstance(res2, Witness):
        raise StructureError("amalgamation inputs must be members")
    w1, w2 = res1, res2
    og1, og2 = w1.graph, w2.graph
    comp1, comp2 = og1.good.component_of(), og2.good.component_of()
    lift1 = lift_L2(og1)

    ident: dict[int, int] = {}

    def identify(v2: int, v1: int) -> None:
        if ident.setdefault(v2, v1) != v1:
            raise StructureError("base embeddings identify one vertex twice",
                                 vertex=v2)

    pos1, pos2 = og1.positions(), og2.positions()
    for x in range(a.n):
        u1 = w1.embedding[emb1[x]]
        u2 = w2.embedding[emb2[x]]
        identify(u2, u1)
        k1, k2 = comp1[u1], comp2[u2]
        if k1.kind != k2.kind:
            raise StructureError("witness centres disagree over the base", vertex=x)
        m1 = sorted(k1.centre, key=lambda v: pos1[v])
        m2 = sorted(k2.centre, key=lambda v: pos2[v])
        for v1, v2 in zip(m1, m2):
            identify(v2, v1)

    n = og1.good.graph.n
    relabel: dict[int, int] = {}
    for v in range(og2.good.graph.n):
        if v in ident:
            relabel[v] = ident[v]
        else:
            relabel[v] = n
            n += 1

    def centre_key(comp, side):
        members = comp.centre
        if side == 1:
            return tuple(sorted(members))
        return tuple(sorted(relabel[v] for v in members))

    chim1 = [c for c in sorted(
        (c for c in og1.good.components if c.kind == CHIMNEY),
        key=lambda c: min(pos1[v] for v in c.centre))]
    chim2 = [c for c in sorted(
        (c for c in og2.good.components if c.kind == CHIMNEY),
        key=lambda c: min(pos2[v] for v in c.centre))]
    k4s1 = [c for c in sorted(
        (c for c in og1.good.components if c.kind != CHIMNEY),
        key=lambda c: min(pos1[v] for v in c.centre))]
    k4s2 = [c for c in sorted(
        (c for c in og2.good.components if c.kind != CHIMNEY),
        key=lambda c: min(pos2[v] for v in c.centre))]

    keys1 = {centre_key(c, 1): c for c in og1.good.components}
    keys2 = {centre_key(c, 2): c for c in og2.good.components}
    shared_keys = set(keys1) & set(keys2)

    chim_seq = _merge_anchored([centre_key(c, 1) for c in chim1],
                               [centre_key(c, 2) for c in chim2], shared_keys)
    k4_seq = _merge_anchored([centre_key(c, 1) for c in k4s1],
                             [centre_key(c, 2) for c in k4s2], shared_keys)

    def block(key) -> list[int]:
        apexes1 = []
        apexes2 = []
        if key in keys1:
            apexes1 = sorted(keys1[key].apexes, key=lambda v: pos1[v])
        if key in keys2:
            apexes2 = [relabel[v] for v in
                       sorted(keys2[key].apexes, key=lambda v: pos2[v])]
        shared_apexes = set(apexes1) & set(apexes2)
        return _merge_anchored(apexes1, apexes2, shared_apexes)

    def members(key) -> list[int]:
        if key in keys1:
            return sorted(keys1[key].centre, key=lambda v: pos1[v])
        return [relabel[v] for v in
                sorted(keys2[key].centre, key=lambda v: pos2[v])]

    order: list[int] = []
    for key in chim_seq:
        order.extend(members(key))
    for key in k4_seq:
        order.extend(members(key))
    for key in chim_seq:
        order.extend(block(key))

    merged_edges = set(og1.good.graph.edges)
    merged_edges |= {edge(relabel[u], relabel[v]) for u, v in og2.good.graph.edges}
    try:
        gg = decompose(Graph(n, frozenset(merged_edges)))
    except (NotGood, DecompositionError, BowtieFound) as err:
        raise StructureError("lift amalgam is not good", **err.payload) from err
    ok, why = is_admissible(gg, tuple(order))
    if not ok:
        raise StructureError("lift amalgam order is not admissible", **(why or {}))
    og = OrderedGoodGraph(gg, tuple(order))
    out = lift_L2(og)

    left = {y: w1.embedding[y] for y in range(b1.n)}
    right = {y: relabel[w2.embedding[y]] for y in range(b2.n)}
    _check_induced(b1, out, left, "amalgam")
    _check_induced(b2, out, right, "amalgam")
    # strongness: anything identified beyond the base's image is central
    base_image = {w1.embedding[emb1[x]] for x in range(a.n)}
    central = centres(gg).central_flags
    for v2, v1 in ident.items():
        if v1 not in base_image:
            assert central[v1], "non-central vertex identified outside the base"
    del lift1
    return LiftAmalgam(out, left, right)


def random_extension(gg: GoodGraph, rng: random.Random, steps: int,
                     size_cap: int) -> GoodGraph:
    """Grow a good graph by fresh chimneys/K4s, apexes and safe type-1 edges.

    Existing vertices keep their indices and existing pair closures are
    untouched, so lifts of the result induce lifts of the input.
    """
    edges = set(gg.graph.edges)
    n = gg.graph.n
    chimney_centres = [c.centre for c in gg.components if c.kind == CHIMNEY]
    adj: dict[int, set[int]] = {v: set() for v in range(n)}
    for u, v in edges:
        adj[u].add(v)
        adj[v].add(u)

    def add_edge(u, v):
        edges.add(edge(u, v))
        adj.setdefault(u, set()).add(v)
        adj.setdefault(v, set()).add(u)

    def add_safe_e1(w):
        candidates = [v for v in range(w) if v not in adj[w]]
        rng.shuffle(candidates)
        for v in candidates[:2]:
            if rng.random() < 0.4 and not (adj[w] & adj[v]):
                add_edge(w, v)

    for _ in range(steps):
        moves = []
        if n + 4 <= size_cap:
            moves += ["c2", "k4"]
        if chimney_centres and n + 1 <= size_cap:
            moves.append("apex")
        if not moves:
            break
        move = rng.choice(moves)
        if move == "apex":
            c1, c2 = rng.choice(chimney_centres)
            w = n
            n += 1
            adj[w] = set()
            add_edge(w, c1)
            add_edge(w, c2)
            add_safe_e1(w)
        elif move == "c2":
            c1, c2, a1, a2 = n, n + 1, n + 2, n + 3
            n += 4
            for w in (c1, c2, a1, a2):
                adj[w] = set()
            add_edge(c1, c2)
            for apex in (a1, a2):
                add_edge(apex, c1)
                add_edge(apex, c2)
            chimney_centres.append((c1, c2))
            for w in (c1, c2, a1, a2):
                add_safe_e1(w)
        else:
            quad = list(range(n, n + 4))
            n += 4
            for w in quad:
                adj[w] = set()
            for u, v in itertools.combinations(quad, 2):
                add_edge(u, v)
            for w in quad:
                add_safe_e1(w)
    return decompose(Graph(n, frozenset(edges)))


def generic_sample(steps: int, seed: int, size_cap: int = 24) -> LiftedStructure:
    """Seeded iterated growth approximating a generic member structure."""
    rng = random.Random(seed)
    gg = decompose(Graph(0, frozenset()))
    gg = random_extension(gg, rng, steps, size_cap)
    og = random_admissible_order(gg, rng)
    return lift_L2(og)
