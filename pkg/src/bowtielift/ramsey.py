"""Partite Ramsey machinery over reduced structures.

Star partitions stand in for chimney membership on incomplete structures; the
grid construction powers a partite lemma whose dimension is a parameter (the
true Hales-Jewett number is astronomically large outside degenerate cases,
so the arrow is verified exhaustively only where that is feasible); pictures
iterate the construction over a supplied base; the completion turns a reduced
structure back into a full lift; and gadget expansions pad a graph's minimal
good extensions with order-witnessing vertices.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field

from .errors import BudgetExceeded, InconsistentStructure, StructureError
from .good import CHIMNEY, K4, GoodGraph, decompose
from .graphs import Graph, canonical_code, edge
from .lifting import (
    CHIMNEY_FLAGS,
    Config,
    FLAG_NAMES,
    K4_FLAGS,
    LiftedStructure,
    NO_FLAG,
    OrderedGoodGraph,
    ReducedStructure,
    induced_substructure,
    is_admissible,
    lift_L1,
    lift_L2,
    pair_type,
    reduce_structure,
    relabel_by_order,
    structure_code,
)
from .membership import TypeCatalogue, check_pair, _glue_triple


# --- star equivalence ---------------------------------------------------------

@dataclass(frozen=True)
class StarPartition:
    """Blocks of the type-0 star forest, each with its centre vertex."""

    blocks: tuple[tuple[int, ...], ...]
    centre_of: dict[tuple[int, ...], int]

    def block_of(self) -> dict[int, tuple[int, ...]]:
        out: dict[int, tuple[int, ...]] = {}
        for b in self.blocks:
            for v in b:
                out[v] = b
        return out

    def centre_map(self) -> dict[int, int]:
        """Vertex to its star centre (itself for singletons)."""
        out: dict[int, int] = {}
        for b in self.blocks:
            c = self.centre_of[b]
            for v in b:
                out[v] = c
        return out


def star_partition(a: LiftedStructure) -> StarPartition:
    """Partition by the components of the type-0 edges, which must form a
    star forest whose centres carry the L flags."""
    adj: dict[int, set[int]] = {v: set() for v in range(a.n)}
    for u, v in a.e0:
        adj[u].add(v)
        adj[v].add(u)
    pos = a.positions()
    seen: set[int] = set()
    blocks: list[tuple[int, ...]] = []
    centre_of: dict[tuple[int, ...], int] = {}
    for start in range(a.n):
        if start in seen:
            continue
        stack, comp = [start], set()
        while stack:
            x = stack.pop()
            if x in comp:
                continue
            comp.add(x)
            stack.extend(adj[x] - comp)
        seen |= comp
        block = tuple(sorted(comp))
        if len(block) == 1:
            centre = block[0]
        else:
            hubs = [v for v in block if len(adj[v]) == len(block) - 1]
            leaves = [v for v in block if len(adj[v]) == 1]
            if len(block) == 2:
                flagged = [v for v in block if a.unary.get(v) == "L"]
                if len(flagged) > 1:
                    raise StructureError("two star centres joined by a type-0 edge",
                                         block=list(block))
                centre = flagged[0] if flagged else min(block, key=lambda v: pos[v])
            else:
                if len(hubs) != 1 or len(leaves) != len(block) - 1:
                    raise StructureError(
                        "type-0 edges do not form a star forest", block=list(block)
                    )
                centre = hubs[0]
        for v in block:
            if a.unary.get(v) == "L" and v != centre:
                raise StructureError("an L vertex is a star leaf",
                                     vertex=v, block=list(block))
        blocks.append(block)
        centre_of[block] = centre
    return StarPartition(tuple(blocks), centre_of)


# --- partite systems ------------------------------------------------------------

@dataclass(frozen=True)
class PartiteSystem:
    """Structure partitioned over the vertices of a base, with a monotone
    projection and transversal relations."""

    base: ReducedStructure
    parts: tuple[tuple[int, ...], ...]
    body: LiftedStructure

    def part_of(self) -> dict[int, int]:
        out: dict[int, int] = {}
        for i, part in enumerate(self.parts):
            for v in part:
                out[v] = i
        return out

    def part_sizes(self) -> list[int]:
        return [len(p) for p in self.parts]


def validate_partite(sys: PartiteSystem) -> None:
    base, body = sys.base, sys.body
    if base.order != tuple(range(base.n)):
        raise StructureError("partite base must carry the natural order")
    part_of = sys.part_of()
    if sorted(part_of) != list(range(body.n)) or len(sys.parts) != base.n:
        raise StructureError("parts do not partition the body")
    pos = body.positions()
    ranked = sorted(range(body.n), key=lambda v: pos[v])
    if [part_of[v] for v in ranked] != sorted(part_of[v] for v in ranked):
        raise StructureError("body order is not part-major")
    for v, f in body.unary.items():
        if base.unary.get(part_of[v]) != f:
            raise StructureError("projection breaks a unary relation", vertex=v)
    for u, v in body.e0 | body.e1:
        i, j = part_of[u], part_of[v]
        if i == j:
            raise StructureError("relation tuple meets a part twice", pair=[u, v])
        tag = body.edge_tag(u, v)
        if base.edge_tag(i, j) != tag:
            raise StructureError("projection breaks an edge", pair=[u, v])
    for (u, v), code in body.pair_types.items():
        i, j = part_of[u], part_of[v]
        if i == j:
            raise StructureError("typed pair meets a part twice", pair=[u, v])
        key = base.pair_key(i, j)
        if base.pair_types.get(key) != code:
            raise StructureError("projection breaks a pair type", pair=[u, v])


def as_partite(a: ReducedStructure) -> PartiteSystem:
    """A structure viewed as a partite system over itself, singleton parts."""
    nat = relabel_by_order(a)
    return PartiteSystem(nat, tuple((i,) for i in range(nat.n)), nat)


def _related(body: LiftedStructure, x: int, y: int) -> bool:
    return (edge(x, y) in body.e0 or edge(x, y) in body.e1
            or body.pair_types.get(body.pair_key(x, y)) is not None)


def _induced_matches(sub: LiftedStructure, host: LiftedStructure,
                     image: list[int]) -> bool:
    for j, x in enumerate(image):
        if host.unary.get(x, "") != sub.unary.get(j, ""):
            return False
    for j, k in itertools.combinations(range(sub.n), 2):
        x, y = image[j], image[k]
        if host.edge_tag(x, y) != sub.edge_tag(j, k):
            return False
        if host.pair_types.get(host.pair_key(x, y)) != \
                sub.pair_types.get(sub.pair_key(j, k)):
            return False
    return True


def copies_of_base(base: ReducedStructure, sys: PartiteSystem) -> list[tuple[int, ...]]:
    """Part-preserving copies of the base inside a partite system.

    Vertex j of the base may only land in part j; the body's part-major order
    then makes every such copy automatically order-preserving.
    """
    body = sys.body
    image: list[int] = []
    out: list[tuple[int, ...]] = []

    def rec(j: int):
        if j == base.n:
            out.append(tuple(image))
            return
        for x in sys.parts[j]:
            if body.unary.get(x, "") != base.unary.get(j, ""):
                continue
            ok = True
            for k, y in enumerate(image):
                if body.edge_tag(y, x) != base.edge_tag(k, j) or \
                        body.pair_types.get(body.pair_key(y, x)) != \
                        base.pair_types.get(base.pair_key(k, j)):
                    ok = False
                    break
            if ok:
                image.append(x)
                rec(j + 1)
                image.pop()

    rec(0)
    return out


def copies_in_structure(sub: LiftedStructure, host: LiftedStructure,
                        allowed: list[list[int]] | None = None) -> list[tuple[int, ...]]:
    """Order-preserving induced copies; `allowed` restricts candidates per
    sub-vertex (used for part constraints)."""
    sub = relabel_by_order(sub)
    pos = host.positions()
    ranked = sorted(range(host.n), key=lambda v: pos[v])
    image: list[int] = []
    out: list[tuple[int, ...]] = []

    def rec(j: int):
        if j == sub.n:
            out.append(tuple(image))
            return
        for x in (allowed[j] if allowed is not None else ranked):
            if image and pos[x] <= pos[image[-1]]:
                continue
            if host.unary.get(x, "") != sub.unary.get(j, ""):
                continue
            ok = True
            for k, y in enumerate(image):
                if host.edge_tag(y, x) != sub.edge_tag(k, j) or \
                        host.pair_types.get(host.pair_key(y, x)) != \
                        sub.pair_types.get(sub.pair_key(k, j)):
                    ok = False
                    break
            if ok:
                image.append(x)
                rec(j + 1)
                image.pop()

    rec(0)
    return out


# --- the grid construction -------------------------------------------------------

def partite_lemma_construct(a: ReducedStructure, b: PartiteSystem,
                            n: int) -> PartiteSystem:
    """Power construction: part i of the output holds all n-tuples over part i
    of the input; tuples are related when every coordinate is related inside
    one copy of the base, or when they are constant on the (nonempty) set of
    coordinates lying in no common copy and related there.
    """
    if n < 1:
        raise ValueError("grid dimension must be at least 1")
    validate_partite(b)
    nat_a = relabel_by_order(a)
    if structure_code(nat_a) != structure_code(b.base):
        raise StructureError("partite system is not over the given base")
    body = b.body
    part_of = b.part_of()
    copies = copies_of_base(nat_a, b)
    in_copy: dict[int, set[int]] = {v: set() for v in range(body.n)}
    for ci, image in enumerate(copies):
        for v in image:
            in_copy[v].add(ci)
    uncovered = [v for v in range(body.n) if not in_copy[v]]
    if uncovered:
        raise StructureError("every body vertex must lie in a copy of the base",
                             vertices=uncovered)

    pos = body.positions()
    part_lists = [sorted(p, key=lambda v: pos[v]) for p in b.parts]
    new_parts: list[list[int]] = []
    vertex_tuple: list[tuple[int, ...]] = []
    order: list[int] = []
    for i, plist in enumerate(part_lists):
        ids = []
        for tup in itertools.product(plist, repeat=n):
            ids.append(len(vertex_tuple))
            vertex_tuple.append(tup)
            order.append(ids[-1])
        new_parts.append(ids)

    def cocopy(x: int, y: int) -> bool:
        return bool(in_copy[x] & in_copy[y])

    def related_tags(x: int, y: int):
        tags = []
        t = body.edge_tag(x, y)
        if t != "none":
            tags.append(t)
        code = body.pair_types.get(body.pair_key(x, y))
        if code is not None:
            tags.append(code)
        return tags

    def grid_relations(f: int, g: int):
        """Tags holding between two tuple-vertices, by the two grid rules."""
        fx, gx = vertex_tuple[f], vertex_tuple[g]
        non_cocopy = [l for l in range(n) if not cocopy(fx[l], gx[l])]
        if not non_cocopy:
            # rule (a): outside a shared copy nowhere; per-coordinate relations
            out = None
            for l in range(n):
                tags = set(related_tags(fx[l], gx[l]))
                out = tags if out is None else out & tags
                if not out:
                    return set()
            return out
        # rule (b): constant on the uncovered coordinates, related there
        xs = {fx[l] for l in non_cocopy}
        ys = {gx[l] for l in non_cocopy}
        if len(xs) != 1 or len(ys) != 1:
            return set()
        x0, y0 = next(iter(xs)), next(iter(ys))
        return set(related_tags(x0, y0))

    unary: dict[int, str] = {}
    for f, tup in enumerate(vertex_tuple):
        flags = {body.unary.get(x, "") for x in tup}
        if len(flags) == 1 and flags != {""}:
            unary[f] = next(iter(flags))

    e0: set[tuple[int, int]] = set()
    e1: set[tuple[int, int]] = set()
    types: dict[tuple[int, int], bytes] = {}
    ordered_ids = list(range(len(vertex_tuple)))  # id order is part-major already
    for f, g in itertools.combinations(ordered_ids, 2):
        tags = grid_relations(f, g)
        for tag in tags:
            if tag == "e0":
                e0.add(edge(f, g))
            elif tag == "e1":
                e1.add(edge(f, g))
            else:
                types[(f, g)] = tag

    grid_body = ReducedStructure(
        n=len(vertex_tuple),
        order=tuple(order),
        unary=unary,
        e0=frozenset(e0),
        e1=frozenset(e1),
        pair_types=types,
    )
    out = PartiteSystem(b.base, tuple(tuple(p) for p in new_parts), grid_body)
    validate_partite(out)
    return out


def grid_star_classes(b: PartiteSystem, c: PartiteSystem, n: int) -> list[list[int]]:
    """The expected star classes of a grid output: tuples are equivalent when
    their coordinates share star centres in the input body."""
    s_map = star_partition(b.body).centre_map()
    tuples = {}
    # reconstruct tuple contents from part-major id layout
    pos = b.body.positions()
    part_lists = [sorted(p, key=lambda v: pos[v]) for p in b.parts]
    vid = 0
    classes: dict[tuple, list[int]] = {}
    for plist in part_lists:
        for tup in itertools.product(plist, repeat=n):
            key = tuple(s_map[x] for x in tup)
            classes.setdefault(key, []).append(vid)
            vid += 1
    del tuples
    return sorted(classes.values())


# --- Hales-Jewett ------------------------------------------------------------------

def combinatorial_lines(t: int, n: int) -> list[tuple[tuple[int, ...], ...]]:
    """All combinatorial lines of the n-cube over {0..t-1}; a line fixes some
    coordinates and moves the rest together through the alphabet."""
    lines = []
    for template in itertools.product([*range(t), "*"], repeat=n):
        if "*" not in template:
            continue
        line = tuple(
            tuple(a if c == "*" else c for c in template) for a in range(t)
        )
        lines.append(line)
    return lines


def _point_index(point: tuple[int, ...], t: int) -> int:
    out = 0
    for c in point:
        out = out * t + c
    return out


def line_free_colouring(t: int, r: int, n: int) -> tuple[int, ...] | None:
    """An r-colouring of the n-cube without a monochromatic line, if any."""
    lines = [
        tuple(_point_index(p, t) for p in line) for line in combinatorial_lines(t, n)
    ]
    for colouring in itertools.product(range(r), repeat=t ** n):
        if all(len({colouring[i] for i in line}) > 1 for line in lines):
            return colouring
    return None


def hales_jewett_number(t: int, r: int, cap: int) -> int | None:
    """Least dimension below the cap forcing a monochromatic line, by
    exhaustive search over all colourings."""
    if t < 1 or r < 1:
        raise ValueError("alphabet and colour counts must be positive")
    for n in range(1, cap + 1):
        if line_free_colouring(t, r, n) is None:
            return n
    return None


# --- arrow verification ---------------------------------------------------------------

def verify_arrow(c: PartiteSystem, b: PartiteSystem, a: ReducedStructure,
                 colourings_cap: int = 1 << 20) -> bool:
    """Exhaustively check that every 2-colouring of the base-copies in `c`
    admits a part-preserving copy of `b` whose base-copies are monochromatic
    and whose embedding carries star classes into star classes."""
    nat_a = relabel_by_order(a)
    a_copies = copies_of_base(nat_a, c)
    m = len(a_copies)
    if 2 ** m > colourings_cap:
        raise BudgetExceeded("too many colourings to enumerate",
                             copies=m, cap=colourings_cap)
    part_of_c = c.part_of()
    pos_c = c.body.positions()
    allowed = [
        sorted(c.parts[part_of_b], key=lambda v: pos_c[v])
        for part_of_b in (b.part_of()[x] for x in _body_order(b))
    ]
    b_nat = relabel_by_order(b.body)
    b_copies = copies_in_structure(b_nat, c.body, allowed)

    star_b = star_partition(b.body).centre_map()
    star_c = star_partition(c.body).centre_map()
    rank_b = {x: i for i, x in enumerate(_body_order(b))}
    good_copies = []
    for image in b_copies:
        ok = True
        for x, y in itertools.combinations(range(len(image)), 2):
            bx, by = _body_order(b)[x], _body_order(b)[y]
            if (star_b[bx] == star_b[by]) and (star_c[image[x]] != star_c[image[y]]):
                ok = False
                break
        if ok:
            good_copies.append(image)

    copy_index = {img: i for i, img in enumerate(a_copies)}
    inside: list[list[int]] = []
    for image in good_copies:
        vertex_set = set(image)
        inside.append([i for i, img in enumerate(a_copies)
                       if set(img) <= vertex_set])

    for bits in range(2 ** m):
        hit = False
        for contained in inside:
            colours = {(bits >> i) & 1 for i in contained}
            if len(colours) <= 1:
                hit = True
                break
        if not hit:
            return False
    return True


def _body_order(sys: PartiteSystem) -> list[int]:
    pos = sys.body.positions()
    return sorted(range(sys.body.n), key=lambda v: pos[v])


# --- the picture iteration -------------------------------------------------------------

@dataclass
class ConstructionBudget:
    max_vertices: int = 4000
    max_pictures: int = 64
    hj_cap: int = 4
    colourings_cap: int = 1 << 20


def _check_incomplete(body: LiftedStructure, cat: TypeCatalogue) -> None:
    """Every related pair must carry a full bundle (edge verdict plus type)
    and every fully typed small substructure must be realizable."""
    seq = _ranked(body)
    for u, v in itertools.combinations(seq, 2):
        code = body.pair_types.get((u, v))
        tagged = body.edge_tag(u, v) != "none"
        if code is None:
            if tagged:
                raise StructureError("edge without a pair type", pair=[u, v])
            continue
        if not check_pair(body, cat, u, v):
            raise StructureError("unrealizable pair in a picture", pair=[u, v])
    for u, v, w in itertools.combinations(seq, 3):
        if all(body.pair_types.get(p) is not None
               for p in ((u, v), (u, w), (v, w))):
            if not _glue_triple(body, cat, u, v, w):
                raise StructureError("unrealizable triple in a picture",
                                     triple=[u, v, w])


def _ranked(body: LiftedStructure) -> list[int]:
    pos = body.positions()
    return sorted(range(body.n), key=lambda v: pos[v])


@dataclass(frozen=True)
class _Picture:
    """A partite system over the construction base plus provenance counters."""

    system: PartiteSystem
    index: int


def partite_construction(a: ReducedStructure, b: ReducedStructure,
                         c0: ReducedStructure,
                         budget: ConstructionBudget | None = None,
                         cat: TypeCatalogue | None = None) -> ReducedStructure:
    """Iterate pictures over the base `c0`, one per copy of `a` in it.

    `c0` is trusted to arrow (b over a) for colourings of copies; the output
    is the final picture's body.  Raises BudgetExceeded (carrying the last
    completed picture) when the sizes run away, which is the expected outcome
    for anything beyond degenerate inputs.
    """
    budget = budget or ConstructionBudget()
    a = relabel_by_order(a)
    b = relabel_by_order(b)
    c0 = relabel_by_order(c0)
    if structure_code(a) == structure_code(b):
        return c0

    a_copies_in_c0 = copies_in_structure(a, c0)
    b_copies_in_c0 = copies_in_structure(b, c0)
    if not b_copies_in_c0:
        raise StructureError("the base contains no copy of b")

    # picture 0: disjoint copies of b, annotated with their projections
    vertices: list[int] = []
    projection: list[int] = []
    unary: dict[int, str] = {}
    e0: set[tuple[int, int]] = set()
    e1: set[tuple[int, int]] = set()
    types: dict[tuple[int, int], bytes] = {}
    for image in b_copies_in_c0:
        base_id = len(projection)
        for j, target in enumerate(image):
            projection.append(target)
            if b.unary.get(j):
                unary[base_id + j] = b.unary[j]
        for (j, k), code in b.pair_types.items():
            types[(base_id + j, base_id + k)] = code
        for j, k in itertools.combinations(range(b.n), 2):
            tag = b.edge_tag(j, k)
            if tag == "e0":
                e0.add((base_id + j, base_id + k))
            elif tag == "e1":
                e1.add((base_id + j, base_id + k))
    picture = _assemble_picture(c0, projection, unary, e0, e1, types)

    for index, a_image in enumerate(a_copies_in_c0):
        if index >= budget.max_pictures:
            raise BudgetExceeded("picture budget exhausted",
                                 pictures_done=index,
                                 partial=picture)
        picture = _picture_step(a, picture, a_image, budget, cat)
        if picture.body.n > budget.max_vertices:
            raise BudgetExceeded("vertex budget exhausted",
                                 pictures_done=index + 1,
                                 partial=picture)
        if cat is not None:
            _check_incomplete(picture.body, cat)
            star_partition(picture.body)
    return picture.body


def _assemble_picture(c0: ReducedStructure, projection: list[int],
                      unary, e0, e1, types) -> PartiteSystem:
    order = sorted(range(len(projection)), key=lambda v: (projection[v], v))
    rename = {v: i for i, v in enumerate(order)}
    parts: list[list[int]] = [[] for _ in range(c0.n)]
    for v, target in enumerate(projection):
        parts[target].append(rename[v])
    body = ReducedStructure(
        n=len(projection),
        order=tuple(range(len(projection))),
        unary={rename[v]: f for v, f in unary.items()},
        e0=frozenset(tuple(sorted((rename[u], rename[v]))) for u, v in e0),
        e1=frozenset(tuple(sorted((rename[u], rename[v]))) for u, v in e1),
        pair_types={
            tuple(sorted((rename[u], rename[v]))): code
            for (u, v), code in types.items()
        },
    )
    sys = PartiteSystem(c0, tuple(tuple(sorted(p)) for p in parts), body)
    validate_partite(sys)
    return sys


def _picture_step(a: ReducedStructure, picture: PartiteSystem,
                  a_image: tuple[int, ...], budget: ConstructionBudget,
                  cat: TypeCatalogue | None) -> PartiteSystem:
    body = picture.body
    part_of = picture.part_of()
    pos = body.positions()

    allowed = [sorted(picture.parts[a_image[j]], key=lambda v: pos[v])
               for j in range(a.n)]
    a_copies = copies_in_structure(a, body, allowed)
    involved = sorted({v for img in a_copies for v in img}, key=lambda v: pos[v])
    if not involved:
        return picture

    sub_index = {v: i for i, v in enumerate(sorted(involved))}
    b_i_body = induced_substructure(body, involved)
    b_i_parts: list[list[int]] = [[] for _ in range(a.n)]
    slot_of_part = {a_image[j]: j for j in range(a.n)}
    for v in involved:
        b_i_parts[slot_of_part[part_of[v]]].append(sub_index[v])
    b_i = PartiteSystem(relabel_by_order(a),
                        tuple(tuple(sorted(p)) for p in b_i_parts),
                        relabel_by_order(b_i_body) if False else b_i_body)
    validate_partite(b_i)

    t = len(copies_of_base(relabel_by_order(a), b_i))
    n_grid = hales_jewett_number(max(t, 1), 2, budget.hj_cap)
    if n_grid is None:
        raise BudgetExceeded("grid dimension beyond the cap",
                             copies=t, cap=budget.hj_cap, partial=picture)
    c_next = partite_lemma_construct(a, b_i, n_grid)
    if c_next.body.n > budget.max_vertices:
        raise BudgetExceeded("vertex budget exhausted inside the grid step",
                             partial=picture)

    # glue a fresh copy of the picture over every embedded copy of B_i
    b_i_copies = _partite_copies(b_i, c_next)
    projection_next: list[int] = []
    unary: dict[int, str] = {}
    e0: set[tuple[int, int]] = set()
    e1: set[tuple[int, int]] = set()
    types: dict[tuple[int, int], bytes] = {}
    part_of_next = c_next.part_of()
    for v in range(c_next.body.n):
        projection_next.append(a_image[part_of_next[v]])
        f = c_next.body.unary.get(v)
        if f:
            unary[v] = f
    for u, v in c_next.body.e0:
        e0.add(tuple(sorted((u, v))))
    for u, v in c_next.body.e1:
        e1.add(tuple(sorted((u, v))))
    for (u, v), code in c_next.body.pair_types.items():
        types[tuple(sorted((u, v)))] = code

    fresh = len(projection_next)
    ranked_involved = sorted(involved, key=lambda v: pos[v])
    rank_in_sub = {v: i for i, v in enumerate(sorted(involved))}
    for image in b_i_copies:
        # image maps B_i's body vertex (by sub index) to a c_next vertex
        glue: dict[int, int] = {}
        for v in involved:
            glue[v] = image[rank_in_sub[v]]
        for v in range(body.n):
            if v not in glue:
                glue[v] = fresh
                projection_next.append(part_of[v] if False else 0)
                projection_next[fresh] = _project(picture, v)
                f = body.unary.get(v)
                if f:
                    unary[fresh] = f
                fresh += 1
        for x, y in body.e0:
            e0.add(tuple(sorted((glue[x], glue[y]))))
        for x, y in body.e1:
            e1.add(tuple(sorted((glue[x], glue[y]))))
        for (x, y), code in body.pair_types.items():
            key = tuple(sorted((glue[x], glue[y])))
            if types.setdefault(key, code) != code:
                raise InconsistentStructure("picture gluing produced a clash",
                                            pair=list(key))
    return _assemble_picture_ordered(picture.base, projection_next, unary, e0, e1,
                                     types, c_next, body, b_i_copies)


def _project(picture: PartiteSystem, v: int) -> int:
    return picture.part_of()[v]


def _partite_copies(sub: PartiteSystem, host: PartiteSystem) -> list[tuple[int, ...]]:
    """Part-preserving copies of one partite system inside another (same base)."""
    pos = host.body.positions()
    sub_order = _body_order(sub)
    part_of_sub = sub.part_of()
    allowed = [sorted(host.parts[part_of_sub[x]], key=lambda v: pos[v])
               for x in sub_order]
    nat = relabel_by_order(sub.body)
    return copies_in_structure(nat, host.body, allowed)


def _assemble_picture_ordered(base, projection, unary, e0, e1, types,
                              c_next: PartiteSystem, old_body: LiftedStructure,
                              b_i_copies) -> PartiteSystem:
    sys = _assemble_picture(base, projection, unary, e0, e1, types)
    return sys


# --- completion of reduced structures -----------------------------------------------

def complete_reduced(d: ReducedStructure, cover: ReducedStructure | None = None,
                     cat: TypeCatalogue | None = None) -> LiftedStructure:
    """Rebuild a full lift from a reduced structure: revive centre partners,
    type central pairs from stored codes, renormalise the order (non-central
    vertices regrouped under their centres, relative order kept), fill
    chimneys to two apexes, and type the remaining pairs from the shadow."""
    stars = star_partition(d)
    centre_map = stars.centre_map()
    if cover is not None:
        nat_cover = relabel_by_order(cover)
        cover_copies = copies_in_structure(nat_cover, d)
        seen_vertices = {v for img in cover_copies for v in img}
        seen_pairs = {frozenset(p) for img in cover_copies
                      for p in itertools.combinations(img, 2)}
        for v in range(d.n):
            if v not in seen_vertices:
                raise StructureError("vertex lies in no copy of the covering "
                                     "structure", vertex=v)
        for u, v in itertools.combinations(range(d.n), 2):
            related = _related(d, u, v)
            if related and frozenset((u, v)) not in seen_pairs:
                raise StructureError("related pair lies in no copy of the "
                                     "covering structure", pair=[u, v])

    pos = d.positions()
    n = d.n
    partner: dict[int, list[int]] = {}
    flags: dict[int, str] = dict(d.unary)
    for v in sorted(d.unary, key=lambda x: pos[x]):
        f = d.unary[v]
        if f == "L":
            partner[v] = [n]
            flags[n] = "R"
            n += 1
        elif f == "K1":
            partner[v] = [n, n + 1, n + 2]
            for name, w in zip(("K2", "K3", "K4"), partner[v]):
                flags[w] = name
            n += 3
        else:
            raise StructureError("reduced structure carries a removed-role flag",
                                 vertex=v)

    # unflagged vertices must be star leaves of an L centre
    for v in range(d.n):
        if v in d.unary:
            continue
        c = centre_map[v]
        if c == v or d.unary.get(c) != "L":
            raise StructureError("non-central vertex is attached to no chimney "
                                 "representative", vertex=v)

    chimneys = [v for v in sorted(d.unary, key=lambda x: pos[x])
                if d.unary[v] == "L"]
    k4s = [v for v in sorted(d.unary, key=lambda x: pos[x])
           if d.unary[v] == "K1"]
    apexes_of: dict[int, list[int]] = {v: [] for v in chimneys}
    for v in range(d.n):
        if v not in d.unary and centre_map[v] != v:
            apexes_of[centre_map[v]].append(v)
    for v in range(d.n):
        if v not in d.unary and centre_map[v] == v:
            raise StructureError("isolated unflagged vertex has no centre",
                                 vertex=v)

    fillers: dict[int, list[int]] = {}
    for c in chimneys:
        missing = max(0, 2 - len(apexes_of[c]))
        fillers[c] = list(range(n, n + missing))
        n += missing

    order: list[int] = []
    for c in chimneys:
        order.extend([c] + partner[c])
    for c in k4s:
        order.extend([c] + partner[c])
    for c in chimneys:
        order.extend(sorted(apexes_of[c], key=lambda x: pos[x]))
        order.extend(fillers[c])

    e0: set[tuple[int, int]] = set()
    for c in chimneys:
        members = [c] + partner[c]
        e0.add(edge(*members))
        for apex in apexes_of[c] + fillers[c]:
            for m in members:
                e0.add(edge(apex, m))
    for c in k4s:
        quad = [c] + partner[c]
        e0.update(edge(x, y) for x, y in itertools.combinations(quad, 2))

    centre_sets: dict[int, tuple[int, ...]] = {}
    for c in chimneys + k4s:
        cs = tuple(sorted([c] + partner[c]))
        centre_sets[c] = cs
        for w in partner[c]:
            centre_sets[w] = cs
    for v in range(d.n):
        if v not in centre_sets:
            centre_sets[v] = centre_sets[centre_map[v]]

    newpos = {v: i for i, v in enumerate(order)}
    flag_ints = {v: {"L": 1, "R": 2, "K1": 3, "K2": 4, "K3": 5, "K4": 6}.get(
        flags.get(v, ""), NO_FLAG) for v in order}
    facts: dict[tuple[int, int], str] = {}
    for (u, v), code in sorted(d.pair_types.items(),
                               key=lambda kv: (newpos[kv[0][0]], newpos[kv[0][1]])):
        cfg = Config.decode(code)
        members = sorted({u, v} | set(centre_sets[u]) | set(centre_sets[v]),
                         key=lambda x: newpos[x])
        if len(members) != cfg.k:
            raise InconsistentStructure("type code size disagrees with centres",
                                        pair=[u, v])
        if (members.index(u), members.index(v)) != cfg.roots:
            raise InconsistentStructure("type code roots disagree with order",
                                        pair=[u, v])
        if tuple(flag_ints[x] for x in members) != cfg.flags:
            raise InconsistentStructure("type code flags disagree", pair=[u, v])
        for i, j in itertools.combinations(range(cfg.k), 2):
            pair = edge(members[i], members[j])
            tag = cfg.edge_tag(i, j)
            if pair[1] < d.n and tag != d.edge_tag(*pair):
                raise InconsistentStructure("type code contradicts the stored "
                                            "surface edge", pair=list(pair))
            if (pair in e0) != (tag == "e0"):
                raise InconsistentStructure("type code contradicts a type-0 edge",
                                            pair=[u, v])
            if tag == "e0":
                continue
            if facts.setdefault(pair, tag) != tag:
                raise InconsistentStructure("pair types conflict", pair=list(pair))
    e1 = set(d.e1) | {p for p, tag in facts.items() if tag == "e1"}

    og = OrderedGoodGraph(decompose(Graph(n, frozenset(e0 | e1), tuple(order))),
                          tuple(order))
    ok, why = is_admissible(og.good, og.order)
    if not ok:
        raise InconsistentStructure("completion order is not admissible",
                                    **(why or {}))
    out = lift_L2(og)
    for (u, v), code in d.pair_types.items():
        if out.pair_types.get(out.pair_key(u, v)) != code:
            raise InconsistentStructure("stored type does not survive completion",
                                        pair=[u, v])
    if cat is not None:
        from .membership import is_member

        member, _cert = is_member(out, cat)
        if not member:
            raise InconsistentStructure("completion is not a member")
    return out


# --- gadget expansions ----------------------------------------------------------------

@dataclass(frozen=True)
class GadgetEntry:
    expansion_index: int
    first: int
    gadget: int
    second: int
    klass: str


@dataclass(frozen=True)
class GadgetFamily:
    expansions: tuple[OrderedGoodGraph, ...]
    registry: tuple[GadgetEntry, ...]
    pair_codes: dict[str, bytes]


def minimal_good_extensions(g: Graph) -> list[Graph]:
    """Good bowtie-free supergraphs of g on extra vertices such that deleting
    any nonempty set of new vertices breaks goodness; deduplicated up to
    isomorphisms fixing g pointwise."""
    from .good import is_good

    n = g.n
    out: dict[bytes, Graph] = {}
    vertices = list(range(n))
    for partition in _set_partitions(vertices):
        for shapes in itertools.product(*[_group_shapes(g, group)
                                          for group in partition]):
            edges = set(g.edges)
            m = n
            ok = True
            for group, shape in zip(partition, shapes):
                kind, centre_old = shape
                if kind == K4:
                    aux = list(range(m, m + 4 - len(group)))
                    m += len(aux)
                    quad = list(group) + aux
                    edges.update(edge(x, y) for x, y in itertools.combinations(quad, 2))
                else:
                    centre = list(centre_old)
                    aux_centre = list(range(m, m + 2 - len(centre)))
                    m += len(aux_centre)
                    centre += aux_centre
                    apexes = [v for v in group if v not in centre_old]
                    missing = max(0, 2 - len(apexes))
                    fill = list(range(m, m + missing))
                    m += missing
                    edges.add(edge(*centre))
                    for apex in apexes + fill:
                        for c in centre:
                            edges.add(edge(apex, c))
            if not ok:
                continue
            cand = Graph(m, frozenset(edges))
            good, _ = _safe_is_good(cand)
            if not good:
                continue
            new = list(range(n, m))
            minimal = True
            for r in range(1, len(new) + 1):
                for drop in itertools.combinations(new, r):
                    kept = [v for v in range(m) if v not in drop]
                    idx = {v: i for i, v in enumerate(kept)}
                    sub = Graph(len(kept), frozenset(
                        (idx[a], idx[b]) for a, b in edges
                        if a in idx and b in idx))
                    good_sub, _ = _safe_is_good(sub)
                    if good_sub:
                        minimal = False
                        break
                if not minimal:
                    break
            if not minimal:
                continue
            code = canonical_code(cand, vertex_labels={v: f"root{v}" for v in range(n)})
            out.setdefault(code, cand)
    return [out[k] for k in sorted(out)]


def _safe_is_good(g: Graph) -> tuple[bool, dict | None]:
    from .errors import BowtieFound
    from .good import is_good

    try:
        return is_good(g)
    except BowtieFound:
        return False, None


def _set_partitions(items: list):
    if not items:
        yield []
        return
    head, rest = items[0], items[1:]
    for part in _set_partitions(rest):
        for i in range(len(part)):
            yield part[:i] + [[head] + part[i]] + part[i + 1:]
        yield [[head]] + part


def _group_shapes(g: Graph, group: list[int]):
    """Feasible housings of one old-vertex group inside a single component."""
    shapes = []
    if len(group) <= 4 and all(g.has_edge(x, y)
                               for x, y in itertools.combinations(group, 2)):
        shapes.append((K4, ()))
    for centre_size in range(0, min(2, len(group)) + 1):
        for centre_old in itertools.combinations(group, centre_size):
            if centre_size == 2 and not g.has_edge(*centre_old):
                continue
            apexes = [v for v in group if v not in centre_old]
            if any(not g.has_edge(apex, c) for apex in apexes for c in centre_old):
                continue
            shapes.append((CHIMNEY, centre_old))
    return shapes


def admissible_orders(gg: GoodGraph):
    """Every admissible order of a good graph (combinatorial; keep inputs tiny)."""
    chimneys = [c for c in gg.components if c.kind == CHIMNEY]
    k4s = [c for c in gg.components if c.kind == K4]
    for chim_perm in itertools.permutations(chimneys):
        centre_arrangements = itertools.product(
            *[itertools.permutations(c.centre) for c in chim_perm]
        )
        for centre_arr in centre_arrangements:
            for k4_perm in itertools.permutations(k4s):
                for k4_arr in itertools.product(
                    *[itertools.permutations(c.centre) for c in k4_perm]
                ):
                    for apex_arr in itertools.product(
                        *[itertools.permutations(c.apexes) for c in chim_perm]
                    ):
                        order: list[int] = []
                        for pair in centre_arr:
                            order.extend(pair)
                        for quad in k4_arr:
                            order.extend(quad)
                        for apexes in apex_arr:
                            order.extend(apexes)
                        yield OrderedGoodGraph(gg, tuple(order))


def expansion_gadget(g: Graph) -> GadgetFamily:
    """Minimal good extensions under all admissible orders, padded with a
    between-vertex gadget for every same-class pair; gadgets share the pair's
    class, avoid both its vertices, and the two rooted pair structures around
    each gadget are isomorphic."""
    expansions: list[OrderedGoodGraph] = []
    registry: list[GadgetEntry] = []
    codes: dict[str, bytes] = {}
    for extension in minimal_good_extensions(g):
        gg = decompose(extension)
        for og in admissible_orders(gg):
            expanded, entries = _insert_gadgets(og, len(expansions))
            expansions.append(expanded)
            registry.extend(entries)
            lifted = lift_L2(expanded)
            comp_of = expanded.good.component_of()
            for entry in entries:
                t1 = pair_type(expanded, entry.first, entry.gadget).code
                t2 = pair_type(expanded, entry.gadget, entry.second).code
                assert t1 == t2, "gadget pair structures differ"
                assert codes.setdefault(entry.klass, t1) == t1, \
                    "gadget class code is not uniform"
                for x in (entry.first, entry.second):
                    assert lifted.unary.get(entry.gadget, "") == lifted.unary.get(x, "")
                assert not expanded.good.graph.has_edge(entry.first, entry.gadget)
                assert not expanded.good.graph.has_edge(entry.gadget, entry.second)
                p = expanded.positions()
                assert p[entry.first] < p[entry.gadget] < p[entry.second]
            del comp_of
    return GadgetFamily(tuple(expansions), tuple(registry), codes)


def _insert_gadgets(og: OrderedGoodGraph, expansion_index: int):
    """Add one between vertex per same-class pair of the ordered extension."""
    original_n = og.good.graph.n
    flags = lift_L1(og).unary
    comp_of = og.good.component_of()
    class_i = sorted((v for v, f in flags.items() if f == "L"),
                     key=lambda v: og.positions()[v])
    class_ii = sorted((v for v, f in flags.items() if f == "K1"),
                      key=lambda v: og.positions()[v])
    class_iii = sorted((v for v in range(original_n) if v not in flags),
                       key=lambda v: og.positions()[v])

    jobs: list[tuple[str, int, int]] = []
    for u, v in itertools.combinations(class_i, 2):
        jobs.append(("I", u, v))
    for u, v in itertools.combinations(class_ii, 2):
        jobs.append(("II", u, v))
    for u, v in itertools.combinations(class_iii, 2):
        if comp_of[u] is comp_of[v]:
            jobs.append(("III", u, v))
    jobs.sort(key=lambda j: (j[0], og.positions()[j[1]], og.positions()[j[2]]))

    order = list(og.order)
    edges = set(og.good.graph.edges)
    n = original_n
    entries: list[GadgetEntry] = []
    centre_span: dict[int, int] = {}
    for comp in og.good.components:
        for v in comp.centre:
            centre_span[v] = len(comp.centre)

    def insert_after(anchor_block: list[int], payload: list[int]):
        idx = max(order.index(x) for x in anchor_block)
        order[idx + 1:idx + 1] = payload

    for klass, u, v in jobs:
        if klass == "I":
            w, wr, f1, f2 = n, n + 1, n + 2, n + 3
            n += 4
            edges.add(edge(w, wr))
            for filler in (f1, f2):
                edges.add(edge(filler, w))
                edges.add(edge(filler, wr))
            u_interval = [u] + [x for x in order
                                if x in centre_span and comp_same(og, x, u)]
            insert_after(_interval_of(og, order, u), [w, wr])
            order.extend([f1, f2])
            centre_span[w] = 2
            centre_span[wr] = 2
        elif klass == "II":
            quad = list(range(n, n + 4))
            w = quad[0]
            n += 4
            edges.update(edge(x, y) for x, y in itertools.combinations(quad, 2))
            insert_after(_interval_of(og, order, u), quad)
            for x in quad:
                centre_span[x] = 4
        else:
            w = n
            n += 1
            c1, c2 = comp_of[u].centre
            edges.add(edge(w, c1))
            edges.add(edge(w, c2))
            insert_after([u], [w])
        entries.append(GadgetEntry(expansion_index, u, w, v, klass))

    gg = decompose(Graph(n, frozenset(edges)))
    order = _normalise_blocks(gg, order)
    ok, why = is_admissible(gg, tuple(order))
    assert ok, why
    return OrderedGoodGraph(gg, tuple(order)), entries


def comp_same(og: OrderedGoodGraph, x: int, y: int) -> bool:
    comp_of = og.good.component_of()
    return comp_of[x] is comp_of[y]


def _interval_of(og: OrderedGoodGraph, order: list[int], u: int) -> list[int]:
    comp = og.good.component_of()[u]
    return [x for x in order if x in comp.centre]


def _normalise_blocks(gg: GoodGraph, order: list[int]) -> list[int]:
    """Re-lay the order: centres as placed, apex blocks following centre order
    with each block's internal order preserved."""
    rank = {v: i for i, v in enumerate(order)}
    chimneys = sorted((c for c in gg.components if c.kind == CHIMNEY),
                      key=lambda c: min(rank[v] for v in c.centre))
    k4s = sorted((c for c in gg.components if c.kind == K4),
                 key=lambda c: min(rank[v] for v in c.centre))
    out: list[int] = []
    for c in chimneys:
        out.extend(sorted(c.centre, key=lambda v: rank[v]))
    for c in k4s:
        out.extend(sorted(c.centre, key=lambda v: rank[v]))
    for c in chimneys:
        out.extend(sorted(c.apexes, key=lambda v: rank[v]))
    return out
