"""Admissible orderings, the unary/binary expansions of ordered good graphs,
pair-type codes, and reductions.

A pair type is the order-canonical serialisation of the structure induced on
the two vertices together with their centres, rooted in the pair.  Because a
total order is always present, canonicalisation is just sorting by position,
so two configurations receive equal codes exactly when the unique
order-preserving bijection between them matches roots, flags and edges.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field, replace

from .errors import InconsistentStructure, NotAdmissible
from .good import CHIMNEY, K4, Component, GoodGraph, decompose
from .graphs import Graph, canonical_code, edge

NO_FLAG = 0
FLAG_NAMES = {1: "L", 2: "R", 3: "K1", 4: "K2", 5: "K3", 6: "K4"}
FLAG_CODES = {name: num for num, name in FLAG_NAMES.items()}
CHIMNEY_FLAGS = (1, 2)
K4_FLAGS = (3, 4, 5, 6)


@dataclass(frozen=True)
class OrderedGoodGraph:
    good: GoodGraph
    order: tuple[int, ...]

    def positions(self) -> dict[int, int]:
        return {v: k for k, v in enumerate(self.order)}


@dataclass(frozen=True)
class TypeCode:
    """A pair-type code plus its position in the frozen global enumeration."""

    code: bytes
    index: int | None = None


@dataclass(frozen=True)
class Config:
    """Decoded pair/triple-type configuration over positions 0..k-1.

    Positions are in order; `roots` lists where the rooted vertices sit.
    Flags use 0 for none and 1..6 for L, R, K1..K4.
    """

    k: int
    roots: tuple[int, ...]
    flags: tuple[int, ...]
    e0: frozenset[tuple[int, int]]
    e1: frozenset[tuple[int, int]]

    def encode(self) -> bytes:
        def pairs(es):
            return ";".join(f"{i}-{j}" for i, j in sorted(es))

        text = "|".join([
            str(self.k),
            ",".join(map(str, self.roots)),
            ",".join(map(str, self.flags)),
            pairs(self.e0),
            pairs(self.e1),
        ])
        return text.encode()

    @staticmethod
    def decode(code: bytes) -> "Config":
        try:
            k_s, roots_s, flags_s, e0_s, e1_s = code.decode().split("|")
            k = int(k_s)
            roots = tuple(int(x) for x in roots_s.split(",")) if roots_s else ()
            flags = tuple(int(x) for x in flags_s.split(",")) if flags_s else ()

            def pairs(s):
                if not s:
                    return frozenset()
                return frozenset(tuple(int(x) for x in p.split("-")) for p in s.split(";"))

            cfg = Config(k, roots, flags, pairs(e0_s), pairs(e1_s))
        except Exception as exc:
            raise ValueError(f"malformed type code {code!r}") from exc
        if len(cfg.flags) != cfg.k or any(not (0 <= r < cfg.k) for r in cfg.roots):
            raise ValueError(f"malformed type code {code!r}")
        return cfg

    def components(self) -> list[tuple[str, tuple[int, ...], tuple[int, ...]]]:
        """E0-components as (kind, centre positions, apex positions)."""
        adj: dict[int, set[int]] = {i: set() for i in range(self.k)}
        for i, j in self.e0:
            adj[i].add(j)
            adj[j].add(i)
        seen: set[int] = set()
        out = []
        for start in range(self.k):
            if start in seen:
                continue
            stack, comp = [start], set()
            while stack:
                v = stack.pop()
                if v in comp:
                    continue
                comp.add(v)
                stack.extend(adj[v] - comp)
            seen |= comp
            centre = tuple(sorted(i for i in comp if self.flags[i] != NO_FLAG))
            apexes = tuple(sorted(i for i in comp if self.flags[i] == NO_FLAG))
            kinds = sorted(self.flags[i] for i in centre)
            if kinds == list(K4_FLAGS):
                out.append((K4, centre, apexes))
            elif kinds == list(CHIMNEY_FLAGS):
                out.append((CHIMNEY, centre, apexes))
            else:
                raise ValueError("config component has no recognisable centre")
        return out

    def closure_of_root(self, which: int) -> tuple[str, tuple[int, ...], tuple[int, ...]]:
        """(kind, centre, apexes) of the component containing the given root."""
        r = self.roots[which]
        for kind, centre, apexes in self.components():
            if r in centre or r in apexes:
                return kind, centre, apexes
        raise ValueError("root outside every component")

    def edge_tag(self, i: int, j: int) -> str:
        e = edge(i, j)
        if e in self.e0:
            return "e0"
        if e in self.e1:
            return "e1"
        return "none"


@dataclass(frozen=True)
class LiftedStructure:
    """Vertices with unary flags, typed ordered pairs and both edge kinds.

    `pair_types` is keyed by (u, v) with u before v in the order; a structure
    is complete when every pair is typed.
    """

    n: int
    order: tuple[int, ...]
    unary: dict[int, str]
    e0: frozenset[tuple[int, int]]
    e1: frozenset[tuple[int, int]]
    pair_types: dict[tuple[int, int], bytes]

    def __post_init__(self):
        if sorted(self.order) != list(range(self.n)):
            raise ValueError("order is not a permutation of the vertices")

    def positions(self) -> dict[int, int]:
        return {v: k for k, v in enumerate(self.order)}

    def flag_code(self, v: int) -> int:
        return FLAG_CODES.get(self.unary.get(v, ""), NO_FLAG)

    def is_complete(self) -> bool:
        return len(self.pair_types) == self.n * (self.n - 1) // 2

    def pair_key(self, u: int, v: int) -> tuple[int, int]:
        pos = self.positions()
        return (u, v) if pos[u] < pos[v] else (v, u)

    def edge_tag(self, u: int, v: int) -> str:
        e = edge(u, v)
        if e in self.e0:
            return "e0"
        if e in self.e1:
            return "e1"
        return "none"


class ReducedStructure(LiftedStructure):
    """Lift with every R/K2/K3/K4-flagged centre vertex removed."""

    def __post_init__(self):
        super().__post_init__()
        bad = {v: f for v, f in self.unary.items() if f in ("R", "K2", "K3", "K4")}
        if bad:
            raise ValueError(f"reduced structure carries removed-role flags: {bad}")


# --- admissible orderings ---------------------------------------------------

def is_admissible(gg: GoodGraph, order) -> tuple[bool, dict | None]:
    """Check the four interval/precedence conditions of an admissible order."""
    order = tuple(order)
    if sorted(order) != list(range(gg.graph.n)):
        return False, {"condition": "order", "detail": "not a permutation"}
    pos = {v: k for k, v in enumerate(order)}

    def interval(vs) -> bool:
        ps = sorted(pos[v] for v in vs)
        return ps[-1] - ps[0] == len(ps) - 1

    chimneys = [c for c in gg.components if c.kind == CHIMNEY]
    k4s = [c for c in gg.components if c.kind == K4]
    for comp in gg.components:
        if not interval(comp.centre):
            return False, {"condition": 1, "centre": list(comp.centre)}
    chim_positions = [pos[v] for c in chimneys for v in c.centre]
    k4_positions = [pos[v] for c in k4s for v in c.centre]
    if chim_positions and k4_positions and max(chim_positions) > min(k4_positions):
        return False, {"condition": 2}
    central = chim_positions + k4_positions
    apex_positions = [pos[a] for c in chimneys for a in c.apexes]
    if central and apex_positions and max(central) > min(apex_positions):
        return False, {"condition": 3}
    blocks = []
    for c in chimneys:
        if not interval(c.apexes):
            return False, {"condition": 4, "centre": list(c.centre)}
        blocks.append((min(pos[v] for v in c.centre), min(pos[a] for a in c.apexes)))
    blocks.sort()
    if [b for _, b in blocks] != sorted(b for _, b in blocks):
        return False, {"condition": 4, "detail": "apex blocks out of centre order"}
    return True, None


def _component_code(gg: GoodGraph, comp: Component) -> bytes:
    verts = sorted(comp.vertices)
    idx = {v: i for i, v in enumerate(verts)}
    sub = Graph.from_edges(
        len(verts),
        [(idx[u], idx[v]) for u, v in gg.graph.edges if u in idx and v in idx],
    )
    return canonical_code(sub)


def _ordered_components(gg: GoodGraph) -> tuple[list[Component], list[Component]]:
    chimneys = sorted(
        (c for c in gg.components if c.kind == CHIMNEY),
        key=lambda c: (_component_code(gg, c), c.vertices),
    )
    k4s = sorted(
        (c for c in gg.components if c.kind == K4),
        key=lambda c: (_component_code(gg, c), c.vertices),
    )
    return chimneys, k4s


def some_admissible_order(gg: GoodGraph) -> OrderedGoodGraph:
    """Deterministic admissible order: chimney centres sorted by canonical
    component code, then K4s, then apex blocks following the centre order."""
    chimneys, k4s = _ordered_components(gg)
    seq: list[int] = []
    for comp in chimneys:
        seq.extend(sorted(comp.centre))
    for comp in k4s:
        seq.extend(sorted(comp.centre))
    for comp in chimneys:
        seq.extend(sorted(comp.apexes))
    og = OrderedGoodGraph(gg, tuple(seq))
    ok, why = is_admissible(gg, og.order)
    assert ok, why
    return og


def random_admissible_order(gg: GoodGraph, rng: random.Random) -> OrderedGoodGraph:
    """Uniform-ish admissible order: shuffles every free choice independently."""
    chimneys = [c for c in gg.components if c.kind == CHIMNEY]
    k4s = [c for c in gg.components if c.kind == K4]
    rng.shuffle(chimneys)
    rng.shuffle(k4s)
    seq: list[int] = []
    for comp in chimneys:
        centre = list(comp.centre)
        rng.shuffle(centre)
        seq.extend(centre)
    for comp in k4s:
        centre = list(comp.centre)
        rng.shuffle(centre)
        seq.extend(centre)
    for comp in chimneys:
        apexes = list(comp.apexes)
        rng.shuffle(apexes)
        seq.extend(apexes)
    og = OrderedGoodGraph(gg, tuple(seq))
    ok, why = is_admissible(gg, og.order)
    assert ok, why
    return og


# --- expansions --------------------------------------------------------------

def _l1_flags(og: OrderedGoodGraph) -> dict[int, str]:
    pos = og.positions()
    flags: dict[int, str] = {}
    for comp in og.good.components:
        members = sorted(comp.centre, key=lambda v: pos[v])
        if comp.kind == CHIMNEY:
            flags[members[0]] = "L"
            flags[members[1]] = "R"
        else:
            for name, v in zip(("K1", "K2", "K3", "K4"), members):
                flags[v] = name
    return flags


def lift_L1(og: OrderedGoodGraph) -> LiftedStructure:
    ok, why = is_admissible(og.good, og.order)
    if not ok:
        raise NotAdmissible("order is not admissible", **(why or {}))
    return LiftedStructure(
        n=og.good.graph.n,
        order=og.order,
        unary=_l1_flags(og),
        e0=og.good.e0,
        e1=og.good.e1,
        pair_types={},
    )


def _config_for_pair(pos: dict[int, int], flags: dict[int, str],
                     e0, e1, centre_sets: dict[int, tuple[int, ...]],
                     u: int, v: int) -> Config:
    members = sorted({u, v} | set(centre_sets[u]) | set(centre_sets[v]),
                     key=lambda x: pos[x])
    idx = {x: i for i, x in enumerate(members)}
    return Config(
        k=len(members),
        roots=(idx[u], idx[v]),
        flags=tuple(FLAG_CODES.get(flags.get(x, ""), NO_FLAG) for x in members),
        e0=frozenset(tuple(sorted((idx[a], idx[b]))) for a, b in e0
                     if a in idx and b in idx),
        e1=frozenset(tuple(sorted((idx[a], idx[b]))) for a, b in e1
                     if a in idx and b in idx),
    )


def pair_type(og: OrderedGoodGraph, u: int, v: int) -> TypeCode:
    """Code of the structure induced on {u, v} and both centres, rooted (u, v)."""
    if u == v:
        raise ValueError("pair type needs two distinct vertices")
    pos = og.positions()
    flags = _l1_flags(og)
    comp_of = og.good.component_of()
    centre_sets = {x: comp_of[x].centre for x in (u, v)}
    cfg = _config_for_pair(pos, flags, og.good.e0, og.good.e1, centre_sets, u, v)
    return TypeCode(cfg.encode())


def lift_L2(og: OrderedGoodGraph) -> LiftedStructure:
    """Full homogenising expansion: unary flags plus a type on every pair."""
    base = lift_L1(og)
    pos = og.positions()
    comp_of = og.good.component_of()
    centre_sets = {x: comp_of[x].centre for x in range(og.good.graph.n)}
    types: dict[tuple[int, int], bytes] = {}
    for u, v in itertools.combinations(sorted(range(og.good.graph.n), key=lambda x: pos[x]), 2):
        cfg = _config_for_pair(pos, base.unary, og.good.e0, og.good.e1, centre_sets, u, v)
        types[(u, v)] = cfg.encode()
    return replace(base, pair_types=types)


def shadow(a: LiftedStructure) -> Graph:
    """Forget flags and pair types; keep both edge kinds and the order."""
    return Graph(a.n, a.e0 | a.e1, a.order)


def shadow_good(a: LiftedStructure) -> OrderedGoodGraph:
    return OrderedGoodGraph(decompose(shadow(a)), a.order)


def structure_code(a: LiftedStructure) -> bytes:
    """Canonical code; equal iff the structures are isomorphic as lifts."""
    pos = a.positions()
    seq = sorted(range(a.n), key=lambda v: pos[v])
    idx = {v: i for i, v in enumerate(seq)}
    flags = tuple(a.flag_code(v) for v in seq)
    e0 = sorted(tuple(sorted((idx[u], idx[v]))) for u, v in a.e0)
    e1 = sorted(tuple(sorted((idx[u], idx[v]))) for u, v in a.e1)
    types = sorted(
        (idx[u], idx[v], code.decode()) for (u, v), code in a.pair_types.items()
    )
    text = repr((a.n, flags, e0, e1, types))
    return text.encode()


def relabel_by_order(a: LiftedStructure) -> LiftedStructure:
    """Rename vertices so the order becomes 0 < 1 < ... < n-1."""
    pos = a.positions()
    return type(a)(
        n=a.n,
        order=tuple(range(a.n)),
        unary={pos[v]: f for v, f in a.unary.items()},
        e0=frozenset(tuple(sorted((pos[u], pos[v]))) for u, v in a.e0),
        e1=frozenset(tuple(sorted((pos[u], pos[v]))) for u, v in a.e1),
        pair_types={(pos[u], pos[v]): code for (u, v), code in a.pair_types.items()},
    )


def induced_substructure(a: LiftedStructure, vertices) -> LiftedStructure:
    """Restrict to a vertex subset, renumbering densely by original index."""
    vs = sorted(set(vertices))
    idx = {v: i for i, v in enumerate(vs)}
    kept = set(vs)
    return type(a)(
        n=len(vs),
        order=tuple(idx[v] for v in a.order if v in kept),
        unary={idx[v]: f for v, f in a.unary.items() if v in kept},
        e0=frozenset(
            tuple(sorted((idx[u], idx[v]))) for u, v in a.e0 if u in kept and v in kept
        ),
        e1=frozenset(
            tuple(sorted((idx[u], idx[v]))) for u, v in a.e1 if u in kept and v in kept
        ),
        pair_types={
            (idx[u], idx[v]): code
            for (u, v), code in a.pair_types.items()
            if u in kept and v in kept
        },
    )


# --- reductions ---------------------------------------------------------------

REMOVED_FLAGS = ("R", "K2", "K3", "K4")


def reduce_structure(a: LiftedStructure) -> ReducedStructure:
    """Delete every R/K2/K3/K4 vertex and renumber densely, keeping order."""
    keep = sorted(v for v in range(a.n) if a.unary.get(v) not in REMOVED_FLAGS)
    idx = {v: i for i, v in enumerate(keep)}
    kept = set(keep)
    return ReducedStructure(
        n=len(keep),
        order=tuple(idx[v] for v in a.order if v in kept),
        unary={idx[v]: f for v, f in a.unary.items() if v in kept},
        e0=frozenset(
            tuple(sorted((idx[u], idx[v]))) for u, v in a.e0 if u in kept and v in kept
        ),
        e1=frozenset(
            tuple(sorted((idx[u], idx[v]))) for u, v in a.e1 if u in kept and v in kept
        ),
        pair_types={
            (idx[u], idx[v]): code
            for (u, v), code in a.pair_types.items()
            if u in kept and v in kept
        },
    )


def unreduce(r: ReducedStructure) -> LiftedStructure:
    """Rebuild the full lift a reduction came from.

    Centres are re-added right after their surviving representative (each
    centre is an order interval whose representative is its minimum), the star
    and K4 edges are restored, and every type-1 edge touching a removed vertex
    is read back off the stored pair types.  Conflicting type assertions raise
    InconsistentStructure.
    """
    if not r.is_complete():
        raise InconsistentStructure("reduction is not complete; cannot rebuild")
    n = r.n
    rpos = r.positions()
    partners: dict[int, list[int]] = {}
    flags: dict[int, str] = dict(r.unary)
    for v in sorted(r.unary, key=lambda x: rpos[x]):
        f = r.unary[v]
        if f == "L":
            partners[v] = [n]
            flags[n] = "R"
            n += 1
        elif f == "K1":
            partners[v] = [n, n + 1, n + 2]
            for name, w in zip(("K2", "K3", "K4"), partners[v]):
                flags[w] = name
            n += 3

    order: list[int] = []
    for v in r.order:
        order.append(v)
        order.extend(partners.get(v, []))

    e0 = set(r.e0)
    star_of: dict[int, list[int]] = {v: [] for v in r.unary if r.unary[v] == "L"}
    for u, v in r.e0:
        fu, fv = r.unary.get(u), r.unary.get(v)
        if fu == "L" and fv is None:
            star_of[u].append(v)
        elif fv == "L" and fu is None:
            star_of[v].append(u)
        else:
            raise InconsistentStructure(
                "type-0 edge in a reduction must join a chimney representative "
                "to an apex", edge=[u, v],
            )
    for v, added in partners.items():
        if r.unary[v] == "L":
            rv = added[0]
            e0.add(edge(v, rv))
            for apex in star_of[v]:
                e0.add(edge(apex, rv))
        else:
            quad = [v] + added
            e0.update(edge(a, b) for a, b in itertools.combinations(quad, 2))

    centre_sets: dict[int, tuple[int, ...]] = {}
    for v in range(r.n):
        f = r.unary.get(v)
        if f in ("L", "K1"):
            centre_sets[v] = tuple(sorted([v] + partners[v]))
    for v in range(r.n):
        if v not in centre_sets:
            owners = [c for c, apexes in star_of.items() if v in apexes]
            if len(owners) != 1:
                raise InconsistentStructure("apex attached to no or many centres",
                                            vertex=v)
            centre_sets[v] = centre_sets[owners[0]]

    pos = {v: k for k, v in enumerate(order)}
    facts: dict[tuple[int, int], str] = {}
    flag_ints = {v: FLAG_CODES.get(flags.get(v, ""), NO_FLAG) for v in order}
    for (u, v), code in sorted(r.pair_types.items(), key=lambda kv: (pos[kv[0][0]], pos[kv[0][1]])):
        cfg = Config.decode(code)
        members = sorted({u, v} | set(centre_sets[u]) | set(centre_sets[v]),
                         key=lambda x: pos[x])
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
            if pair[1] < r.n and tag != r.edge_tag(*pair):
                raise InconsistentStructure(
                    "type code contradicts the stored surface edge", pair=list(pair)
                )
            if (pair in e0) != (tag == "e0"):
                raise InconsistentStructure("type code contradicts a type-0 edge",
                                            pair=[u, v])
            if tag == "e0":
                continue
            if facts.setdefault(pair, tag) != tag:
                raise InconsistentStructure("pair types conflict on a type-1 edge",
                                            pair=list(pair))
    e1 = set(r.e1) | {p for p, tag in facts.items() if tag == "e1"}

    og = OrderedGoodGraph(decompose(Graph(n, frozenset(e0 | e1), tuple(order))),
                          tuple(order))
    out = lift_L2(og)
    for (u, v), code in r.pair_types.items():
        key = out.pair_key(u, v)
        if out.pair_types[key] != code:
            raise InconsistentStructure("reduction types do not re-lift", pair=[u, v])
    return out
