"""Goodness: chimney/K4 decomposition, completion of bowtie-free graphs, centres.

A graph is good when every vertex lies in a chimney (at least two triangles
over a common edge) or a K4.  The triangle edges of a good graph split into
components that are exactly chimneys and K4s; everything here is built on that
classification.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .errors import BowtieFound, DecompositionError, NotGood
from .graphs import (
    Graph,
    bowtie_graph,
    contains_bowtie,
    edge,
    edge_type_partition,
    find_monomorphism,
    triangles,
)

CHIMNEY = "chimney"
K4 = "k4"


@dataclass(frozen=True)
class Component:
    """One triangle-edge component: a chimney (centre edge + apexes) or a K4."""

    kind: str
    centre: tuple[int, ...]
    apexes: tuple[int, ...] = ()

    @property
    def vertices(self) -> tuple[int, ...]:
        return tuple(sorted(self.centre + self.apexes))

    @property
    def size(self) -> int:
        return len(self.apexes) if self.kind == CHIMNEY else 4


@dataclass(frozen=True)
class GoodGraph:
    graph: Graph
    e0: frozenset[tuple[int, int]]
    e1: frozenset[tuple[int, int]]
    components: tuple[Component, ...]

    def component_of(self) -> dict[int, Component]:
        out: dict[int, Component] = {}
        for comp in self.components:
            for v in comp.vertices:
                out[v] = comp
        return out


@dataclass(frozen=True)
class Centre:
    """Per-vertex algebraic closure: its chimney centre edge or its K4."""

    vertex_sets: dict[int, tuple[int, ...]]
    central_flags: dict[int, bool]


def _reject_bowties(g: Graph) -> None:
    m = find_monomorphism(bowtie_graph(), g)
    if m is not None:
        raise BowtieFound("input contains a bowtie", monomorphism=m)


def _classify_component(g: Graph, e0: frozenset, verts: list[int]) -> Component:
    vs = sorted(verts)
    inner = [e for e in e0 if e[0] in verts and e[1] in verts]
    if len(vs) == 4 and len(inner) == 6:
        return Component(K4, tuple(vs))
    deg = {v: 0 for v in vs}
    for u, v in inner:
        deg[u] += 1
        deg[v] += 1
    full = [v for v in vs if deg[v] == len(vs) - 1]
    apexes = [v for v in vs if deg[v] == 2 and v not in full]
    ok = (
        len(vs) >= 4
        and len(full) == 2
        and len(apexes) == len(vs) - 2
        and edge(*full) in e0
        and len(inner) == 2 * len(apexes) + 1
    )
    if not ok:
        raise DecompositionError(
            "component is neither a chimney nor a K4", component=vs
        )
    return Component(CHIMNEY, tuple(sorted(full)), tuple(sorted(apexes)))


def decompose(g: Graph) -> GoodGraph:
    """Classify every triangle-edge component of g as a chimney or a K4.

    Raises NotGood for a vertex outside every triangle and DecompositionError
    for a component of the wrong shape; succeeding implies g is good and
    bowtie-free.
    """
    e0, e1 = edge_type_partition(g)
    adj: dict[int, set[int]] = {v: set() for v in range(g.n)}
    for u, v in e0:
        adj[u].add(v)
        adj[v].add(u)
    seen: set[int] = set()
    components = []
    for start in range(g.n):
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
        if len(comp) == 1:
            raise NotGood("vertex lies in no triangle", vertex=start)
        components.append(_classify_component(g, e0, sorted(comp)))
    return GoodGraph(g, e0, e1, tuple(components))


def is_good(g: Graph) -> tuple[bool, dict | None]:
    """Whether every vertex of g sits in a chimney or K4; diagnosis on False."""
    _reject_bowties(g)
    try:
        decompose(g)
    except (NotGood, DecompositionError) as err:
        return False, dict(err.payload)
    return True, None


def complete_to_good(g: Graph) -> GoodGraph:
    """Extend a bowtie-free graph to a good one on the same initial indices.

    Two passes: every triangle-free vertex becomes an apex of a fresh chimney,
    then every remaining lone triangle gains a fourth vertex over its smallest
    edge, turning it into a chimney.
    """
    _reject_bowties(g)
    edges = set(g.edges)
    n = g.n
    in_triangle = {v for t in triangles(g) for v in t}
    for v in range(g.n):
        if v in in_triangle:
            continue
        a, b, u = n, n + 1, n + 2
        n += 3
        edges |= {(v, a), (v, b), edge(a, b), (a, u), (b, u)}
    cur = Graph(n, frozenset(edge(u, v) for u, v in edges))
    counts: dict[tuple[int, int], int] = {}
    for t in triangles(cur):
        for e in itertools.combinations(t, 2):
            counts[e] = counts.get(e, 0) + 1
    for t in triangles(cur):
        if all(counts[e] == 1 for e in itertools.combinations(t, 2)):
            v1, v2 = t[0], t[1]
            edges |= {(v1, n), (v2, n)}
            n += 1
    out = Graph(n, frozenset(edge(u, v) for u, v in edges))
    assert not contains_bowtie(out)
    return decompose(out)


def check_bowtie_free_structurally(gg: GoodGraph) -> bool:
    """True iff no stored type-1 edge participates in any triangle of the graph.

    Sound direction only: together with a successful decomposition this forces
    bowtie-freeness; a False verdict flags a stale or dishonest partition.
    """
    tri_edges = set()
    for t in triangles(gg.graph):
        tri_edges.update(itertools.combinations(t, 2))
    return not (gg.e1 & tri_edges)


def centres(gg: GoodGraph) -> Centre:
    vertex_sets: dict[int, tuple[int, ...]] = {}
    flags: dict[int, bool] = {}
    for comp in gg.components:
        c = tuple(sorted(comp.centre))
        for v in comp.vertices:
            vertex_sets[v] = c
            flags[v] = v in comp.centre
    return Centre(vertex_sets, flags)
