"""Shared oracles and corpus generators for the test suite.

Everything here is deliberately naive: these are the independent checks the
real implementations are measured against.
"""

from __future__ import annotations

import itertools
import random

from bowtielift.graphs import Graph, canonical_code, edge


def naive_contains_bowtie(g: Graph) -> bool:
    """Five nested loops: a centre vertex plus two vertex-disjoint triangles."""
    adj = g.adjacency()
    for a in range(g.n):
        if len(adj[a]) < 4:
            continue
        nbrs = sorted(adj[a])
        for b, c in itertools.combinations(nbrs, 2):
            if c not in adj[b]:
                continue
            for d, e in itertools.combinations(nbrs, 2):
                if {d, e} & {b, c}:
                    continue
                if e in adj[d]:
                    return True
    return False


def naive_triangles(g: Graph) -> list[tuple[int, int, int]]:
    out = []
    for a, b, c in itertools.combinations(range(g.n), 3):
        if g.has_edge(a, b) and g.has_edge(a, c) and g.has_edge(b, c):
            out.append((a, b, c))
    return sorted(out)


def permute_graph(g: Graph, perm: list[int]) -> Graph:
    """Relabel vertices: perm[v] is the new name of v."""
    edges = [(perm[u], perm[v]) for u, v in g.edges]
    order = None
    if g.order is not None:
        order = [perm[v] for v in g.order]
    return Graph.from_edges(g.n, edges, order)


def all_graphs_up_to_iso(max_n: int) -> dict[int, list[Graph]]:
    """All unlabelled graphs with up to max_n vertices, one per class.

    Built by extending each (n-1)-vertex representative with every possible
    neighbourhood for the new vertex and deduplicating by canonical code.
    """
    by_n: dict[int, list[Graph]] = {0: [Graph(0, frozenset())]}
    for n in range(1, max_n + 1):
        seen: dict[bytes, Graph] = {}
        for g in by_n[n - 1]:
            for nbrs in range(1 << (n - 1)):
                edges = set(g.edges)
                for v in range(n - 1):
                    if nbrs >> v & 1:
                        edges.add(edge(v, n - 1))
                cand = Graph(n, frozenset(edges))
                seen.setdefault(canonical_code(cand), cand)
        by_n[n] = list(seen.values())
    return by_n


def random_graph(n: int, p: float, rng: random.Random) -> Graph:
    edges = [e for e in itertools.combinations(range(n), 2) if rng.random() < p]
    return Graph.from_edges(n, edges)


def random_good_graph(rng: random.Random, max_n: int = 12):
    """Random good graph: chimneys/K4s plus cross-component triangle-safe edges."""
    from bowtielift.good import decompose

    edges: list[tuple[int, int]] = []
    comp_vertices: list[list[int]] = []
    n = 0
    while True:
        if comp_vertices and (n >= max_n - 3 or rng.random() < 0.4):
            break
        if rng.random() < 0.35 and n + 4 <= max_n:
            quad = list(range(n, n + 4))
            edges += list(itertools.combinations(quad, 2))
            comp_vertices.append(quad)
            n += 4
        else:
            apexes = rng.randint(2, min(4, max_n - n - 2))
            c1, c2 = n, n + 1
            edges.append((c1, c2))
            block = [c1, c2]
            for a in range(n + 2, n + 2 + apexes):
                edges += [(c1, a), (c2, a)]
                block.append(a)
            comp_vertices.append(block)
            n += 2 + apexes
    adj: dict[int, set[int]] = {v: set() for v in range(n)}
    for u, v in edges:
        adj[u].add(v)
        adj[v].add(u)
    candidates = [
        (u, v)
        for i, ci in enumerate(comp_vertices)
        for j in range(i + 1, len(comp_vertices))
        for u in ci
        for v in comp_vertices[j]
    ]
    rng.shuffle(candidates)
    for u, v in candidates:
        if rng.random() < 0.3 and not (adj[u] & adj[v]):
            edges.append((u, v))
            adj[u].add(v)
            adj[v].add(u)
    return decompose(Graph.from_edges(n, edges))


def random_member_substructure(rng: random.Random, max_vertices: int = 4,
                               graph_size: int = 12):
    """Induced substructure of a random lift: always a member."""
    from bowtielift.lifting import (
        induced_substructure,
        lift_L2,
        random_admissible_order,
    )

    gg = random_good_graph(rng, max_n=graph_size)
    og = random_admissible_order(gg, rng)
    a = lift_L2(og)
    k = rng.randint(1, min(max_vertices, a.n))
    return induced_substructure(a, rng.sample(range(a.n), k))


def perturb_structure(a, catalogue_types, rng: random.Random):
    """Mutate a complete structure, staying well-formed but often unrealizable."""
    from bowtielift.lifting import FLAG_NAMES, LiftedStructure

    unary = dict(a.unary)
    e0, e1 = set(a.e0), set(a.e1)
    order = list(a.order)
    types = dict(a.pair_types)
    for _ in range(rng.randint(1, 3)):
        move = rng.choice(["type", "flag", "edge", "swap"])
        if move == "type" and types:
            key = rng.choice(sorted(types))
            types[key] = catalogue_types[rng.randrange(len(catalogue_types))]
        elif move == "flag" and a.n:
            v = rng.randrange(a.n)
            choice = rng.choice([None, "L", "R", "K1", "K2", "K3", "K4"])
            unary.pop(v, None)
            if choice:
                unary[v] = choice
        elif move == "edge" and a.n >= 2:
            u, v = sorted(rng.sample(range(a.n), 2))
            e0.discard((u, v))
            e1.discard((u, v))
            kind = rng.choice(["e0", "e1", "none"])
            if kind == "e0":
                e0.add((u, v))
            elif kind == "e1":
                e1.add((u, v))
        elif move == "swap" and a.n >= 2:
            i, j = rng.sample(range(a.n), 2)
            order[i], order[j] = order[j], order[i]
    pos = {v: k for k, v in enumerate(order)}
    rekeyed = {}
    for (u, v), code in types.items():
        key = (u, v) if pos[u] < pos[v] else (v, u)
        rekeyed[key] = code
    return LiftedStructure(a.n, tuple(order), unary, frozenset(e0), frozenset(e1),
                           rekeyed)


def random_bowtie_free_graph(n: int, rng: random.Random) -> Graph:
    """Random graph with bowties destroyed by deleting an edge of each."""
    g = random_graph(n, rng.uniform(0.1, 0.45), rng)
    while naive_contains_bowtie(g):
        adj = g.adjacency()
        offender = None
        for a in range(g.n):
            nbrs = sorted(adj[a])
            for b, c in itertools.combinations(nbrs, 2):
                if c in adj[b]:
                    for d, e in itertools.combinations(nbrs, 2):
                        if not ({d, e} & {b, c}) and e in adj[d]:
                            offender = (b, c)
                            break
                if offender:
                    break
            if offender:
                break
        g = Graph(g.n, g.edges - {edge(*offender)})
    return g
