"""Plain undirected graphs: monomorphism search, triangles, canonical forms.

Vertices are dense integers 0..n-1.  Edges are stored as sorted pairs and all
outputs are sorted lexicographically so that every operation is deterministic.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field


def edge(u: int, v: int) -> tuple[int, int]:
    """Normalise an unordered pair to a sorted tuple."""
    return (u, v) if u < v else (v, u)


@dataclass(frozen=True)
class Graph:
    """Simple undirected graph with an optional total order on the vertices.

    `order` lists the vertices from smallest to largest, i.e. ``order[k]`` is
    the vertex occupying position k.
    """

    n: int
    edges: frozenset[tuple[int, int]]
    order: tuple[int, ...] | None = None

    def __post_init__(self):
        for u, v in self.edges:
            if u == v:
                raise ValueError(f"self-loop at vertex {u}")
            if not (0 <= u < v < self.n):
                raise ValueError(f"edge ({u},{v}) out of range for n={self.n}")
        if self.order is not None and sorted(self.order) != list(range(self.n)):
            raise ValueError("order is not a permutation of the vertices")

    @staticmethod
    def from_edges(n: int, edges, order=None) -> "Graph":
        return Graph(n, frozenset(edge(u, v) for u, v in edges),
                     tuple(order) if order is not None else None)

    def adjacency(self) -> list[set[int]]:
        adj: list[set[int]] = [set() for _ in range(self.n)]
        for u, v in self.edges:
            adj[u].add(v)
            adj[v].add(u)
        return adj

    def has_edge(self, u: int, v: int) -> bool:
        return edge(u, v) in self.edges

    def sorted_edges(self) -> list[tuple[int, int]]:
        return sorted(self.edges)

    def positions(self) -> list[int]:
        """Inverse of `order`: positions()[v] is the rank of vertex v."""
        if self.order is None:
            raise ValueError("graph carries no order")
        pos = [0] * self.n
        for k, v in enumerate(self.order):
            pos[v] = k
        return pos


def triangle_graph() -> Graph:
    return Graph.from_edges(3, [(0, 1), (0, 2), (1, 2)])


def bowtie_graph() -> Graph:
    """Two triangles sharing exactly the vertex 0."""
    return Graph.from_edges(5, [(0, 1), (0, 2), (1, 2), (0, 3), (0, 4), (3, 4)])


def complete_graph(n: int) -> Graph:
    return Graph.from_edges(n, itertools.combinations(range(n), 2))


def chimney_graph(n_apexes: int) -> Graph:
    """n triangles over the common centre edge (0,1); apexes are 2..n+1."""
    if n_apexes < 2:
        raise ValueError("a chimney has at least 2 apexes")
    edges = [(0, 1)]
    for a in range(2, n_apexes + 2):
        edges += [(0, a), (1, a)]
    return Graph.from_edges(n_apexes + 2, edges)


def disjoint_union(*graphs: Graph) -> Graph:
    n = 0
    edges = []
    for g in graphs:
        edges += [(u + n, v + n) for u, v in g.edges]
        n += g.n
    return Graph.from_edges(n, edges)


def find_monomorphism(pattern: Graph, host: Graph) -> dict[int, int] | None:
    """First injective map (in lexicographic backtracking order) carrying
    every pattern edge to a host edge, or None.

    Pattern vertices are tried in descending-degree order, host candidates in
    ascending order, so failures prune early and the result is deterministic.
    """
    if pattern.n == 0:
        return {}
    if pattern.n > host.n or len(pattern.edges) > len(host.edges):
        return None
    padj = pattern.adjacency()
    hadj = host.adjacency()
    vertex_order = sorted(range(pattern.n), key=lambda v: (-len(padj[v]), v))
    assignment: dict[int, int] = {}
    used = [False] * host.n

    def backtrack(i: int) -> bool:
        if i == len(vertex_order):
            return True
        p = vertex_order[i]
        mapped_nbrs = [assignment[q] for q in padj[p] if q in assignment]
        for h in range(host.n):
            if used[h] or len(hadj[h]) < len(padj[p]):
                continue
            if all(m in hadj[h] for m in mapped_nbrs):
                assignment[p] = h
                used[h] = True
                if backtrack(i + 1):
                    return True
                used[h] = False
                del assignment[p]
        return False

    if backtrack(0):
        return dict(sorted(assignment.items()))
    return None


def contains_bowtie(g: Graph) -> bool:
    return find_monomorphism(bowtie_graph(), g) is not None


def triangles(g: Graph) -> list[tuple[int, int, int]]:
    """All 3-cliques, each listed once as a sorted triple, lexicographically."""
    adj = g.adjacency()
    out = []
    for u, v in sorted(g.edges):
        for w in sorted(adj[u] & adj[v]):
            if w > v:
                out.append((u, v, w))
    return sorted(out)


def edge_type_partition(g: Graph) -> tuple[frozenset[tuple[int, int]], frozenset[tuple[int, int]]]:
    """(E0, E1): edges lying in at least one triangle, and the rest."""
    e0 = set()
    for a, b, c in triangles(g):
        e0.update([(a, b), (a, c), (b, c)])
    return frozenset(e0), frozenset(g.edges - e0)


# --- canonical forms -------------------------------------------------------

def _refine(n: int, colours: list[int], adj_labels: list[dict[int, object]]) -> list[int]:
    """Colour refinement: split classes by the multiset of (edge label, colour)
    over the neighbourhood until stable."""
    while True:
        signatures = []
        for v in range(n):
            nbr = sorted((str(lbl), colours[w]) for w, lbl in adj_labels[v].items())
            signatures.append((colours[v], tuple(nbr)))
        ranking = {sig: i for i, sig in enumerate(sorted(set(signatures)))}
        new = [ranking[signatures[v]] for v in range(n)]
        if new == colours:
            return colours
        colours = new


def _code_for_labelling(g: Graph, perm: list[int], vlab, elab) -> bytes:
    """Serialise g relabelled by perm (perm[v] = new name of v)."""
    inv = [0] * g.n
    for v, p in enumerate(perm):
        inv[p] = v
    verts = [str(vlab(inv[i])) for i in range(g.n)]
    edges = sorted((min(perm[u], perm[v]), max(perm[u], perm[v]), str(elab(u, v)))
                   for u, v in g.edges)
    return json.dumps({"n": g.n, "v": verts, "e": edges},
                      separators=(",", ":")).encode()


def canonical_code(g: Graph, vertex_labels: dict[int, object] | None = None,
                   edge_labels: dict[tuple[int, int], object] | None = None) -> bytes:
    """Byte string equal for two labelled graphs iff they are isomorphic
    respecting vertex labels, edge labels and the order when present.

    Colour refinement plus backtracking over the first non-singleton class;
    exhaustive permutation search below 9 vertices is used as the test oracle.
    """
    vlab_map = vertex_labels or {}
    elab_map = edge_labels or {}
    pos = g.positions() if g.order is not None else None

    def vlab(v: int):
        base = vlab_map.get(v, "")
        if pos is not None:
            return (str(base), pos[v])
        return str(base)

    def elab(u: int, v: int):
        return str(elab_map.get(edge(u, v), ""))

    adj_labels: list[dict[int, object]] = [dict() for _ in range(g.n)]
    for u, v in g.edges:
        adj_labels[u][v] = elab(u, v)
        adj_labels[v][u] = elab(u, v)

    initial = {lab: i for i, lab in enumerate(sorted({str(vlab(v)) for v in range(g.n)}))}
    colours = _refine(g.n, [initial[str(vlab(v))] for v in range(g.n)], adj_labels)

    best: bytes | None = None

    def search(colours: list[int]):
        nonlocal best
        classes: dict[int, list[int]] = {}
        for v, c in enumerate(colours):
            classes.setdefault(c, []).append(v)
        split = next((vs for _, vs in sorted(classes.items()) if len(vs) > 1), None)
        if split is None:
            perm = [0] * g.n
            for name, (_, v) in enumerate(sorted((colours[v], v) for v in range(g.n))):
                perm[v] = name
            code = _code_for_labelling(g, perm, vlab, elab)
            if best is None or code < best:
                best = code
            return
        fresh = max(colours) + 1
        for v in split:
            branched = list(colours)
            branched[v] = fresh
            search(_refine(g.n, branched, adj_labels))

    if g.n == 0:
        return _code_for_labelling(g, [], vlab, elab)
    search(colours)
    assert best is not None
    return best


def isomorphic(g1: Graph, g2: Graph) -> bool:
    return canonical_code(g1) == canonical_code(g2)
