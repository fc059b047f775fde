"""Membership in the class of lift substructures: the realizable-type
catalogue, the small-substructure filter, and the witness reconstructor.

The forbidden set is held as its complement: the catalogue enumerates every
pair configuration realizable over a good ordered graph (two roots, their
closures, all triangle-safe cross edges, all order-restriction patterns), and
"forbidden" means absent.  Three-vertex realizability is decided by gluing the
three pair configurations and materialising a small witness; the full witness
reconstructor plays the same game pair by pair over an arbitrary complete
structure and extracts a 1-3 vertex obstruction when it gets stuck.

Closure vertices are tracked as refs: ("r", x) for an input vertex and
("c", token, flag) for a centre member nobody in the input names.  When an
input vertex turns out to occupy a centre slot, every fact is rewritten onto
its root ref, so each witness vertex has exactly one name.
"""

from __future__ import annotations

import itertools
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .errors import DecompositionError, NotAdmissible, NotGood
from .good import CHIMNEY, K4, decompose
from .graphs import Graph, edge
from .lifting import (
    CHIMNEY_FLAGS,
    Config,
    K4_FLAGS,
    LiftedStructure,
    NO_FLAG,
    OrderedGoodGraph,
    induced_substructure,
    is_admissible,
    lift_L2,
)

CATALOGUE_FORMAT = 1

# failure taxonomy for obstructions
FIRST_ROOT_CENTRE = 1
SECOND_ROOT_CENTRE = 2
PAIR_SURFACE = 3
CLOSURE_DATA = 4


@dataclass(frozen=True)
class Obstruction:
    """Negative certificate: 1-3 input vertices whose induced substructure is
    not realizable, tagged with which construction step failed."""

    vertices: tuple[int, ...]
    reason: int
    detail: str


@dataclass(frozen=True)
class Witness:
    graph: OrderedGoodGraph
    embedding: dict[int, int]


@dataclass
class TypeCatalogue:
    """Deterministic enumeration of realizable pair configurations.

    `types` is sorted; the rank of a code is its frozen index t_1..t_N.
    """

    types: tuple[bytes, ...]
    format_version: int = CATALOGUE_FORMAT
    _index: dict[bytes, int] = field(default_factory=dict, repr=False)
    _triple_cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self._index = {code: i for i, code in enumerate(self.types)}

    def __contains__(self, code: bytes) -> bool:
        return code in self._index

    def index_of(self, code: bytes) -> int:
        return self._index[code]

    def save(self, path) -> None:
        data = {
            "format_version": self.format_version,
            "types": [c.hex() for c in self.types],
        }
        Path(path).write_text(json.dumps(data, indent=0, sort_keys=True) + "\n")

    @staticmethod
    def load(path) -> "TypeCatalogue":
        data = json.loads(Path(path).read_text())
        if data.get("format_version") != CATALOGUE_FORMAT:
            raise ValueError(f"unsupported catalogue format: {data.get('format_version')}")
        return TypeCatalogue(tuple(bytes.fromhex(c) for c in data["types"]))


# --- enumeration of realizable pair configurations ---------------------------

def _component_templates(n_roots_here: int):
    """Ways to house some roots in one component: (kind, centre count).

    Apexes attach to chimney centres only; a vertex hanging on two K4
    vertices always completes a bowtie.
    """
    for n_centre in range(0, min(2, n_roots_here) + 1):
        yield (CHIMNEY, n_centre)
    if n_roots_here <= 4:
        yield (K4, n_roots_here)


def _root_layouts(n_roots: int):
    """Partitions of the roots into components, with a housing per group."""
    roots = list(range(n_roots))
    partitions: list[list[tuple[int, ...]]] = []

    def split(rest, current):
        if not rest:
            partitions.append([tuple(p) for p in current])
            return
        head, tail = rest[0], rest[1:]
        for p in current:
            p.append(head)
            split(tail, current)
            p.pop()
        current.append([head])
        split(tail, current)
        current.pop()

    split(roots, [])
    for part in partitions:
        choices = [list(_component_templates(len(group))) for group in part]
        for combo in itertools.product(*choices):
            yield list(zip(part, combo))


def _valid_e1_sets(k: int, e0_pairs: frozenset, candidates: list[tuple[int, int]]):
    """All e1 subsets closing no triangle, by include/exclude backtracking."""
    adj = [set() for _ in range(k)]
    for i, j in e0_pairs:
        adj[i].add(j)
        adj[j].add(i)
    chosen: list[tuple[int, int]] = []
    out: list[frozenset] = []

    def rec(idx: int):
        if idx == len(candidates):
            out.append(frozenset(chosen))
            return
        rec(idx + 1)
        i, j = candidates[idx]
        if not (adj[i] & adj[j]):
            adj[i].add(j)
            adj[j].add(i)
            chosen.append((i, j))
            rec(idx + 1)
            chosen.pop()
            adj[i].discard(j)
            adj[j].discard(i)

    rec(0)
    return out


def _configs_for_layout(layout) -> set[bytes]:
    """All order patterns and triangle-safe e1 patterns over one layout."""
    n_roots = sum(len(group) for group, _ in layout)
    chimneys = [(group, spec) for group, spec in layout if spec[0] == CHIMNEY]
    k4s = [(group, spec) for group, spec in layout if spec[0] == K4]
    out: set[bytes] = set()

    chim_centre_choices = []
    for group, (_, n_centre) in chimneys:
        picks = []
        for centre_roots in itertools.combinations(group, n_centre):
            apex_roots = tuple(r for r in group if r not in centre_roots)
            for slot_perm in itertools.permutations(range(2), n_centre):
                occupant_at = {slot_perm[i]: centre_roots[i] for i in range(n_centre)}
                picks.append((occupant_at, apex_roots))
        chim_centre_choices.append(picks)
    k4_member_choices = []
    for group, _spec in k4s:
        k4_member_choices.append(list(itertools.permutations(range(4), len(group))))

    for chim_perm in itertools.permutations(range(len(chimneys))):
        for k4_perm in itertools.permutations(range(len(k4s))):
            for centre_pick in itertools.product(*chim_centre_choices):
                for k4_pick in itertools.product(*k4_member_choices):
                    for apex_orders in itertools.product(
                        *[itertools.permutations(centre_pick[ci][1]) for ci in chim_perm]
                    ):
                        slots: list[tuple[int, int | None]] = []  # (flag, root)
                        comp_of_slot: list[object] = []
                        root_slot: dict[int, int] = {}
                        for ci in chim_perm:
                            occupant_at, _ = centre_pick[ci]
                            for s, flag in enumerate(CHIMNEY_FLAGS):
                                occ = occupant_at.get(s)
                                if occ is not None:
                                    root_slot[occ] = len(slots)
                                slots.append((flag, occ))
                                comp_of_slot.append(("c", ci))
                        for ki in k4_perm:
                            group, _ = k4s[ki]
                            occupant_at = {slot: group[i] for i, slot in enumerate(k4_pick[ki])}
                            for s, flag in enumerate(K4_FLAGS):
                                occ = occupant_at.get(s)
                                if occ is not None:
                                    root_slot[occ] = len(slots)
                                slots.append((flag, occ))
                                comp_of_slot.append(("k", ki))
                        for idx, ci in enumerate(chim_perm):
                            for apex in apex_orders[idx]:
                                root_slot[apex] = len(slots)
                                slots.append((NO_FLAG, apex))
                                comp_of_slot.append(("c", ci))

                        roots = tuple(root_slot[r] for r in range(n_roots))
                        if any(roots[a] > roots[b] for a, b in
                               itertools.combinations(range(n_roots), 2)):
                            continue
                        k = len(slots)
                        flags = tuple(f for f, _ in slots)
                        e0 = set()
                        for comp in set(comp_of_slot):
                            positions = [p for p in range(k) if comp_of_slot[p] == comp]
                            centre = [p for p in positions if flags[p] != NO_FLAG]
                            apexes = [p for p in positions if flags[p] == NO_FLAG]
                            e0.update(edge(a, b) for a, b in itertools.combinations(centre, 2))
                            for a in apexes:
                                e0.update(edge(a, c) for c in centre)
                        candidates = [
                            (i, j)
                            for i, j in itertools.combinations(range(k), 2)
                            if comp_of_slot[i] != comp_of_slot[j]
                        ]
                        for e1 in _valid_e1_sets(k, frozenset(e0), candidates):
                            cfg = Config(k, roots, flags, frozenset(e0), e1)
                            out.add(cfg.encode())
    return out


def enumerate_pair_types(max_centres: int = 2, threads: int = 1) -> tuple[bytes, ...]:
    """Every realizable pair configuration, sorted.

    `max_centres` caps the number of distinct vertex-centres per
    configuration; two roots never need more than two.
    """
    layouts = [layout for layout in _root_layouts(2) if len(layout) <= max_centres]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            chunks = list(pool.map(_configs_for_layout, layouts))
    else:
        chunks = [_configs_for_layout(layout) for layout in layouts]
    codes: set[bytes] = set()
    for chunk in chunks:
        codes |= chunk
    return tuple(sorted(codes))


def build_catalogue(max_centre_config: int = 2, threads: int = 1) -> TypeCatalogue:
    return TypeCatalogue(enumerate_pair_types(max_centre_config, threads))


# --- witness materialisation ---------------------------------------------------

def _materialize(ordered_refs: list, kind_of: dict[int, str], flag_of: dict,
                 member_token: dict, apex_of: dict, e1_keys: set):
    """Assemble an ordered good graph out of glued refs, adding apex fillers.

    `ordered_refs` lists root refs ("r", x) and centre-member refs in their
    final relative order; `member_token`/`apex_of` assign every central ref
    and every apex root to its centre token.  Returns (ordered graph,
    ref -> vertex id) or None when the data does not lay out admissibly.
    """
    central_refs = [r for r in ordered_refs if r in member_token]
    apex_refs = [r for r in ordered_refs if r not in member_token]
    if ordered_refs != central_refs + apex_refs:
        return None
    if any(r[0] != "r" or apex_of.get(r[1]) is None for r in apex_refs):
        return None

    # centres must appear as contiguous runs with role flags in order
    centre_seq: list[int] = []
    i = 0
    while i < len(central_refs):
        t = member_token[central_refs[i]]
        expected = list(CHIMNEY_FLAGS) if kind_of[t] == CHIMNEY else list(K4_FLAGS)
        run = central_refs[i:i + len(expected)]
        if len(run) != len(expected):
            return None
        if any(member_token[r] != t for r in run):
            return None
        if [flag_of[r] for r in run] != expected:
            return None
        centre_seq.append(t)
        i += len(expected)
    if len(set(centre_seq)) != len(centre_seq):
        return None
    kind_seq = [kind_of[t] for t in centre_seq]
    if kind_seq != sorted(kind_seq, key=lambda kk: 0 if kk == CHIMNEY else 1):
        return None

    # apex blocks grouped by centre and following the centre order
    chim_tokens = [t for t in centre_seq if kind_of[t] == CHIMNEY]
    blocks: dict[int, list] = {t: [] for t in chim_tokens}
    for ref in apex_refs:
        t = apex_of[ref[1]]
        if t not in blocks:
            return None
        blocks[t].append(ref)
    if apex_refs != [r for t in chim_tokens for r in blocks[t]]:
        return None

    final_refs = list(central_refs)
    for t in chim_tokens:
        final_refs.extend(blocks[t])
        final_refs.extend(("f", t, j) for j in range(max(0, 2 - len(blocks[t]))))

    placed = {ref: i for i, ref in enumerate(final_refs)}
    members_of: dict[int, list[int]] = {t: [] for t in centre_seq}
    for r in central_refs:
        members_of[member_token[r]].append(placed[r])
    edges: set[tuple[int, int]] = set()
    for ids in members_of.values():
        edges.update(edge(x, y) for x, y in itertools.combinations(ids, 2))
    for ref in final_refs:
        if ref[0] == "f":
            t = ref[1]
        elif ref in member_token or ref[0] != "r":
            continue
        else:
            t = apex_of[ref[1]]
        for m in members_of[t]:
            edges.add(edge(placed[ref], m))
    for key in e1_keys:
        ra, rb = tuple(key)
        edges.add(edge(placed[ra], placed[rb]))

    graph = Graph(len(final_refs), frozenset(edges), tuple(range(len(final_refs))))
    try:
        gg = decompose(graph)
    except (NotGood, DecompositionError):
        return None
    ok, _ = is_admissible(gg, graph.order)
    if not ok:
        return None
    return OrderedGoodGraph(gg, graph.order), placed


# --- small-substructure filtering ------------------------------------------------

def _surface_matches(a: LiftedStructure, u: int, v: int, cfg: Config) -> bool:
    ru, rv = cfg.roots
    return (
        cfg.flags[ru] == a.flag_code(u)
        and cfg.flags[rv] == a.flag_code(v)
        and cfg.edge_tag(ru, rv) == a.edge_tag(u, v)
    )


def _ordered_vertices(a: LiftedStructure) -> list[int]:
    pos = a.positions()
    return sorted(range(a.n), key=lambda x: pos[x])


def check_pair(a: LiftedStructure, cat: TypeCatalogue, u: int, v: int) -> bool:
    """Is the induced 2-vertex substructure on the ordered pair realizable?"""
    code = a.pair_types.get((u, v))
    if code is None or code not in cat:
        return False
    return _surface_matches(a, u, v, Config.decode(code))


class _GlueConflict(Exception):
    pass


def _glue_triple(a: LiftedStructure, cat: TypeCatalogue, u: int, v: int, w: int) -> bool:
    """Do the three pair configurations assemble into one witness?

    Assumes the three pairs individually pass ``check_pair``.
    """
    pairs = [(u, v), (u, w), (v, w)]
    codes = tuple(a.pair_types[p] for p in pairs)
    if codes in cat._triple_cache:
        return cat._triple_cache[codes]
    cfgs = {p: Config.decode(a.pair_types[p]) for p in pairs}
    roots3 = (u, v, w)

    def verdict(value: bool) -> bool:
        cat._triple_cache[codes] = value
        return value

    try:
        same: dict[tuple[int, int], bool] = {}
        for (x, y) in pairs:
            cfg = cfgs[(x, y)]
            same[(x, y)] = cfg.closure_of_root(0) == cfg.closure_of_root(1)
        if sum(same.values()) == 2:
            return verdict(False)  # centre equality must be transitive

        token = {x: i for i, x in enumerate(roots3)}
        for (x, y), is_same in same.items():
            if is_same:
                keep, old = sorted((token[x], token[y]))
                for z in roots3:
                    if token[z] == old:
                        token[z] = keep

        kind_of: dict[int, str] = {}
        apex_of: dict[int, int] = {}
        central_root: dict[tuple[int, int], int] = {}
        for (x, y) in pairs:
            cfg = cfgs[(x, y)]
            for which, z in enumerate((x, y)):
                kind, _centre, apexes = cfg.closure_of_root(which)
                if kind_of.setdefault(token[z], kind) != kind:
                    raise _GlueConflict("centre kinds disagree")
                if cfg.roots[which] in apexes:
                    apex_of[z] = token[z]
        for z in roots3:
            f = a.flag_code(z)
            if f != NO_FLAG:
                slot = (token[z], f)
                if central_root.setdefault(slot, z) != z:
                    raise _GlueConflict("two vertices claim one centre slot")

        def ref_of(pair, position):
            cfg = cfgs[pair]
            if position == cfg.roots[0]:
                return ("r", pair[0])
            if position == cfg.roots[1]:
                return ("r", pair[1])
            for which, z in enumerate(pair):
                _kind, centre, _apexes = cfg.closure_of_root(which)
                if position in centre:
                    t, f = token[z], cfg.flags[position]
                    named = central_root.get((t, f))
                    return ("r", named) if named is not None else ("c", t, f)
            raise _GlueConflict("position outside both closures")

        edge_facts: dict[frozenset, str] = {}
        before: set[tuple] = set()
        for (x, y) in pairs:
            cfg = cfgs[(x, y)]
            refs = [ref_of((x, y), p) for p in range(cfg.k)]
            if len(set(refs)) != cfg.k:
                raise _GlueConflict("distinct positions glued together")
            for i, j in itertools.combinations(range(cfg.k), 2):
                key = frozenset((refs[i], refs[j]))
                tag = cfg.edge_tag(i, j)
                if edge_facts.setdefault(key, tag) != tag:
                    raise _GlueConflict("edge facts disagree")
                if (refs[j], refs[i]) in before:
                    raise _GlueConflict("order facts disagree")
                before.add((refs[i], refs[j]))

        all_refs = sorted({r for key in edge_facts for r in key}, key=repr)
        preds = {r: 0 for r in all_refs}
        for (_p, q) in before:
            preds[q] += 1
        if sorted(preds.values()) != list(range(len(all_refs))):
            return verdict(False)  # cyclic or not a total relation
        ordered_refs = sorted(all_refs, key=lambda r: preds[r])

        flag_of = {}
        member_token = {}
        for r in all_refs:
            if r[0] == "c":
                flag_of[r] = r[2]
                member_token[r] = r[1]
            else:
                f = a.flag_code(r[1])
                flag_of[r] = f
                if f != NO_FLAG:
                    member_token[r] = token[r[1]]

        built = _materialize(
            ordered_refs, kind_of, flag_of, member_token, apex_of,
            {key for key, tag in edge_facts.items() if tag == "e1"},
        )
        if built is None:
            return verdict(False)
        og, placed = built
        lifted = lift_L2(og)
        for (x, y) in pairs:
            key = (placed[("r", x)], placed[("r", y)])
            if lifted.pair_types.get(key) != a.pair_types[(x, y)]:
                return verdict(False)
        return verdict(True)
    except (_GlueConflict, ValueError):
        return verdict(False)


def check_small(a: LiftedStructure, cat: TypeCatalogue) -> tuple[bool, Obstruction | None]:
    """True iff every 1-, 2- and 3-vertex induced substructure is realizable."""
    if not a.is_complete():
        raise ValueError("check_small needs a complete structure")
    seq = _ordered_vertices(a)
    for u, v in itertools.combinations(seq, 2):
        if not check_pair(a, cat, u, v):
            return False, Obstruction((u, v), PAIR_SURFACE,
                                      "pair configuration is not realizable")
    for u, v, w in itertools.combinations(seq, 3):
        if not _glue_triple(a, cat, u, v, w):
            return False, Obstruction((u, v, w), CLOSURE_DATA,
                                      "pair configurations do not glue")
    return True, None


# --- witness reconstruction --------------------------------------------------------

class _Conflict(Exception):
    def __init__(self, reason: int, prov: tuple[int, int], involved: set[int],
                 detail: str):
        super().__init__(detail)
        self.reason = reason
        self.prov = prov
        self.involved = involved
        self.detail = detail


class _Reconstruction:
    """Pair-by-pair construction state with provenance for certificates."""

    def __init__(self, a: LiftedStructure):
        self.a = a
        self.token_of: dict[int, int] = {}
        self.kind_of: dict[int, str] = {}
        self.owners: dict[int, set[int]] = {}
        self.apex_of: dict[int, int] = {}
        self.central_root: dict[tuple[int, int], int] = {}
        self.edge_facts: dict[frozenset, tuple[str, tuple[int, int]]] = {}
        self.before: dict[tuple, tuple[int, int]] = {}
        self._fresh = 0

    def new_token(self, kind: str, owner: int) -> int:
        t = self._fresh
        self._fresh += 1
        self.kind_of[t] = kind
        self.owners[t] = {owner}
        return t

    def canonical(self, t: int, f: int):
        named = self.central_root.get((t, f))
        return ("r", named) if named is not None else ("c", t, f)

    def _rewrite_refs(self, fn, prov: tuple[int, int], detail: str):
        new_edges: dict[frozenset, tuple[str, tuple[int, int]]] = {}
        for key, (tag, p) in self.edge_facts.items():
            nkey = frozenset(fn(r) for r in key)
            if len(nkey) == 1:
                raise _Conflict(CLOSURE_DATA, prov, set(p), detail)
            ex = new_edges.get(nkey)
            if ex is not None and ex[0] != tag:
                raise _Conflict(CLOSURE_DATA, prov, set(ex[1]) | set(p), detail)
            new_edges.setdefault(nkey, (tag, p))
        self.edge_facts = new_edges
        new_before: dict[tuple, tuple[int, int]] = {}
        for (p_ref, q_ref), p in self.before.items():
            nkey = (fn(p_ref), fn(q_ref))
            if nkey[0] == nkey[1]:
                raise _Conflict(CLOSURE_DATA, prov, set(p), detail)
            clash = new_before.get((nkey[1], nkey[0]))
            if clash is not None:
                raise _Conflict(CLOSURE_DATA, prov, set(clash) | set(p), detail)
            new_before.setdefault(nkey, p)
        self.before = new_before

    def name_central_root(self, x: int, t: int, f: int, prov: tuple[int, int],
                          reason: int):
        existing = self.central_root.get((t, f))
        if existing == x:
            return
        if existing is not None:
            raise _Conflict(reason, prov, {existing, x},
                            "two vertices claim one centre slot")
        self.central_root[(t, f)] = x
        old = ("c", t, f)
        self._rewrite_refs(lambda r: ("r", x) if r == old else r, prov,
                           "naming a centre vertex exposed contradictory facts")

    def merge_tokens(self, keep: int, drop: int, prov: tuple[int, int]):
        if keep == drop:
            return
        if self.kind_of[keep] != self.kind_of[drop]:
            raise _Conflict(FIRST_ROOT_CENTRE, prov,
                            self.owners[keep] | self.owners[drop],
                            "pair types disagree about a centre kind")
        for x, t in list(self.token_of.items()):
            if t == drop:
                self.token_of[x] = keep
        for x, t in list(self.apex_of.items()):
            if t == drop:
                self.apex_of[x] = keep
        self.owners[keep] |= self.owners.pop(drop)
        moved = [(slot, x) for slot, x in self.central_root.items() if slot[0] == drop]
        for (old_t, f), x in moved:
            del self.central_root[(old_t, f)]
            if self.central_root.setdefault((keep, f), x) != x:
                raise _Conflict(FIRST_ROOT_CENTRE, prov,
                                {x, self.central_root[(keep, f)]},
                                "merged centres carry two vertices in one slot")
        del self.kind_of[drop]

        def fn(ref):
            if ref[0] == "c" and ref[1] == drop:
                return self.canonical(keep, ref[2])
            if ref[0] == "c" and ref[1] == keep:
                return self.canonical(keep, ref[2])
            return ref

        self._rewrite_refs(fn, prov, "merging centres exposed contradictory facts")


def _find_failing_subset(a: LiftedStructure, cat: TypeCatalogue,
                         candidates) -> tuple[int, ...] | None:
    seen = set()
    for vs in candidates:
        key = tuple(sorted(set(vs)))
        if not key or key in seen:
            continue
        seen.add(key)
        sub = induced_substructure(a, key)
        ok, _ = check_small(sub, cat)
        if not ok:
            return key
    return None


def reconstruct_witness(a: LiftedStructure, cat: TypeCatalogue):
    """Attempt to build an ordered good graph whose lift induces `a`.

    Returns a Witness on success and an Obstruction naming at most three
    input vertices otherwise.  A successful run is verified end to end
    (goodness, admissibility, induced flags and types); if the input is truly
    unrealizable but no small substructure certifies it, that contradicts the
    finite characterisation and a RuntimeError flags the bug.
    """
    if not a.is_complete():
        raise ValueError("reconstruct_witness needs a complete structure")
    if a.e0 & a.e1:
        raise ValueError("edge kinds overlap")
    seq = _ordered_vertices(a)
    state = _Reconstruction(a)

    def certificate(reason: int, pair: tuple[int, int], extra: set[int],
                    detail: str) -> Obstruction:
        u, v = pair
        cands: list[tuple[int, ...]] = [(u, v)]
        cands += [(u, v, z) for z in sorted(extra) if z not in (u, v)]
        cands += [(u, z) for z in sorted(extra) if z != u]
        cands += [(v, z) for z in sorted(extra) if z != v]
        cands += list(itertools.combinations(sorted(extra), 3))
        found = _find_failing_subset(a, cat, cands)
        if found is None:
            everything = itertools.chain(
                itertools.combinations(seq, 2), itertools.combinations(seq, 3)
            )
            found = _find_failing_subset(a, cat, everything)
        if found is None:
            raise RuntimeError(
                "construction failed yet every small substructure is realizable; "
                f"this is a bug: {detail}"
            )
        return Obstruction(found, reason, detail)

    def ensure_closure(x: int, cfg: Config, which: int, pair: tuple[int, int]) -> int:
        kind, _centre, apexes = cfg.closure_of_root(which)
        reason = FIRST_ROOT_CENTRE if which == 0 else SECOND_ROOT_CENTRE
        t = state.token_of.get(x)
        if t is None:
            t = state.new_token(kind, x)
            state.token_of[x] = t
            if cfg.roots[which] in apexes:
                state.apex_of[x] = t
        else:
            if state.kind_of[t] != kind:
                raise _Conflict(reason, pair, state.owners[t],
                                "pair types disagree about a centre kind")
            state.owners[t].add(x)
        f = a.flag_code(x)
        if f != NO_FLAG:
            state.name_central_root(x, t, f, pair, reason)
        return t

    # the surface order of the input vertices seeds the order facts
    for x, y in itertools.combinations(seq, 2):
        state.before[(("r", x), ("r", y))] = (x, y)

    for u, v in itertools.combinations(seq, 2):
        code = a.pair_types.get((u, v))
        if code is None or code not in cat:
            return Obstruction((u, v), PAIR_SURFACE, "pair type is not realizable")
        cfg = Config.decode(code)
        if not _surface_matches(a, u, v, cfg):
            ru, rv = cfg.roots
            if cfg.flags[ru] != a.flag_code(u):
                return Obstruction((u, v), FIRST_ROOT_CENTRE,
                                   "unary flag contradicts the pair type")
            if cfg.flags[rv] != a.flag_code(v):
                return Obstruction((u, v), SECOND_ROOT_CENTRE,
                                   "unary flag contradicts the pair type")
            return Obstruction((u, v), PAIR_SURFACE,
                               "vertices connected differently than the type requires")
        try:
            tu = ensure_closure(u, cfg, 0, (u, v))
            tv = ensure_closure(v, cfg, 1, (u, v))
            same = cfg.closure_of_root(0) == cfg.closure_of_root(1)
            if same and tu != tv:
                state.merge_tokens(min(tu, tv), max(tu, tv), (u, v))
            elif not same and tu == tv:
                raise _Conflict(FIRST_ROOT_CENTRE, (u, v), state.owners[tu],
                                "pair type needs distinct centres but they were identified")
            tu, tv = state.token_of[u], state.token_of[v]

            def ref_of(position):
                if position == cfg.roots[0]:
                    return ("r", u)
                if position == cfg.roots[1]:
                    return ("r", v)
                for z, t in ((u, tu), (v, tv)):
                    which = 0 if z == u else 1
                    _kind, centre, _apexes = cfg.closure_of_root(which)
                    if position in centre:
                        return state.canonical(t, cfg.flags[position])
                raise _Conflict(CLOSURE_DATA, (u, v), set(),
                                "type position outside both closures")

            refs = [ref_of(p) for p in range(cfg.k)]
            if len(set(refs)) != cfg.k:
                raise _Conflict(CLOSURE_DATA, (u, v), set(),
                                "type positions collapse onto one closure vertex")
            for i, j in itertools.combinations(range(cfg.k), 2):
                key = frozenset((refs[i], refs[j]))
                tag = cfg.edge_tag(i, j)
                existing = state.edge_facts.get(key)
                if existing is not None and existing[0] != tag:
                    raise _Conflict(CLOSURE_DATA, (u, v), set(existing[1]),
                                    "closure edges disagree between pair types")
                state.edge_facts.setdefault(key, (tag, (u, v)))
                rev = state.before.get((refs[j], refs[i]))
                if rev is not None:
                    raise _Conflict(CLOSURE_DATA, (u, v), set(rev),
                                    "closure order disagrees between pair types")
                state.before.setdefault((refs[i], refs[j]), (u, v))
        except _Conflict as c:
            return certificate(c.reason, c.prov, c.involved | set(c.prov), c.detail)

    # vertices never paired (inputs with at most one vertex) still need closures
    for x in seq:
        if x not in state.token_of:
            f = a.flag_code(x)
            t = state.new_token(K4 if f in K4_FLAGS else CHIMNEY, x)
            state.token_of[x] = t
            if f == NO_FLAG:
                state.apex_of[x] = t
            else:
                state.central_root[(t, f)] = x

    all_refs = sorted(
        {("r", x) for x in seq} | {r for key in state.edge_facts for r in key},
        key=repr,
    )
    flag_of = {}
    member_token = {}
    for r in all_refs:
        if r[0] == "c":
            flag_of[r] = r[2]
            member_token[r] = r[1]
        else:
            f = a.flag_code(r[1])
            flag_of[r] = f
            if f != NO_FLAG:
                member_token[r] = state.token_of[r[1]]
    # closure members never named by any pair (inputs without pairs)
    for x in seq:
        t = state.token_of[x]
        expected = CHIMNEY_FLAGS if state.kind_of[t] == CHIMNEY else K4_FLAGS
        present = {flag_of[r] for r in all_refs if member_token.get(r) == t}
        for f in expected:
            if f not in present:
                aux = ("c", t, f)
                all_refs.append(aux)
                flag_of[aux] = f
                member_token[aux] = t

    preds = {r: 0 for r in all_refs}
    covered = 0
    for (p, q) in state.before:
        if p in preds and q in preds:
            preds[q] += 1
            covered += 1
    if covered == len(all_refs) * (len(all_refs) - 1) // 2 \
            and sorted(preds.values()) == list(range(len(all_refs))):
        ordered_refs = sorted(all_refs, key=lambda r: preds[r])
    elif a.n <= 1:
        ordered_refs = _tiny_ref_order(all_refs, flag_of, member_token, state)
    else:
        return certificate(CLOSURE_DATA, (seq[0], seq[-1]), set(seq),
                           "closure order facts do not linearise")

    built = _materialize(
        ordered_refs, state.kind_of, flag_of, member_token, state.apex_of,
        {key for key, (tag, _) in state.edge_facts.items() if tag == "e1"},
    )
    if built is None:
        if a.n <= 1:
            raise RuntimeError("one-vertex structure failed to materialise; bug")
        return certificate(CLOSURE_DATA, (seq[0], seq[-1]), set(seq),
                           "closure data does not lay out admissibly")
    og, placed = built

    lifted = lift_L2(og)
    embedding = {x: placed[("r", x)] for x in seq}
    for x in seq:
        if lifted.unary.get(embedding[x], "") != a.unary.get(x, ""):
            if a.n <= 1:
                raise RuntimeError("one-vertex structure failed verification; bug")
            return certificate(CLOSURE_DATA, (seq[0], seq[-1]), set(seq),
                               "reconstructed witness flags do not match")
    for (x, y), code in a.pair_types.items():
        if lifted.pair_types.get((embedding[x], embedding[y])) != code:
            return certificate(CLOSURE_DATA, (x, y), set(seq),
                               "reconstructed witness does not induce the input")
    return Witness(og, embedding)


def _tiny_ref_order(all_refs, flag_of, member_token, state: _Reconstruction):
    """Structural order for inputs without typed pairs: centres in role order,
    chimneys before K4s, apexes last."""

    def sort_key(r):
        if r in member_token:
            t = member_token[r]
            return (0 if state.kind_of[t] == CHIMNEY else 1, t, flag_of[r])
        return (2, 0, 0)

    return sorted(all_refs, key=sort_key)


def is_member(a: LiftedStructure, cat: TypeCatalogue):
    """Decide membership by witness reconstruction; certificate either way."""
    result = reconstruct_witness(a, cat)
    if isinstance(result, Witness):
        return True, result
    return False, result
