"""Exact graph machinery: blocks, articulated set trees, separators, and the
leaf-swap equivalence relation used to score recovered structures."""

from __future__ import annotations

import itertools
import json
from collections import deque
from dataclasses import dataclass
from functools import cached_property
from math import prod
from typing import Iterable, Mapping, Sequence, Union

Vertex = int
VertexSet = frozenset  # frozenset[int]

# Hard cap for the exhaustive minimal-separator enumeration: it is exponential
# in |V| and exists to back small-scale oracle tests, not production runs.
_SEPARATOR_ENUM_CAP = 12
# Cap on the number of remote leaf sets enumerated (product over leaf hubs).
_REMOTE_SET_CAP = 1 << 14


def _set_key(s: Iterable[int]) -> tuple[int, ...]:
    """Deterministic sort key for a vertex set: its sorted member tuple."""
    return tuple(sorted(s))


@dataclass(frozen=True)
class UndirectedGraph:
    """Simple undirected graph over integer-labelled vertices."""

    vertices: frozenset[int]
    edges: frozenset[frozenset[int]]

    def __post_init__(self) -> None:
        for e in self.edges:
            if len(e) != 2:
                raise ValueError(f"edge {sorted(e)} is not a 2-set")
            if not e <= self.vertices:
                raise ValueError(f"edge {sorted(e)} leaves the vertex set")

    @classmethod
    def from_edges(
        cls, edges: Iterable[Sequence[int]], vertices: Iterable[int] = ()
    ) -> "UndirectedGraph":
        """Build a graph from (u, v) pairs plus optional isolated vertices."""
        edge_set = frozenset(frozenset(e) for e in edges)
        vertex_set = frozenset(vertices) | frozenset(
            v for e in edge_set for v in e
        )
        return cls(vertex_set, edge_set)

    @cached_property
    def adjacency(self) -> dict[int, frozenset[int]]:
        nbrs: dict[int, set[int]] = {v: set() for v in self.vertices}
        for e in self.edges:
            u, v = sorted(e)
            nbrs[u].add(v)
            nbrs[v].add(u)
        return {v: frozenset(ws) for v, ws in nbrs.items()}

    def neighbors(self, v: int) -> frozenset[int]:
        return self.adjacency[v]

    def degree(self, v: int) -> int:
        return len(self.adjacency[v])

    def sorted_vertices(self) -> list[int]:
        return sorted(self.vertices)

    def sorted_edges(self) -> list[tuple[int, int]]:
        return sorted((min(e), max(e)) for e in self.edges)


def graph_to_json(g: UndirectedGraph) -> str:
    """Serialise a graph as JSON with sorted vertex and edge lists."""
    payload = {
        "vertices": g.sorted_vertices(),
        "edges": [list(e) for e in g.sorted_edges()],
    }
    return json.dumps(payload, indent=2, sort_keys=True)


def graph_from_json(text: str) -> UndirectedGraph:
    """Parse a graph from the JSON layout produced by :func:`graph_to_json`."""
    payload = json.loads(text)
    return UndirectedGraph.from_edges(
        payload.get("edges", ()), payload.get("vertices", ())
    )


def connected_components(
    g: UndirectedGraph, removed: Iterable[int] = ()
) -> tuple[frozenset[int], ...]:
    """Connected components of ``g`` with ``removed`` vertices deleted."""
    removed_set = frozenset(removed)
    seen: set[int] = set(removed_set)
    comps: list[frozenset[int]] = []
    for start in sorted(g.vertices):
        if start in seen:
            continue
        queue = deque([start])
        seen.add(start)
        comp = {start}
        while queue:
            v = queue.popleft()
            for w in g.adjacency[v]:
                if w not in seen:
                    seen.add(w)
                    comp.add(w)
                    queue.append(w)
        comps.append(frozenset(comp))
    return tuple(sorted(comps, key=_set_key))


def is_connected(g: UndirectedGraph) -> bool:
    return len(g.vertices) <= 1 or len(connected_components(g)) == 1


def component_labels(
    g: UndirectedGraph, removed: Iterable[int] = ()
) -> dict[int, int]:
    """Map each surviving vertex to the index of its component in ``g - removed``."""
    labels: dict[int, int] = {}
    for idx, comp in enumerate(connected_components(g, removed)):
        for v in comp:
            labels[v] = idx
    return labels


@dataclass(frozen=True)
class BlockDecomposition:
    """Maximal biconnected components and cut vertices of a connected graph."""

    blocks: tuple[frozenset[int], ...]
    cut_vertices: frozenset[int]

    @property
    def nontrivial_blocks(self) -> tuple[frozenset[int], ...]:
        return tuple(b for b in self.blocks if len(b) > 2)


def block_decomposition(g: UndirectedGraph) -> BlockDecomposition:
    """Decompose a connected graph into blocks via an iterative DFS."""
    if not g.vertices:
        raise ValueError("graph has no vertices")
    if not is_connected(g):
        raise ValueError("block decomposition requires a connected graph")
    if len(g.vertices) == 1:
        return BlockDecomposition((frozenset(g.vertices),), frozenset())

    adj = {v: sorted(g.adjacency[v]) for v in g.vertices}
    root = min(g.vertices)
    disc: dict[int, int] = {root: 0}
    low: dict[int, int] = {root: 0}
    parent: dict[int, int | None] = {root: None}
    child_count: dict[int, int] = {v: 0 for v in g.vertices}
    edge_stack: list[tuple[int, int]] = []
    blocks: list[frozenset[int]] = []
    cut: set[int] = set()
    counter = 1
    stack: list[tuple[int, Iterable[int]]] = [(root, iter(adj[root]))]

    while stack:
        v, it = stack[-1]
        descended = False
        for w in it:
            if w not in disc:
                parent[w] = v
                child_count[v] += 1
                disc[w] = low[w] = counter
                counter += 1
                edge_stack.append((v, w))
                stack.append((w, iter(adj[w])))
                descended = True
                break
            if w != parent[v] and disc[w] < disc[v]:
                edge_stack.append((v, w))
                low[v] = min(low[v], disc[w])
        if descended:
            continue
        stack.pop()
        u = parent[v]
        if u is None:
            continue
        low[u] = min(low[u], low[v])
        if low[v] >= disc[u]:
            members: set[int] = set()
            while edge_stack:
                x, y = edge_stack.pop()
                members.update((x, y))
                if (x, y) == (u, v):
                    break
            blocks.append(frozenset(members))
            if parent[u] is not None or child_count[u] >= 2:
                cut.add(u)

    return BlockDecomposition(
        tuple(sorted(blocks, key=_set_key)), frozenset(cut)
    )


@dataclass(frozen=True)
class ArticulatedSetTree:
    """Tree of vertex-set parts whose edges carry one endpoint vertex per side."""

    parts: tuple[frozenset[int], ...]
    edges: frozenset[frozenset[int]]
    articulation: Mapping[frozenset[int], tuple[int, int]]

    def __post_init__(self) -> None:
        n = len(self.parts)
        for e in self.edges:
            i, j = sorted(e)
            if not (0 <= i < n and 0 <= j < n) or i == j:
                raise ValueError(f"edge {sorted(e)} is not a valid part pair")
            if e not in self.articulation:
                raise ValueError(f"edge {sorted(e)} lacks articulation labels")
            u, v = self.articulation[e]
            if u not in self.parts[i] or v not in self.parts[j]:
                raise ValueError(
                    f"articulation {(u, v)} not inside parts {sorted(e)}"
                )

    @property
    def vertex_universe(self) -> frozenset[int]:
        return frozenset(v for part in self.parts for v in part)

    def is_tree(self) -> bool:
        """Check connectivity and the edge-count identity of a tree."""
        n = len(self.parts)
        if n == 0:
            return False
        if len(self.edges) != n - 1:
            return False
        nbrs: dict[int, set[int]] = {i: set() for i in range(n)}
        for e in self.edges:
            i, j = sorted(e)
            nbrs[i].add(j)
            nbrs[j].add(i)
        seen = {0}
        queue = deque([0])
        while queue:
            i = queue.popleft()
            for j in nbrs[i]:
                if j not in seen:
                    seen.add(j)
                    queue.append(j)
        return len(seen) == n

    def canonical_form(
        self,
    ) -> tuple[
        frozenset[frozenset[int]],
        frozenset[frozenset[tuple[frozenset[int], int]]],
    ]:
        """Index-free representation: part multiset plus labelled edge set."""
        part_set = frozenset(self.parts)
        edge_reps = set()
        for e in self.edges:
            i, j = sorted(e)
            u, v = self.articulation[e]
            edge_reps.add(frozenset({(self.parts[i], u), (self.parts[j], v)}))
        return part_set, frozenset(edge_reps)


def ast_to_json(ast: ArticulatedSetTree) -> str:
    """Serialise an articulated set tree with index-based edges."""
    edges = []
    for e in sorted(ast.edges, key=_set_key):
        i, j = sorted(e)
        u, v = ast.articulation[e]
        edges.append([i, j, u, v])
    payload = {
        "parts": [sorted(p) for p in ast.parts],
        "edges": edges,
    }
    return json.dumps(payload, indent=2, sort_keys=True)


def ast_from_json(text: str) -> ArticulatedSetTree:
    """Parse an articulated set tree from :func:`ast_to_json` output."""
    payload = json.loads(text)
    parts = tuple(frozenset(p) for p in payload["parts"])
    edges = set()
    articulation: dict[frozenset[int], tuple[int, int]] = {}
    for i, j, u, v in payload["edges"]:
        key = frozenset((int(i), int(j)))
        edges.add(key)
        if int(i) <= int(j):
            articulation[key] = (int(u), int(v))
        else:
            articulation[key] = (int(v), int(u))
    return ArticulatedSetTree(parts, frozenset(edges), articulation)


def build_ast(g: UndirectedGraph) -> ArticulatedSetTree:
    """Articulated set tree of a connected graph: non-trivial blocks become
    parts, every other vertex becomes a singleton part, and edges record the
    vertex pair they run between."""
    bd = block_decomposition(g)
    nontrivial = sorted(bd.nontrivial_blocks, key=_set_key)
    parts: list[frozenset[int]] = list(nontrivial)
    # locus(v): the lexicographically smallest part containing v.
    locus: dict[int, int] = {}
    for idx, block in enumerate(nontrivial):
        for v in block:
            locus.setdefault(v, idx)
    for v in sorted(g.vertices):
        if v not in locus:
            locus[v] = len(parts)
            parts.append(frozenset((v,)))

    edges: set[frozenset[int]] = set()
    articulation: dict[frozenset[int], tuple[int, int]] = {}

    def add_edge(i: int, j: int, u: int, v: int) -> None:
        key = frozenset((i, j))
        if i == j or key in edges:
            return
        edges.add(key)
        articulation[key] = (u, v) if i < j else (v, u)

    for u, v in sorted((min(e), max(e)) for e in g.edges):
        if any(u in b and v in b for b in nontrivial):
            continue
        add_edge(locus[u], locus[v], u, v)
    for c in sorted(bd.cut_vertices):
        hosts = [i for i, b in enumerate(nontrivial) if c in b]
        for k in hosts[1:]:
            add_edge(hosts[0], k, c, c)

    ast = ArticulatedSetTree(tuple(parts), frozenset(edges), articulation)
    if not ast.is_tree():
        raise ValueError("block structure did not assemble into a tree")
    return ast


def _as_vertex_set(g: UndirectedGraph, s: Iterable[int], what: str) -> frozenset[int]:
    out = frozenset(s)
    if not out <= g.vertices:
        raise ValueError(f"{what} {sorted(out)} leaves the vertex set")
    return out


def is_separator(
    g: UndirectedGraph,
    s: Iterable[int],
    a: Iterable[int],
    b: Iterable[int],
) -> bool:
    """True iff removing ``s`` leaves no path between the sets ``a`` and ``b``."""
    s_set = _as_vertex_set(g, s, "separator")
    a_set = _as_vertex_set(g, a, "side")
    b_set = _as_vertex_set(g, b, "side")
    if not a_set or not b_set:
        raise ValueError("separation sides must be non-empty")
    if a_set & b_set or a_set & s_set or b_set & s_set:
        raise ValueError("separator and sides must be pairwise disjoint")
    for comp in connected_components(g, removed=s_set):
        if comp & a_set and comp & b_set:
            return False
    return True


def _pairwise_separates(
    labels: Mapping[int, int], r: int, i: int, j: int
) -> bool:
    """Pair {i, j} is split by r: either r is an endpoint or the endpoints
    land in different components once r is removed."""
    if r == i or r == j:
        return True
    return labels[i] != labels[j]


def minimal_mutual_separators(
    g: UndirectedGraph, u: Sequence[int]
) -> frozenset[frozenset[int]]:
    """All inclusion-minimal vertex sets that simultaneously separate every
    pair of the triple ``u`` (singletons may include triple members; larger
    sets must be disjoint from the triple). Exhaustive; capped to small graphs."""
    triple = tuple(sorted(set(u)))
    if len(triple) != 3:
        raise ValueError("mutual separators are defined for vertex triples")
    if not set(triple) <= g.vertices:
        raise ValueError(f"triple {triple} leaves the vertex set")
    if len(g.vertices) > _SEPARATOR_ENUM_CAP:
        raise ValueError(
            f"exhaustive separator enumeration is capped to "
            f"{_SEPARATOR_ENUM_CAP} vertices"
        )
    found: list[frozenset[int]] = []
    for r in sorted(g.vertices):
        labels = component_labels(g, removed=(r,))
        if all(
            _pairwise_separates(labels, r, i, j)
            for i, j in itertools.combinations(triple, 2)
        ):
            found.append(frozenset((r,)))
    rest = sorted(g.vertices - set(triple))
    for size in range(2, len(rest) + 1):
        for combo in itertools.combinations(rest, size):
            cand = frozenset(combo)
            if any(prev <= cand for prev in found):
                continue
            labels = component_labels(g, removed=cand)
            if all(
                labels[i] != labels[j]
                for i, j in itertools.combinations(triple, 2)
            ):
                found.append(cand)
    return frozenset(found)


def star_ancestor(g: UndirectedGraph, u: Sequence[int]) -> int | None:
    """The unique vertex that singleton-separates every pair of the triple
    ``u``, or None if no such vertex exists."""
    triple = tuple(sorted(set(u)))
    if len(triple) != 3:
        raise ValueError("star ancestors are defined for vertex triples")
    if not set(triple) <= g.vertices:
        raise ValueError(f"triple {triple} leaves the vertex set")
    candidates = []
    for r in sorted(g.vertices):
        labels = component_labels(g, removed=(r,))
        if all(
            _pairwise_separates(labels, r, i, j)
            for i, j in itertools.combinations(triple, 2)
        ):
            candidates.append(r)
    if not candidates:
        return None
    if len(candidates) > 1:
        raise ValueError(
            f"triple {triple} has multiple singleton mutual separators "
            f"{candidates}; the input graph is not connected and simple"
        )
    return candidates[0]


def joint_graph(g: UndirectedGraph) -> UndirectedGraph:
    """Attach a degree-1 copy i + p to every vertex i of a graph on 1..p."""
    p = len(g.vertices)
    if g.vertices != frozenset(range(1, p + 1)):
        raise ValueError("joint construction requires vertices labelled 1..p")
    edges = set(g.edges)
    edges.update(frozenset((i, i + p)) for i in range(1, p + 1))
    return UndirectedGraph(frozenset(range(1, 2 * p + 1)), frozenset(edges))


def joint_ancestors(g: UndirectedGraph) -> frozenset[int]:
    """Star ancestors of copy-vertex triples in the joint graph; equals the
    cut-vertex set of ``g`` for connected graphs with at least four vertices."""
    p = len(g.vertices)
    gj = joint_graph(g)
    # Copies have degree 1 and can never separate anything, so only original
    # vertices are candidate ancestors; label components once per candidate.
    labels_by_r = {
        r: component_labels(gj, removed=(r,)) for r in range(1, p + 1)
    }
    ancestors: set[int] = set()
    for triple in itertools.combinations(range(p + 1, 2 * p + 1), 3):
        for r in range(1, p + 1):
            labels = labels_by_r[r]
            if all(
                labels[i] != labels[j]
                for i, j in itertools.combinations(triple, 2)
            ):
                ancestors.add(r)
                break
    return frozenset(ancestors)


def removal_labels(g: UndirectedGraph) -> dict[int, Mapping[int, int]]:
    """Component labelling of the joint graph after deleting each original
    vertex in turn: ``result[r][v]`` is the component index of ``v`` in the
    joint graph minus ``r`` (``r`` itself carries no label)."""
    gj = joint_graph(g)
    return {r: component_labels(gj, removed=(r,)) for r in sorted(g.vertices)}


def block_entry(
    g: UndirectedGraph,
    block: frozenset[int],
    w: int,
    labels: Mapping[int, Mapping[int, int]] | None = None,
) -> int:
    """The vertex of ``block`` through which ``w`` reaches the block: ``w``
    itself when it is a member, otherwise the unique block vertex whose
    removal cuts ``w`` off from the rest of the block."""
    if w in block:
        return w
    if labels is None:
        labels = removal_labels(g)
    rest = sorted(block)
    for v in rest:
        other = next(u for u in rest if u != v)
        if labels[v][w] != labels[v][other]:
            return v
    raise ValueError(f"vertex {w} has no entry into block {sorted(block)}")


def noisy_triple_center(
    g: UndirectedGraph,
    u: Sequence[int],
    labels: Mapping[int, Mapping[int, int]] | None = None,
    blocks: Sequence[frozenset[int]] | None = None,
) -> tuple:
    """Identity of the point that the noisy copies of the triple ``u`` share
    as their metric center, decided combinatorially.

    Results:
      ``("vertex", r)`` — vertex ``r`` mutually separates the three copies in
      the joint graph, so the triplet distances of the copy triple meet at
      ``r`` (the triple's ancestor);

      ``("steiner", (e1, e2, e3))`` — no vertex separates the copies, and the
      members enter some non-trivial block through three distinct vertices
      ``e1 < e2 < e3``; the triplet distances then meet at the median of
      those entries inside the block, which is not a vertex of the graph;

      ``("free", u)`` — neither case applies (unreachable on connected
      graphs; kept as a defensive default).

    Two distinct noisy copy triples pass the shared-ancestor distance test
    structurally — under every edge weighting and every noise assignment —
    exactly when their centers are equal."""
    triple = tuple(sorted(set(u)))
    if len(triple) != 3:
        raise ValueError("triple centers are defined for vertex triples")
    if not set(triple) <= g.vertices:
        raise ValueError(f"triple {triple} leaves the vertex set")
    if labels is None:
        labels = removal_labels(g)
    p = len(g.vertices)
    copies = tuple(v + p for v in triple)
    for r in sorted(g.vertices):
        lab = labels[r]
        if all(
            _pairwise_separates(lab, r, i, j)
            for i, j in itertools.combinations(copies, 2)
        ):
            return ("vertex", r)
    if blocks is None:
        blocks = block_decomposition(g).nontrivial_blocks
    for block in sorted(blocks, key=_set_key):
        entries = tuple(sorted(block_entry(g, block, w, labels) for w in triple))
        if len(set(entries)) == 3:
            return ("steiner", entries)
    return ("free", triple)  # pragma: no cover - defensive default


def leaves(g: UndirectedGraph) -> frozenset[int]:
    return frozenset(v for v in g.vertices if g.degree(v) == 1)


def _leaf_hubs(g: UndirectedGraph) -> dict[int, int]:
    """Map each degree-1 vertex to its unique neighbour."""
    return {leaf: min(g.adjacency[leaf]) for leaf in leaves(g)}


def remote_leaf_sets(g: UndirectedGraph) -> list[frozenset[int]]:
    """All leaf subsets in which no two leaves share a neighbour, enumerated
    as one choice (or no choice) of leaf per hub; includes the empty set."""
    hubs = _leaf_hubs(g)
    by_hub: dict[int, list[int]] = {}
    for leaf in sorted(hubs):
        by_hub.setdefault(hubs[leaf], []).append(leaf)
    pools = [by_hub[h] for h in sorted(by_hub)]
    total = prod(len(pool) + 1 for pool in pools)
    if total > _REMOTE_SET_CAP:
        raise ValueError(
            f"remote-set enumeration would produce {total} sets "
            f"(cap {_REMOTE_SET_CAP})"
        )
    out = []
    for choice in itertools.product(*[[None, *pool] for pool in pools]):
        out.append(frozenset(x for x in choice if x is not None))
    return sorted(out, key=_set_key)


def apply_leaf_swap(g: UndirectedGraph, r: Iterable[int]) -> UndirectedGraph:
    """Relabel ``g`` by transposing every leaf of the remote set ``r`` with
    its hub, simultaneously."""
    swap = _as_vertex_set(g, r, "swap set")
    hubs = _leaf_hubs(g)
    if not swap <= frozenset(hubs):
        raise ValueError(f"swap set {sorted(swap)} contains non-leaves")
    perm: dict[int, int] = {}
    for leaf in sorted(swap):
        hub = hubs[leaf]
        for a, b in ((leaf, hub), (hub, leaf)):
            if perm.get(a, b) != b:
                raise ValueError(
                    f"swap set {sorted(swap)} is not remote: "
                    f"{a} is claimed twice"
                )
            perm[a] = b
    edges = frozenset(
        frozenset((perm.get(a, a), perm.get(b, b))) for a, b in g.sorted_edges()
    )
    return UndirectedGraph(g.vertices, edges)


#: A hub descriptor in a signature: either a bare vertex (partner is itself a
#: cut vertex without leaves) or the partner's frozen leaf family.
ArticulationDescriptor = Union[int, frozenset]


@dataclass(frozen=True)
class EquivalenceSignature:
    """Swap-invariant summary used to compare graphs up to leaf swaps."""

    families: frozenset[frozenset[int]]
    noncut_union: frozenset[int]
    leafless_cut: frozenset[int]
    bridge_descriptors: frozenset[tuple[int, ArticulationDescriptor]]


def _family_of(g: UndirectedGraph, v: int, leaf_set: frozenset[int]) -> frozenset[int]:
    return frozenset({v}) | (g.adjacency[v] & leaf_set)


def equivalence_signature(g: UndirectedGraph) -> EquivalenceSignature:
    """Signature invariant under simultaneous leaf swaps: leaf families, the
    union of non-cut block interiors, cut vertices without leaf neighbours,
    and the descriptors of their bridge partners."""
    if not is_connected(g):
        raise ValueError("equivalence signatures require a connected graph")
    bd = block_decomposition(g)
    leaf_set = leaves(g)
    nontrivial = bd.nontrivial_blocks

    families = frozenset(
        _family_of(g, v, leaf_set)
        for v in g.vertices
        if g.adjacency[v] & leaf_set
    )
    noncut_union = frozenset(
        v for b in nontrivial for v in b if v not in bd.cut_vertices
    )
    leafless_cut = frozenset(
        c for c in bd.cut_vertices if not (g.adjacency[c] & leaf_set)
    )

    def in_nontrivial(u: int, v: int) -> bool:
        return any(u in b and v in b for b in nontrivial)

    descriptors: set[tuple[int, ArticulationDescriptor]] = set()
    for k in sorted(leafless_cut):
        for j in sorted(g.adjacency[k]):
            if in_nontrivial(k, j):
                continue
            if j in leafless_cut:
                descriptors.add((k, j))
            else:
                descriptors.add((k, _family_of(g, j, leaf_set)))
    return EquivalenceSignature(
        families, noncut_union, leafless_cut, frozenset(descriptors)
    )


def ast_representative_graph(ast: ArticulatedSetTree) -> UndirectedGraph:
    """One concrete graph realising an articulated set tree: each part of size
    >= 3 becomes a cycle over its sorted members, size-2 parts become edges,
    and tree edges with distinct endpoint vertices become graph edges."""
    vertices = ast.vertex_universe
    edges: set[frozenset[int]] = set()
    for part in ast.parts:
        members = sorted(part)
        if len(members) == 2:
            edges.add(frozenset(members))
        elif len(members) >= 3:
            for a, b in zip(members, members[1:] + members[:1]):
                edges.add(frozenset((a, b)))
    for e in ast.edges:
        u, v = ast.articulation[e]
        if u != v:
            edges.add(frozenset((u, v)))
    return UndirectedGraph(vertices, frozenset(edges))


def same_equivalence_class(
    g: UndirectedGraph, other: Union[UndirectedGraph, ArticulatedSetTree]
) -> bool:
    """Whether ``other`` (a graph or an articulated set tree) matches ``g``
    up to a simultaneous remote leaf swap.

    Runs two checks that must agree: equality of swap-invariant signatures,
    and an exact search for a remote swap of ``g`` whose tree matches the
    target's tree label-for-label.
    """
    if isinstance(other, ArticulatedSetTree):
        if other.vertex_universe != g.vertices:
            raise ValueError("articulated set tree covers a different label set")
        target_canon = other.canonical_form()
        other_sig = equivalence_signature(ast_representative_graph(other))
    elif isinstance(other, UndirectedGraph):
        if other.vertices != g.vertices:
            raise ValueError("graphs are over different label sets")
        target_canon = build_ast(other).canonical_form()
        other_sig = equivalence_signature(other)
    else:
        raise TypeError(f"cannot compare a graph with {type(other).__name__}")

    signature_match = equivalence_signature(g) == other_sig
    swap_match = any(
        build_ast(apply_leaf_swap(g, r)).canonical_form() == target_canon
        for r in remote_leaf_sets(g)
    )
    return signature_match and swap_match
