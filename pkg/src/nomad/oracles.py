"""Exhaustive reference implementations for validating the pipeline on small
graphs: simple-path enumeration backs ground-truth separator and ancestor
queries that never share code with the fast routes they certify."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator, Sequence

from .ggm import NoiseSpec, PrecisionMatrix, joint_distances
from .graphs import UndirectedGraph, block_decomposition, noisy_triple_center


@dataclass(frozen=True)
class OracleBudget:
    """Hard limits keeping exhaustive enumeration inside test scale."""

    max_vertices: int = 12
    max_paths: int = 2_000_000


_DEFAULT_BUDGET = OracleBudget()


def _iter_simple_paths(
    g: UndirectedGraph, s: int, t: int
) -> Iterator[tuple[int, ...]]:
    """All simple s-t paths, in lexicographic neighbour order."""
    if s == t:
        yield (s,)
        return
    path = [s]
    on_path = {s}
    iters = [iter(sorted(g.adjacency[s]))]
    while iters:
        descended = False
        for w in iters[-1]:
            if w == t:
                yield tuple(path) + (t,)
                continue
            if w in on_path:
                continue
            path.append(w)
            on_path.add(w)
            iters.append(iter(sorted(g.adjacency[w])))
            descended = True
            break
        if not descended:
            iters.pop()
            on_path.discard(path.pop())


@lru_cache(maxsize=200_000)
def _all_paths_vertex_core(
    g: UndirectedGraph, s: int, t: int, budget: OracleBudget
) -> frozenset[int]:
    """Vertices common to every simple s-t path (both endpoints included)."""
    core: set[int] | None = None
    count = 0
    for p in _iter_simple_paths(g, s, t):
        count += 1
        if count > budget.max_paths:
            raise ValueError(
                f"path enumeration between {s} and {t} exceeded "
                f"{budget.max_paths} paths"
            )
        core = set(p) if core is None else core & set(p)
        if core == {s, t}:
            break
    if core is None:
        raise ValueError(f"vertices {s} and {t} are not connected")
    return frozenset(core)


def _singleton_mutual_separators_by_paths(
    g: UndirectedGraph, triple: tuple[int, int, int], budget: OracleBudget
) -> frozenset[int]:
    """Vertices r that split every pair of the triple, where a pair {i, j} is
    split when r is one of its endpoints or r lies on every i-j path."""
    allowed: set[int] | None = None
    for i, j in itertools.combinations(triple, 2):
        # The path core always contains both endpoints, which is exactly the
        # endpoint-inclusive reading of singleton separation.
        core = _all_paths_vertex_core(g, i, j, budget)
        allowed = set(core) if allowed is None else allowed & core
    return frozenset(allowed or ())


def _oracle_star_ancestor(
    g: UndirectedGraph, triple: Sequence[int], budget: OracleBudget
) -> int | None:
    candidates = _singleton_mutual_separators_by_paths(
        g, tuple(sorted(triple)), budget
    )
    if not candidates:
        return None
    if len(candidates) > 1:
        raise ValueError(
            f"triple {tuple(sorted(triple))} has several singleton mutual "
            f"separators {sorted(candidates)}"
        )
    return next(iter(candidates))


def oracle_star_triplets(
    g: UndirectedGraph, budget: OracleBudget | None = None
) -> frozenset[tuple[int, int, int]]:
    """All vertex triples admitting a singleton mutual separator, found by
    exhaustive simple-path enumeration."""
    budget = budget or _DEFAULT_BUDGET
    if len(g.vertices) > budget.max_vertices:
        raise ValueError(
            f"graph has {len(g.vertices)} vertices; oracle budget allows "
            f"{budget.max_vertices}"
        )
    out = set()
    for triple in itertools.combinations(sorted(g.vertices), 3):
        if _oracle_star_ancestor(g, triple, budget) is not None:
            out.add(triple)
    return frozenset(out)


def oracle_tia(
    g: UndirectedGraph,
    u: Sequence[int],
    w: Sequence[int],
    budget: OracleBudget | None = None,
) -> bool:
    """Ground-truth test-of-identical-ancestors for two observed triples:
    their noisy copies must occupy the same center of the joint graph — a
    common separating vertex (the star-triplet case) or a common entry-vertex
    triple into one block.

    Block centers matter because a triple meeting a block through three
    distinct entries satisfies the very same pairwise share identities as a
    star triple around a point between those entries, so distances cannot
    tell the two apart and the identical-ancestor test accepts such pairs
    too."""
    budget = budget or _DEFAULT_BUDGET
    p = len(g.vertices)
    if p > budget.max_vertices:
        raise ValueError(
            f"graph has {p} vertices; oracle budget allows {budget.max_vertices}"
        )
    u_set = frozenset(int(x) for x in u)
    w_set = frozenset(int(x) for x in w)
    for triple in (u_set, w_set):
        if len(triple) != 3 or not triple <= g.vertices:
            raise ValueError(f"{sorted(triple)} is not an observed vertex triple")
    if u_set == w_set:
        return True
    return noisy_triple_center(g, tuple(u_set)) == noisy_triple_center(
        g, tuple(w_set)
    )


def oracle_hidden_distance(
    g: UndirectedGraph,
    k: PrecisionMatrix,
    noise: NoiseSpec,
    p_label: int,
    q_label: int,
) -> float:
    """Ground-truth information distance between two ancestor (cut) vertices,
    read directly from the joint model the pipeline can only estimate."""
    cut = block_decomposition(g).cut_vertices
    for label in (p_label, q_label):
        if label not in cut:
            raise ValueError(f"vertex {label} is not a cut vertex")
    return joint_distances(g, k, noise).loc(p_label, q_label)
