"""Structure recovery from noisy information distances: identical-ancestor
testing, ancestor discovery, distance extension, clustering, cut testing,
partitioning, and articulated-tree assembly."""

from __future__ import annotations

import itertools
import time
from collections import defaultdict
from dataclasses import dataclass
from math import isfinite
from typing import Iterable, Sequence, Union

import numpy as np

from .ggm import (
    INF_DISTANCE,
    _PAIR_CHUNK,
    DistanceMatrix,
    ModelMargins,
    _shared_vertex_pairs,
    _triplet_distance_array,
    empirical_distances,
)
from .graphs import ArticulatedSetTree, _set_key

#: Extended distance matrices reuse the plain distance container; hidden
#: ancestors appear as negative labels.
ExtendedDistances = DistanceMatrix


class PipelineError(RuntimeError):
    """Recovery failure, tagged with the stage that detected it."""

    def __init__(self, stage: str, message: str) -> None:
        super().__init__(f"[{stage}] {message}")
        self.stage = stage


@dataclass(frozen=True)
class Tolerances:
    """Decision thresholds: xi for identical-ancestor tests, eps_d for mode
    grouping of distance estimates, sep_tol for additivity (separation) tests."""

    xi: float
    eps_d: float
    sep_tol: float

    def __post_init__(self) -> None:
        if not (self.xi > 0 and self.eps_d > 0 and self.sep_tol > 0):
            raise ValueError("tolerances must be positive")

    @classmethod
    def population(cls) -> "Tolerances":
        """Numerical-noise thresholds for exact population distances."""
        return cls(xi=1e-9, eps_d=1e-9, sep_tol=1e-9)

    @classmethod
    def from_margins(cls, margins: ModelMargins) -> "Tolerances":
        """Thresholds derived from measured model margins, set as close to
        the structural ceilings as the decision rules allow (xi < zeta/2 for
        identical-ancestor tests, sep_tol < gamma/2 for additivity tests, and
        eps_d within both xi/14 and gamma) so finite-sample estimation error
        has the widest tolerable berth."""
        if not isfinite(margins.zeta):
            raise ValueError(
                "the model's triplet margin is unbounded (no constraining "
                "triple pairs); supply tolerances explicitly"
            )
        if margins.gamma <= 0 or margins.zeta <= 0:
            raise ValueError("margins must be positive to derive tolerances")
        xi = 0.45 * margins.zeta
        eps_d = min(xi / 14.0, margins.gamma)
        return cls(xi=xi, eps_d=eps_d, sep_tol=0.45 * margins.gamma)


@dataclass(frozen=True)
class AncestorCollection:
    """A maximal family of observed triples sharing one ancestor."""

    ancestor: int  # observed label, or a negative id for hidden ancestors
    hidden: bool
    triples: tuple[tuple[int, int, int], ...]


@dataclass(frozen=True)
class AncestorCatalog:
    """All ancestors discovered from the distances, with their collections."""

    collections: tuple[AncestorCollection, ...]

    @property
    def a_obs(self) -> frozenset[int]:
        return frozenset(c.ancestor for c in self.collections if not c.hidden)

    @property
    def a_hid(self) -> frozenset[int]:
        return frozenset(c.ancestor for c in self.collections if c.hidden)

    def collection_of(self, ancestor: int) -> AncestorCollection:
        for c in self.collections:
            if c.ancestor == ancestor:
                return c
        raise KeyError(f"no collection for ancestor {ancestor}")


@dataclass
class LeafCluster:
    """Observed vertices whose only unblocked ancestor is ``l1``; ``l3`` is
    the designated stand-in vertex, filled by the partition step."""

    l1: int
    l2: tuple[int, ...]
    l3: int | None = None


@dataclass
class InternalCluster:
    """Observed vertices with several unblocked ancestors ``i1``; ``i3``
    collects the ancestors' designated vertices, filled by the partition step."""

    i1: frozenset[int]
    i2: tuple[int, ...]
    i3: tuple[int, ...] = ()


def triplet_distance(x: int, u: Sequence[int], dist: DistanceMatrix) -> float:
    """Distance share of member ``x`` inside the triple ``u``:
    (d_xy + d_xz - d_yz) / 2 for the other two members y, z. May be negative
    on estimated input; infinite inputs propagate the sentinel."""
    triple = tuple(u)
    if len(set(triple)) != 3 or x not in triple:
        raise ValueError(f"{triple} must be three distinct labels containing {x}")
    y, z = (v for v in triple if v != x)
    dxy, dxz, dyz = dist.loc(x, y), dist.loc(x, z), dist.loc(y, z)
    if max(dxy, dxz, dyz) >= INF_DISTANCE:
        return INF_DISTANCE
    return 0.5 * (dxy + dxz - dyz)


def tia(
    u: Sequence[int], w: Sequence[int], dist: DistanceMatrix, tol: Tolerances
) -> bool:
    """Test of identical ancestors: every member x of ``u`` must find two
    members y, z of ``w`` with d_x^U + d_y^W = d_xy and d_x^U + d_z^W = d_xz
    within xi."""
    u_t, w_t = tuple(u), tuple(w)
    if len(set(u_t)) != 3 or len(set(w_t)) != 3:
        raise ValueError("both triples must have three distinct labels")
    if set(u_t) == set(w_t):
        raise ValueError("the test requires two different triples")
    du = [triplet_distance(x, u_t, dist) for x in u_t]
    dw = [triplet_distance(y, w_t, dist) for y in w_t]
    for x, dx in zip(u_t, du):
        hits = sum(
            abs(dx + dy - dist.loc(x, y)) <= tol.xi for y, dy in zip(w_t, dw)
        )
        if hits < 2:
            return False
    return True


def _mode_groups(values: Iterable[float], eps_d: float) -> list[list[float]]:
    """Greedy left-to-right grouping of sorted values into runs of internal
    spread strictly below eps_d."""
    vals = sorted(float(v) for v in values)
    groups = [[vals[0]]]
    for v in vals[1:]:
        if v - groups[-1][0] < eps_d:
            groups[-1].append(v)
        else:
            groups.append([v])
    return groups


def eps_mode(values: Iterable[float], eps_d: float) -> float:
    """Representative (smallest member) of the largest eps_d-group; size ties
    break towards the smallest representative."""
    vals = list(values)
    if not vals:
        raise ValueError("mode of an empty collection")
    if eps_d <= 0:
        raise ValueError("grouping width must be positive")
    groups = _mode_groups(vals, eps_d)
    best = max(groups, key=lambda g: (len(g), -g[0]))
    return best[0]


def _tia_pass_mask(
    entries: np.ndarray,
    triples: np.ndarray,
    du: np.ndarray,
    pa: np.ndarray,
    pb: np.ndarray,
    xi: float,
) -> np.ndarray:
    """Vectorised identical-ancestor test over triple index pairs."""
    ok = np.zeros(len(pa), dtype=bool)
    for lo in range(0, len(pa), _PAIR_CHUNK):
        hi = min(lo + _PAIR_CHUNK, len(pa))
        ta = triples[pa[lo:hi]]
        tb = triples[pb[lo:hi]]
        cross = entries[ta[:, :, None], tb[:, None, :]]
        resid = np.abs(du[pa[lo:hi]][:, :, None] + du[pb[lo:hi]][:, None, :] - cross)
        rows_ok = (resid <= xi).sum(axis=2) >= 2
        ok[lo:hi] = rows_ok.all(axis=1)
    return ok


def _union_find_components(
    n: int, pa: Sequence[int], pb: Sequence[int]
) -> list[list[int]]:
    """Components of the pair graph, each as an ascending member list."""
    parent = list(range(n))

    def find(a: int) -> int:
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for a, b in zip(pa, pb):
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)
    groups: dict[int, list[int]] = defaultdict(list)
    for t in range(n):
        groups[find(t)].append(t)
    return sorted(groups.values(), key=lambda g: g[0])


def _mode_distance(
    entries: np.ndarray,
    triples: np.ndarray,
    du: np.ndarray,
    t1: int,
    t2: int,
    eps_d: float,
) -> tuple[float, list[int]]:
    """Distance between two collections' ancestor points: the mode of the
    nine cross-triple residuals d_xy - d_x^U - d_y^W of the collections'
    first triples, with the sorted group sizes for diagnostics."""
    residuals = []
    for slot1 in range(3):
        for slot2 in range(3):
            x = triples[t1][slot1]
            y = triples[t2][slot2]
            residuals.append(float(entries[x, y] - du[t1, slot1] - du[t2, slot2]))
    groups = _mode_groups(residuals, eps_d)
    best = max(groups, key=lambda g: (len(g), -g[0]))
    return best[0], sorted((len(g) for g in groups), reverse=True)


def _prune_hidden_collections(
    hidden_lists: list[list[int]],
    triples: np.ndarray,
    entries: np.ndarray,
    du: np.ndarray,
    obs_positions: frozenset[int],
    tol: Tolerances,
) -> tuple[list[int], dict[int, np.ndarray], dict[frozenset[int], float], dict]:
    """Select the hidden collections that name real ancestors.

    Candidates must cover every observed vertex: the triples centered on a
    point inside a block never reach the block's other vertices, so partial
    coverage marks a spurious center (and leaves no way to extend its row).

    Among the full-coverage candidates, a collection whose triples all share
    pinned members is redundant when every other non-ancestor vertex reaches
    every pin through some other ancestor point: the data then also fits a
    graph in which the pins hang off those points and the collection's own
    center is no vertex at all. Redundancy citing only fellow-redundant
    collections is a standoff between a block and the tree that subdivides
    it; it resolves toward the block, which keeps the endpoint collections
    and drops the one whose center sits between two of its partners'."""
    p = entries.shape[0]
    n_all = len(hidden_lists)
    info: dict = {"hidden_components": n_all}

    covered: list[set[int]] = []
    for coll in hidden_lists:
        cov: set[int] = set()
        for t in coll:
            cov.update(int(x) for x in triples[t])
        covered.append(cov)
    full = [h for h in range(n_all) if len(covered[h]) == p]
    info["hidden_dropped_partial"] = n_all - len(full)

    rows: dict[int, np.ndarray] = {}
    for h in full:
        first_with: dict[int, tuple[int, int]] = {}
        for t in hidden_lists[h]:
            for slot, pos in enumerate(triples[t]):
                first_with.setdefault(int(pos), (t, slot))
        row = np.empty(p)
        for pos in range(p):
            t, slot = first_with[pos]
            row[pos] = du[t, slot]
        rows[h] = row

    cross: dict[frozenset[int], float] = {}
    mode_sizes: dict[frozenset[int], list[int]] = {}
    for h1, h2 in itertools.combinations(full, 2):
        value, sizes = _mode_distance(
            entries, triples, du, hidden_lists[h1][0], hidden_lists[h2][0], tol.eps_d
        )
        key = frozenset((h1, h2))
        cross[key] = value
        mode_sizes[key] = sizes

    pins: dict[int, frozenset[int]] = {}
    for h in full:
        pin: set[int] | None = None
        for t in hidden_lists[h]:
            members = {int(x) for x in triples[t]}
            pin = members if pin is None else pin & members
        pins[h] = frozenset(pin or ())

    def routers(x: int, h: int, v: int) -> tuple[list[int], list[int]]:
        """Ancestor points carrying x's distance to v additively: observed
        ancestors (other than x and v) and other full-coverage collections."""
        base = entries[x, v]
        r_obs = [
            a
            for a in sorted(obs_positions)
            if a != x and a != v
            and abs(entries[x, a] + entries[a, v] - base) <= tol.sep_tol
        ]
        r_hid = [
            h2
            for h2 in full
            if h2 != h and abs(rows[h2][x] + rows[h2][v] - base) <= tol.sep_tol
        ]
        return r_obs, r_hid

    # First pass: a pinned collection is redundant when every vertex that is
    # neither a pin nor an observed ancestor routes around every pin.
    killed: list[int] = []
    need_lists: dict[int, list[list[int]]] = {}
    for h in full:
        if not pins[h]:
            continue
        x_range = [
            x for x in range(p) if x not in pins[h] and x not in obs_positions
        ]
        needs: list[list[int]] = []
        fully_routed = True
        for x in x_range:
            for v in sorted(pins[h]):
                r_obs, r_hid = routers(x, h, v)
                if not r_obs and not r_hid:
                    fully_routed = False
                    break
                if not r_obs:
                    needs.append(r_hid)
            if not fully_routed:
                break
        if fully_routed:
            killed.append(h)
            need_lists[h] = needs

    # Second pass: deaths that cited only fellow-killed collections are
    # standoffs; the midpoint collection stays dead, the endpoints return.
    alive = set(full) - set(killed)
    resurrected: list[int] = []
    for h in killed:
        partners: set[int] = set()
        for r_hid in need_lists[h]:
            if not any(h2 in alive for h2 in r_hid):
                partners.update(r_hid)
        if not partners:
            continue
        between = any(
            abs(
                cross[frozenset((b1, h))]
                + cross[frozenset((h, b2))]
                - cross[frozenset((b1, b2))]
            )
            <= tol.sep_tol
            for b1, b2 in itertools.combinations(sorted(partners), 2)
        )
        if not between:
            resurrected.append(h)
    info["hidden_dropped_routed"] = len(killed) - len(resurrected)
    info["hidden_resurrected"] = len(resurrected)

    kept = sorted(alive | set(resurrected))
    final_label = {h: -(i + 1) for i, h in enumerate(kept)}
    final_cross = {
        key: value
        for key, value in cross.items()
        if all(h in kept for h in key)
    }
    ambiguous = [
        {
            "pair": sorted((final_label[h] for h in key), reverse=True),
            "group_sizes": mode_sizes[key],
        }
        for key in sorted(final_cross, key=_set_key)
        if mode_sizes[key][0] < 4
    ]
    if ambiguous:
        info["ambiguous_hidden_modes"] = ambiguous
    return kept, rows, final_cross, info


def identify_ancestors(
    dist: DistanceMatrix, tol: Tolerances, diagnostics: dict | None = None
) -> tuple[AncestorCatalog, ExtendedDistances]:
    """Discover ancestors behind the observed distances and extend the matrix
    with one row per hidden ancestor.

    Triples passing pairwise identical-ancestor tests are merged into
    collections (single-triple components are discarded: a lone triple cannot
    be told apart from a non-star triple). A collection whose some triple has
    an exact middle names an observed ancestor; the remaining collections are
    pruned of spurious centers (see :func:`_prune_hidden_collections`) and
    the survivors mint hidden ancestors with negative labels. Hidden rows
    carry the member share d_x^U of the lexicographically first collection
    triple containing x, and hidden-hidden entries take the mode of the nine
    cross-triple residuals of the collections' first triples.
    """
    labels = dist.labels
    p = len(labels)
    if p < 3:
        return AncestorCatalog(()), dist

    entries = dist.entries
    triples = np.array(list(itertools.combinations(range(p), 3)), dtype=np.int64)
    du = _triplet_distance_array(entries, triples)
    pa, pb = _shared_vertex_pairs(triples, p)
    ok = _tia_pass_mask(entries, triples, du, pa, pb, tol.xi)
    components = _union_find_components(
        len(triples), pa[ok].tolist(), pb[ok].tolist()
    )
    raw_collections = [c for c in components if len(c) >= 2]

    observed: dict[int, list[int]] = {}
    obs_positions: set[int] = set()
    hidden_lists: list[list[int]] = []
    for coll in raw_collections:
        anc_pos: int | None = None
        for t in coll:
            i, j, k = triples[t]
            for mid, a, b in ((i, j, k), (j, i, k), (k, i, j)):
                gap = entries[a, mid] + entries[mid, b] - entries[a, b]
                if abs(gap) <= tol.sep_tol:
                    anc_pos = int(mid)
                    break
            if anc_pos is not None:
                break
        if anc_pos is None:
            hidden_lists.append(coll)
        else:
            # Estimation error can fragment one ancestor's triples into
            # several collections; they name the same middle vertex and are
            # merged back together.
            anc = labels[anc_pos]
            observed.setdefault(anc, []).extend(coll)
            obs_positions.add(anc_pos)

    kept, rows, cross, prune_info = _prune_hidden_collections(
        hidden_lists, triples, entries, du, frozenset(obs_positions), tol
    )

    n_hid = len(kept)
    ext_labels = tuple(labels) + tuple(-(h + 1) for h in range(n_hid))
    q = p + n_hid
    ext = np.zeros((q, q))
    ext[:p, :p] = entries

    def label_triple(t: int) -> tuple[int, int, int]:
        i, j, k = (labels[x] for x in triples[t])
        return tuple(sorted((i, j, k)))

    collections: list[AncestorCollection] = []
    for anc in sorted(observed):
        collections.append(
            AncestorCollection(
                anc, False, tuple(label_triple(t) for t in observed[anc])
            )
        )
    for new_h, h in enumerate(kept):
        row = p + new_h
        ext[row, :p] = rows[h]
        ext[:p, row] = rows[h]
        collections.append(
            AncestorCollection(
                -(new_h + 1),
                True,
                tuple(label_triple(t) for t in hidden_lists[h]),
            )
        )
    for (new_1, h1), (new_2, h2) in itertools.combinations(enumerate(kept), 2):
        value = cross[frozenset((h1, h2))]
        row1, row2 = p + new_1, p + new_2
        ext[row1, row2] = ext[row2, row1] = value

    if diagnostics is not None:
        diagnostics["n_triples"] = int(len(triples))
        diagnostics["n_triple_pairs"] = int(len(pa))
        diagnostics["n_tia_passes"] = int(ok.sum())
        diagnostics["collection_sizes"] = [len(c.triples) for c in collections]
        diagnostics.update(prune_info)

    catalog = AncestorCatalog(tuple(collections))
    return catalog, DistanceMatrix(ext_labels, ext)


def learn_clusters(
    catalog: AncestorCatalog, ext_dist: ExtendedDistances, tol: Tolerances
) -> tuple[list[LeafCluster], list[InternalCluster]]:
    """Group non-ancestor observed vertices by their frontier: the ancestors
    not blocked by any other ancestor on the way to the vertex. A one-element
    frontier makes a leaf cluster, larger frontiers make internal clusters."""
    ancestors = sorted(
        c.ancestor for c in catalog.collections
    )
    a_obs = catalog.a_obs
    leaf_groups: dict[int, list[int]] = defaultdict(list)
    internal_groups: dict[frozenset[int], list[int]] = defaultdict(list)
    observed_labels = [lab for lab in ext_dist.labels if lab > 0]
    for x in sorted(set(observed_labels) - a_obs):
        frontier = []
        for a in ancestors:
            blocked = any(
                b != a
                and abs(
                    ext_dist.loc(x, b) + ext_dist.loc(b, a) - ext_dist.loc(x, a)
                )
                <= tol.sep_tol
                for b in ancestors
            )
            if not blocked:
                frontier.append(a)
        if not frontier:
            raise PipelineError(
                "learn-clusters", f"vertex {x} has no unblocked ancestor"
            )
        if len(frontier) == 1:
            leaf_groups[frontier[0]].append(x)
        else:
            internal_groups[frozenset(frontier)].append(x)
    leaf_clusters = [
        LeafCluster(a, tuple(sorted(leaf_groups[a]))) for a in sorted(leaf_groups)
    ]
    internal_clusters = [
        InternalCluster(key, tuple(sorted(internal_groups[key])))
        for key in sorted(internal_groups, key=_set_key)
    ]
    return leaf_clusters, internal_clusters


def non_cut_test(
    cluster: LeafCluster,
    dist: ExtendedDistances,
    v_obs: Sequence[int],
    tol: Tolerances,
) -> tuple[tuple[int, ...], tuple[int, ...], int | None]:
    """Split a leaf cluster into cut-side members and block-interior members.

    A member is interior (non-cut) when some pair of fellow members produces a
    failing identical-ancestor test against two anchor vertices outside the
    cluster; a two-member cluster instead checks whether the ancestor sits
    additively between its members (separate leaves) or strictly inside
    (block interior). Returns (c_cut, c_noncut, l3) where l3 is the
    designated vertex for hidden-ancestor clusters (the smallest cut-side
    member) and None otherwise."""
    members = list(cluster.l2)
    if len(members) < 2:
        raise ValueError("the cut test needs a cluster of at least two members")
    hidden = cluster.l1 < 0
    if len(members) == 2:
        u, v = members
        gap = (
            dist.loc(u, cluster.l1) + dist.loc(cluster.l1, v) - dist.loc(u, v)
        )
        if abs(gap) <= tol.sep_tol:
            cut = tuple(members)
            return cut, (), (min(cut) if hidden else None)
        if hidden:
            raise PipelineError(
                "non-cut-test",
                f"hidden ancestor {cluster.l1} has no cut-side member",
            )
        return (), tuple(members), None
    outside = sorted(set(v_obs) - set(members) - {cluster.l1})
    if len(outside) < 2:
        raise PipelineError(
            "non-cut-test",
            f"cluster of ancestor {cluster.l1} leaves fewer than two "
            f"observed vertices outside it",
        )
    a1, a2 = outside[:2]
    cut: list[int] = []
    noncut: list[int] = []
    for x in members:
        rest = [y for y in members if y != x]
        interior = any(
            not tia((x, y, a1), (x, z, a2), dist, tol)
            for y, z in itertools.permutations(rest, 2)
        )
        (noncut if interior else cut).append(x)
    l3: int | None = None
    if hidden:
        if not cut:
            raise PipelineError(
                "non-cut-test",
                f"hidden ancestor {cluster.l1} has no cut-side member",
            )
        l3 = min(cut)
    return tuple(cut), tuple(noncut), l3


EdgeRecord = tuple  # (part_u, part_v, u, v) with u in part_u, v in part_v


def pale(
    clusters: tuple[list[LeafCluster], list[InternalCluster]],
    a_obs: frozenset[int],
    ext_dist: ExtendedDistances,
    tol: Tolerances,
) -> tuple[list[frozenset[int]], frozenset[int], list[EdgeRecord]]:
    """Partition the observed vertices into parts and learn the local edges
    around each leaf cluster.

    Hidden ancestors are replaced by a designated member of their leaf
    cluster (recorded in l3/i3); internal clusters merge their members with
    the designated vertices of their frontier ancestors; singleton parts
    swallowed by a larger part are dropped."""
    leaf_clusters, internal_clusters = clusters
    v_obs = [lab for lab in ext_dist.labels if lab > 0]
    parts: list[frozenset[int]] = []
    e_leaf: list[EdgeRecord] = []
    designated: dict[int, int] = {a: a for a in a_obs}

    for lc in sorted(leaf_clusters, key=lambda c: c.l1):
        if lc.l1 in a_obs:
            if len(lc.l2) == 1:
                lc.l3 = lc.l1
                x = lc.l2[0]
                parts.extend((frozenset((x,)), frozenset((lc.l1,))))
                e_leaf.append(
                    (frozenset((x,)), frozenset((lc.l1,)), x, lc.l1)
                )
            else:
                c_cut, c_noncut, _ = non_cut_test(lc, ext_dist, v_obs, tol)
                lc.l3 = lc.l1
                block = frozenset(c_noncut) | {lc.l1}
                parts.append(block)
                for v in c_cut:
                    parts.append(frozenset((v,)))
                    e_leaf.append((block, frozenset((v,)), lc.l1, v))
        elif len(lc.l2) < 3:
            anchor = min(lc.l2)
            lc.l3 = anchor
            parts.append(frozenset((anchor,)))
            for v in lc.l2:
                if v == anchor:
                    continue
                parts.append(frozenset((v,)))
                e_leaf.append(
                    (frozenset((v,)), frozenset((anchor,)), v, anchor)
                )
        else:
            c_cut, c_noncut, l3 = non_cut_test(lc, ext_dist, v_obs, tol)
            lc.l3 = l3
            block = frozenset(c_noncut) | {l3}
            parts.append(block)
            for v in c_cut:
                if v == l3:
                    continue
                parts.append(frozenset((v,)))
                e_leaf.append((block, frozenset((v,)), l3, v))
        designated[lc.l1] = lc.l3

    for ic in sorted(internal_clusters, key=lambda c: _set_key(c.i1)):
        stand_ins = []
        for a in sorted(ic.i1):
            if a not in designated:
                raise PipelineError(
                    "partition",
                    f"hidden ancestor {a} of an internal cluster has no "
                    f"leaf cluster to designate a vertex from",
                )
            stand_ins.append(designated[a])
        ic.i3 = tuple(stand_ins)
        parts.append(frozenset(ic.i2) | set(ic.i3))

    # Singleton parts absorbed by a larger part are dropped; duplicates merge.
    multi = [part for part in parts if len(part) > 1]
    covered = frozenset(v for part in multi for v in part)
    pruned = [
        part
        for part in parts
        if len(part) > 1 or not part <= covered
    ]
    p_algo = list(dict.fromkeys(pruned))
    a_algo = frozenset(designated.values())
    return p_algo, a_algo, e_leaf


def non_block_neighbors(
    u: int,
    clusters: tuple[list[LeafCluster], list[InternalCluster]],
    a_algo: frozenset[int],
    ext_dist: ExtendedDistances,
    tol: Tolerances,
) -> frozenset[int]:
    """Designated vertices adjacent to ``u`` across the tree, outside any
    part that already contains both.

    Works in ancestor-label space: candidates start as all ancestors not
    sharing a cluster with u's ancestor, ancestors blocked by a co-member of
    one of u's clusters are removed, then ancestors blocked by a surviving
    candidate are removed; the survivors map back to designated vertices."""
    leaf_clusters, internal_clusters = clusters
    to_ancestor = {lc.l3: lc.l1 for lc in leaf_clusters if lc.l3 is not None}
    anc_u = to_ancestor.get(u, u)
    to_designated: dict[int, int] = {}
    for lc in leaf_clusters:
        if lc.l3 is not None:
            to_designated[lc.l1] = lc.l3
    all_ancestors = {to_ancestor.get(a, a) for a in a_algo}

    own: set[int] = {anc_u}
    for lc in leaf_clusters:
        if lc.l1 == anc_u:
            own.add(lc.l1)
    for ic in internal_clusters:
        if anc_u in ic.i1:
            own |= ic.i1

    delta = sorted(all_ancestors - own)
    co_members = sorted(own - {anc_u})
    blocked: set[int] = set()
    for x in delta:
        for b in co_members:
            gap = (
                ext_dist.loc(anc_u, b)
                + ext_dist.loc(b, x)
                - ext_dist.loc(anc_u, x)
            )
            if abs(gap) <= tol.sep_tol:
                blocked.add(x)
                break
    delta = [x for x in delta if x not in blocked]
    shadowed: set[int] = set()
    for k, l in itertools.permutations(delta, 2):
        gap = ext_dist.loc(anc_u, k) + ext_dist.loc(k, l) - ext_dist.loc(anc_u, l)
        if abs(gap) <= tol.sep_tol:
            shadowed.add(l)
    return frozenset(to_designated.get(x, x) for x in delta if x not in shadowed)


def edge_set_ast(
    p_algo: list[frozenset[int]],
    a_algo: frozenset[int],
    clusters: tuple[list[LeafCluster], list[InternalCluster]],
    e_leaf: list[EdgeRecord],
    ext_dist: ExtendedDistances,
    tol: Tolerances,
) -> list[EdgeRecord]:
    """Full edge-record list: the leaf-cluster edges plus one record per
    designated vertex and tree neighbor discovered from the distances."""
    records = list(e_leaf)
    for u in sorted(a_algo):
        part_u = next(
            (part for part in sorted(p_algo, key=_set_key) if u in part),
            frozenset((u,)),
        )
        for v in sorted(non_block_neighbors(u, clusters, a_algo, ext_dist, tol)):
            records.append((part_u, frozenset((v,)), u, v))
    return records


def _assemble_ast(
    p_algo: list[frozenset[int]],
    records: list[EdgeRecord],
    base_labels: Sequence[int],
    diagnostics: dict | None = None,
) -> ArticulatedSetTree:
    """Resolve edge records against the parts and validate the tree.

    Vertices not covered by any part become singleton parts first. Each
    record's endpoints resolve to the lexicographically smallest part
    containing the vertex; duplicate part pairs keep their first record.
    Vertices shared by several parts pick up star edges to their smallest
    host part unless an edge already joins the pair."""
    parts = list(p_algo)
    covered = {v for part in parts for v in part}
    for v in sorted(base_labels):
        if v not in covered:
            parts.append(frozenset((v,)))
    parts = sorted(dict.fromkeys(parts), key=_set_key)
    locus: dict[int, int] = {}
    for idx, part in enumerate(parts):
        for v in part:
            locus.setdefault(v, idx)

    edges: set[frozenset[int]] = set()
    articulation: dict[frozenset[int], tuple[int, int]] = {}
    notes: list[str] = []

    def add_edge(i: int, j: int, art_i: int, art_j: int) -> None:
        key = frozenset((i, j))
        if i == j:
            notes.append(
                f"dropped self-edge at part {sorted(parts[i])} "
                f"({art_i}, {art_j})"
            )
            return
        if key in edges:
            return
        edges.add(key)
        articulation[key] = (art_i, art_j) if i < j else (art_j, art_i)

    for _, _, u, v in records:
        add_edge(locus[u], locus[v], u, v)

    host_lists: dict[int, list[int]] = defaultdict(list)
    for idx, part in enumerate(parts):
        for v in part:
            host_lists[v].append(idx)
    for v in sorted(host_lists):
        hosts = host_lists[v]
        for other in hosts[1:]:
            add_edge(hosts[0], other, v, v)

    if diagnostics is not None and notes:
        diagnostics.setdefault("notes", []).extend(notes)

    ast = ArticulatedSetTree(
        tuple(parts), frozenset(edges), articulation
    )
    if not ast.is_tree():
        raise PipelineError(
            "assembly",
            f"edge resolution produced {len(edges)} edges over "
            f"{len(parts)} parts instead of a tree",
        )
    return ast


def _trivial_ast(labels: Sequence[int]) -> ArticulatedSetTree:
    parts = tuple(frozenset((v,)) for v in sorted(labels))
    if len(parts) <= 1:
        return ArticulatedSetTree(parts, frozenset(), {})
    a, b = sorted(labels)
    key = frozenset((0, 1))
    return ArticulatedSetTree(parts, frozenset((key,)), {key: (a, b)})


def run_nomad(
    data: Union[DistanceMatrix, np.ndarray],
    mode: str = "population",
    tol: Tolerances | None = None,
    return_diagnostics: bool = False,
):
    """Recover the articulated set tree behind observed pairwise distances.

    ``mode="population"`` takes a DistanceMatrix of exact distances and uses
    numerical-noise tolerances unless overridden. ``mode="finite"`` requires
    explicit tolerances and accepts either a DistanceMatrix or an n-by-p
    sample matrix, whose rows are reduced to empirical distances first.
    With ``return_diagnostics`` the result is (tree, diagnostics dict).
    """
    if mode not in ("population", "finite"):
        raise ValueError(f"unknown mode {mode!r}")
    diagnostics: dict = {"mode": mode, "stage_ms": {}}

    if mode == "finite":
        if tol is None:
            raise ValueError("finite mode requires explicit tolerances")
        if isinstance(data, DistanceMatrix):
            dist = data
        else:
            t0 = time.perf_counter()
            dist = empirical_distances(np.asarray(data, dtype=float))
            diagnostics["stage_ms"]["estimate-distances"] = (
                (time.perf_counter() - t0) * 1e3
            )
    else:
        if not isinstance(data, DistanceMatrix):
            raise ValueError("population mode expects a DistanceMatrix")
        dist = data
        tol = tol or Tolerances.population()

    if len(dist.labels) < 3:
        if not dist.labels:
            raise ValueError("cannot recover structure from an empty matrix")
        ast = _trivial_ast(dist.labels)
        return (ast, diagnostics) if return_diagnostics else ast

    def staged(stage: str, fn, *args):
        t0 = time.perf_counter()
        try:
            out = fn(*args)
        except PipelineError:
            raise
        except ValueError as exc:
            raise PipelineError(stage, str(exc)) from exc
        diagnostics["stage_ms"][stage] = (time.perf_counter() - t0) * 1e3
        return out

    catalog, ext = staged(
        "identify-ancestors", identify_ancestors, dist, tol, diagnostics
    )
    diagnostics["ancestors"] = {
        "observed": sorted(catalog.a_obs),
        "hidden": sorted(catalog.a_hid),
    }
    if not catalog.collections:
        ast = ArticulatedSetTree(
            (frozenset(dist.labels),), frozenset(), {}
        )
        return (ast, diagnostics) if return_diagnostics else ast

    clusters = staged("learn-clusters", learn_clusters, catalog, ext, tol)
    diagnostics["clusters"] = {
        "leaf": [[lc.l1, list(lc.l2)] for lc in clusters[0]],
        "internal": [[sorted(ic.i1), list(ic.i2)] for ic in clusters[1]],
    }
    p_algo, a_algo, e_leaf = staged(
        "partition", pale, clusters, catalog.a_obs, ext, tol
    )
    records = staged(
        "edges", edge_set_ast, p_algo, a_algo, clusters, e_leaf, ext, tol
    )
    ast = staged(
        "assembly", _assemble_ast, p_algo, records, list(dist.labels), diagnostics
    )
    return (ast, diagnostics) if return_diagnostics else ast
