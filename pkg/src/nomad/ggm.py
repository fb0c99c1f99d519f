"""Gaussian graphical models over graphs: precision synthesis, information
distances, noise corruption, sampling, and separation-margin measurement."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property, lru_cache
from math import ceil, log
from typing import Iterable, Sequence

import numpy as np

from .graphs import (
    UndirectedGraph,
    _set_key,
    block_decomposition,
    component_labels,
    is_connected,
    joint_graph,
)

#: Sentinel distance for exactly-zero correlations.
INF_DISTANCE = 1e12

#: A measured noise below this is treated as exactly zero (the copy variable
#: duplicates its original).
_EXACT_COPY_TOL = 1e-12

#: Triple-pair batches processed per vectorised step.
_PAIR_CHUNK = 1 << 17


@dataclass(frozen=True, eq=False)
class DistanceMatrix:
    """Symmetric matrix of pairwise information distances with vertex labels."""

    labels: tuple[int, ...]
    entries: np.ndarray

    def __post_init__(self) -> None:
        entries = np.array(self.entries, dtype=float)
        object.__setattr__(self, "entries", entries)
        object.__setattr__(self, "labels", tuple(int(x) for x in self.labels))
        n = len(self.labels)
        if len(set(self.labels)) != n:
            raise ValueError("distance labels must be distinct")
        if entries.shape != (n, n):
            raise ValueError(
                f"entries shape {entries.shape} does not match {n} labels"
            )
        if not np.array_equal(entries, entries.T):
            raise ValueError("distance matrix must be exactly symmetric")
        if np.any(np.diag(entries) != 0.0):
            raise ValueError("distance matrix must have a zero diagonal")
        entries.setflags(write=False)

    @cached_property
    def _index(self) -> dict[int, int]:
        return {lab: i for i, lab in enumerate(self.labels)}

    def loc(self, i: int, j: int) -> float:
        """Distance between the vertices labelled ``i`` and ``j``."""
        return float(self.entries[self._index[i], self._index[j]])

    def positions(self, labels: Iterable[int]) -> np.ndarray:
        return np.array([self._index[lab] for lab in labels], dtype=int)

    def restrict(self, labels: Sequence[int]) -> "DistanceMatrix":
        """Submatrix over the given labels, in the given order."""
        idx = self.positions(labels)
        return DistanceMatrix(tuple(labels), self.entries[np.ix_(idx, idx)].copy())


@dataclass(frozen=True)
class NoiseSpec:
    """Nonnegative diagonal noise added to an observed covariance."""

    diagonal: tuple[float, ...]

    def __post_init__(self) -> None:
        diag = tuple(float(x) for x in self.diagonal)
        object.__setattr__(self, "diagonal", diag)
        if any(x < 0 for x in diag):
            raise ValueError("noise variances must be nonnegative")

    @classmethod
    def of(cls, values: Iterable[float]) -> "NoiseSpec":
        return cls(tuple(float(x) for x in values))

    @classmethod
    def zero(cls, p: int) -> "NoiseSpec":
        return cls((0.0,) * p)

    def as_array(self) -> np.ndarray:
        return np.array(self.diagonal, dtype=float)

    def __len__(self) -> int:
        return len(self.diagonal)


@dataclass(frozen=True, eq=False)
class PrecisionMatrix:
    """Symmetric positive-definite precision matrix over vertices 1..p."""

    entries: np.ndarray

    def __post_init__(self) -> None:
        entries = np.array(self.entries, dtype=float)
        object.__setattr__(self, "entries", entries)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise ValueError("precision matrix must be square")
        if not np.allclose(entries, entries.T, atol=1e-12):
            raise ValueError("precision matrix must be symmetric")
        try:
            np.linalg.cholesky(entries)
        except np.linalg.LinAlgError as exc:
            raise ValueError("precision matrix must be positive definite") from exc
        entries.setflags(write=False)

    @property
    def p(self) -> int:
        return self.entries.shape[0]

    def covariance(self) -> np.ndarray:
        return np.linalg.inv(self.entries)


@dataclass(frozen=True)
class ModelMargins:
    """Measured separation margins of a joint model.

    ``gamma``: smallest absolute additivity gap |d_ij - d_ik - d_kj| over
    middles k that do not separate the pair (distributionally).
    ``zeta``: smallest absolute triplet-identity residual over pairs of
    copy-vertex triples that are neither star triples nor separated triples.
    Infinite when no constraining configuration exists (trees).
    """

    gamma: float
    zeta: float


def information_distances(
    sigma: np.ndarray, labels: Sequence[int] | None = None
) -> DistanceMatrix:
    """Pairwise distances -log|corr| of a positive-definite covariance."""
    sigma = np.asarray(sigma, dtype=float)
    if sigma.ndim != 2 or sigma.shape[0] != sigma.shape[1]:
        raise ValueError("covariance must be square")
    if not np.allclose(sigma, sigma.T, atol=1e-12):
        raise ValueError("covariance must be symmetric")
    try:
        np.linalg.cholesky(sigma)
    except np.linalg.LinAlgError as exc:
        raise ValueError("covariance must be positive definite") from exc
    return _correlation_distances(sigma, labels)


def _correlation_distances(
    second_moment: np.ndarray, labels: Sequence[int] | None
) -> DistanceMatrix:
    """Distances from any symmetric second-moment matrix with positive diagonal."""
    diag = np.diag(second_moment)
    if np.any(diag <= 0):
        raise ValueError("second-moment diagonal must be positive")
    inv_std = 1.0 / np.sqrt(diag)
    rho = np.abs(second_moment * inv_std[:, None] * inv_std[None, :])
    np.clip(rho, 0.0, 1.0, out=rho)
    with np.errstate(divide="ignore"):
        d = -np.log(rho)
    d[rho == 0.0] = INF_DISTANCE
    np.fill_diagonal(d, 0.0)
    d = np.minimum(d, d.T)
    p = second_moment.shape[0]
    if labels is None:
        labels = range(1, p + 1)
    return DistanceMatrix(tuple(labels), d)


def noisy_covariance(sigma: np.ndarray, noise: NoiseSpec) -> np.ndarray:
    """Add diagonal noise variances to a covariance matrix."""
    sigma = np.asarray(sigma, dtype=float)
    if sigma.shape != (len(noise), len(noise)):
        raise ValueError("noise dimension does not match the covariance")
    return sigma + np.diag(noise.as_array())


def joint_distances(
    g: UndirectedGraph, k: PrecisionMatrix, noise: NoiseSpec
) -> DistanceMatrix:
    """Distances over originals 1..p and their noisy copies p+1..2p.

    The joint second-moment matrix [[S, S], [S, S + D]] (S the model
    covariance) is singular whenever some noise variance vanishes, so the
    distances are read off its correlations without a definiteness gate.
    """
    p = len(g.vertices)
    if k.p != p or len(noise) != p:
        raise ValueError("graph, precision, and noise dimensions must agree")
    if g.vertices != frozenset(range(1, p + 1)):
        raise ValueError("joint construction requires vertices labelled 1..p")
    sigma = k.covariance()
    joint = np.block(
        [[sigma, sigma], [sigma, sigma + np.diag(noise.as_array())]]
    )
    joint = (joint + joint.T) / 2.0
    return _correlation_distances(joint, range(1, 2 * p + 1))


def sample(sigma: np.ndarray, n: int, seed: int) -> np.ndarray:
    """Draw ``n`` iid zero-mean Gaussian rows with covariance ``sigma``."""
    if n < 1:
        raise ValueError("sample size must be positive")
    sigma = np.asarray(sigma, dtype=float)
    try:
        chol = np.linalg.cholesky(sigma)
    except np.linalg.LinAlgError as exc:
        raise ValueError("covariance must be positive definite") from exc
    rng = np.random.default_rng(seed)
    return rng.standard_normal((n, sigma.shape[0])) @ chol.T


def empirical_distances(
    data: np.ndarray, labels: Sequence[int] | None = None
) -> DistanceMatrix:
    """Distances from the uncentered second-moment estimate of sample rows."""
    data = np.asarray(data, dtype=float)
    if data.ndim != 2:
        raise ValueError("data must be an n-by-p matrix of sample rows")
    n = data.shape[0]
    if n < 2:
        raise ValueError("at least two samples are required")
    second = data.T @ data / n
    second = (second + second.T) / 2.0
    return _correlation_distances(second, labels)


def _triplet_distance_array(entries: np.ndarray, triples: np.ndarray) -> np.ndarray:
    """Per-member triplet distances d_x^U = (d_xy + d_xz - d_yz) / 2, shaped
    like ``triples`` (rows of three position indices into ``entries``)."""
    d01 = entries[triples[:, 0], triples[:, 1]]
    d02 = entries[triples[:, 0], triples[:, 2]]
    d12 = entries[triples[:, 1], triples[:, 2]]
    out = np.empty(triples.shape, dtype=float)
    out[:, 0] = 0.5 * (d01 + d02 - d12)
    out[:, 1] = 0.5 * (d01 + d12 - d02)
    out[:, 2] = 0.5 * (d02 + d12 - d01)
    return out


def _component_label_matrix(gj: UndirectedGraph, p: int) -> np.ndarray:
    """Row r-1 labels the components of the joint graph with original vertex r
    removed: entry [r-1, v] is v's component index, -1 for v = r."""
    size = 2 * p + 1
    out = np.full((p, size), -1, dtype=int)
    for r in range(1, p + 1):
        labels = component_labels(gj, removed=(r,))
        for v, lab in labels.items():
            out[r - 1, v] = lab
    return out


def _shared_vertex_pairs(
    triples: np.ndarray, n_vertices: int
) -> tuple[np.ndarray, np.ndarray]:
    """Index pairs (a < b) of triples sharing at least one vertex."""
    n_t = len(triples)
    by_vertex: list[list[int]] = [[] for _ in range(n_vertices)]
    for t_idx, row in enumerate(triples):
        for v in row:
            by_vertex[v].append(t_idx)
    codes: list[np.ndarray] = []
    for bucket in by_vertex:
        if len(bucket) < 2:
            continue
        arr = np.array(bucket, dtype=np.int64)
        a_idx, b_idx = np.triu_indices(len(arr), k=1)
        codes.append(arr[a_idx] * n_t + arr[b_idx])
    if not codes:
        return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64)
    merged = np.unique(np.concatenate(codes))
    return merged // n_t, merged % n_t


@lru_cache(maxsize=4)
def _center_pair_structure(
    g: UndirectedGraph,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Copy-triple enumeration for a graph, with the index pairs of
    vertex-sharing triples whose metric centers differ.

    Returns ``(triples_v, pa, pb)`` where ``triples_v`` holds joint labels
    p+1..2p and ``pa``/``pb`` index the center-differing shared pairs. The
    center of a copy triple is the vertex that mutually separates the copies
    in the joint graph when one exists, and otherwise the median of the
    members' three distinct entry vertices into a non-trivial block; triples
    with equal centers pass the shared-ancestor distance test structurally,
    so only differing pairs constrain it."""
    p = len(g.vertices)
    triples_v = np.array(
        list(itertools.combinations(range(p + 1, 2 * p + 1), 3)), dtype=np.int64
    )
    empty = np.empty(0, dtype=np.int64)
    if len(triples_v) == 0:
        return triples_v, empty, empty
    label_matrix = _component_label_matrix(joint_graph(g), p)

    # Star triples: the smallest original separating all three copy pairs
    # names the center. A removed vertex isolates its own copy, so the label
    # mismatch also covers triples containing the separator's copy.
    lab = label_matrix[:, triples_v]  # (p, N, 3)
    pairwise = (
        (lab[:, :, 0] != lab[:, :, 1])
        & (lab[:, :, 0] != lab[:, :, 2])
        & (lab[:, :, 1] != lab[:, :, 2])
    )
    star = pairwise.any(axis=0)
    star_vertex = pairwise.argmax(axis=0) + 1

    # Non-star triples center on the median of their entry vertices into the
    # unique non-trivial block that all three members reach through distinct
    # vertices.
    gid = np.full(len(triples_v), -1, dtype=np.int64)
    groups: dict[tuple, int] = {}
    for t in np.nonzero(star)[0]:
        key = ("v", int(star_vertex[t]))
        gid[t] = groups.setdefault(key, len(groups))
    unassigned = ~star
    for block in sorted(block_decomposition(g).nontrivial_blocks, key=_set_key):
        if not unassigned.any():
            break
        members = sorted(block)
        ent = np.zeros(2 * p + 1, dtype=np.int64)
        for v in members:
            other = next(u for u in members if u != v)
            mask = label_matrix[v - 1, :] != label_matrix[v - 1, other]
            ent[mask] = v
        e = ent[triples_v[unassigned]]
        distinct = (
            (e[:, 0] != e[:, 1]) & (e[:, 0] != e[:, 2]) & (e[:, 1] != e[:, 2])
        )
        hit = np.nonzero(unassigned)[0][distinct]
        for t, entries in zip(hit, np.sort(e[distinct], axis=1)):
            key = ("s",) + tuple(int(x) for x in entries)
            gid[t] = groups.setdefault(key, len(groups))
        unassigned[hit] = False
    for t in np.nonzero(unassigned)[0]:  # pragma: no cover - defensive
        gid[t] = len(groups) + int(t)

    pa, pb = _shared_vertex_pairs(triples_v, 2 * p + 1)
    differ = gid[pa] != gid[pb]
    return triples_v, pa[differ], pb[differ]


def measure_margins(g: UndirectedGraph, dist: DistanceMatrix) -> ModelMargins:
    """Measure the additivity margin gamma and the triplet-identity margin
    zeta of a joint model from its distances and graph ground truth."""
    p = len(g.vertices)
    if dist.labels != tuple(range(1, 2 * p + 1)):
        raise ValueError("margins need joint distances labelled 1..2p")
    gj = joint_graph(g)
    d = dist.entries
    size = 2 * p

    # Variables that are exact duplicates of an original: the originals
    # themselves, plus copies whose measured noise is zero.
    exact_copy = np.array(
        [dist.loc(i, i + p) <= _EXACT_COPY_TOL for i in range(1, p + 1)]
    )
    # canon[v]: the original vertex whose variable v carries (0-unused slot).
    canon = np.arange(size + 1)
    for i in range(1, p + 1):
        if exact_copy[i - 1]:
            canon[i + p] = i
    label_matrix = _component_label_matrix(gj, p)

    gamma = np.inf
    idx_to_vertex = np.arange(1, size + 1)
    canon_v = canon[idx_to_vertex]
    same_variable = canon_v[:, None] == canon_v[None, :]
    for m_pos in range(size):
        m_star = canon_v[m_pos]
        row = d[:, m_pos]
        gaps = np.abs(d - row[:, None] - row[None, :])
        excluded = same_variable.copy()
        excluded |= (canon_v[:, None] == m_star) | (canon_v[None, :] == m_star)
        if m_star <= p:  # the middle's variable sits at an original vertex
            labs = label_matrix[m_star - 1, idx_to_vertex]
            excluded |= labs[:, None] != labs[None, :]
        gaps[excluded] = np.inf
        gaps[m_pos, :] = np.inf
        gaps[:, m_pos] = np.inf
        np.fill_diagonal(gaps, np.inf)
        gamma = min(gamma, float(gaps.min()))

    zeta = _zeta_margin(d, dist, g, p)
    return ModelMargins(gamma=float(gamma), zeta=zeta)


def _zeta_margin(
    d: np.ndarray, dist: DistanceMatrix, g: UndirectedGraph, p: int
) -> float:
    """Smallest decision margin among copy-triple pairs that the shared-
    ancestor test must reject: over vertex-sharing pairs whose metric centers
    differ, the largest row-wise second-smallest |d_x^U + d_a^W - d_xa|.

    The test accepts a pair when every row keeps two cells within the
    threshold, so a pair stays rejectable exactly while some row's
    second-smallest cell clears it; the minimum over pairs is the margin the
    threshold must stay below. Infinite when every shared pair agrees."""
    triples_v, pa, pb = _center_pair_structure(g)
    if len(pa) == 0:
        return np.inf
    pos = dist.positions(range(1, 2 * p + 1))
    triples = pos[triples_v - 1]
    du = _triplet_distance_array(d, triples)
    zeta = np.inf
    for lo in range(0, len(pa), _PAIR_CHUNK):
        ia = pa[lo : lo + _PAIR_CHUNK]
        ib = pb[lo : lo + _PAIR_CHUNK]
        cells = np.abs(
            du[ia][:, :, None]
            + du[ib][:, None, :]
            - d[triples[ia][:, :, None], triples[ib][:, None, :]]
        )
        second = np.partition(cells, 1, axis=2)[:, :, 1]
        zeta = min(zeta, float(second.max(axis=1).min()))
    return zeta


def synthesize_precision(
    g: UndirectedGraph,
    weight_range: tuple[float, float] = (0.2, 0.5),
    seed: int = 0,
    *,
    diag_slack: float = 0.1,
    gamma_floor: float = 1e-7,
    zeta_floor: float = 1e-7,
    max_attempts: int = 50,
) -> PrecisionMatrix:
    """Draw a faithful precision matrix supported on ``g``: random-signed
    off-diagonal weights with diagonal dominance, rejection-sampled until the
    measured noise-free margins clear the configured floors.

    ``diag_slack`` is the diagonal-dominance surplus. Shrinking it toward
    zero strengthens marginal correlations (pairwise information distances
    scale down), which keeps distant pairs measurable from finite samples on
    large-diameter graphs.

    The default floors guard against degenerate draws rather than demand
    comfortable margins: graphs with long sparse loops have intrinsically
    tiny margins (loop-closure corrections decay exponentially with loop
    length), and rejecting them outright would make such models
    unsynthesizable."""
    lo, hi = float(weight_range[0]), float(weight_range[1])
    if not (0.0 < lo <= hi):
        raise ValueError("weight range must satisfy 0 < low <= high")
    if diag_slack <= 0:
        raise ValueError("diag_slack must be positive")
    if not is_connected(g):
        raise ValueError("model synthesis requires a connected graph")
    p = len(g.vertices)
    if g.vertices != frozenset(range(1, p + 1)):
        raise ValueError("model synthesis requires vertices labelled 1..p")
    rng = np.random.default_rng(seed)
    edges = [(u - 1, v - 1) for u, v in g.sorted_edges()]
    last = None
    for _ in range(max_attempts):
        k = np.zeros((p, p))
        for i, j in edges:
            w = rng.uniform(lo, hi) * rng.choice((-1.0, 1.0))
            k[i, j] = k[j, i] = w
        np.fill_diagonal(k, np.abs(k).sum(axis=1) + diag_slack)
        precision = PrecisionMatrix(k)
        margins = measure_margins(
            g, joint_distances(g, precision, NoiseSpec.zero(p))
        )
        last = margins
        if margins.gamma > gamma_floor and margins.zeta > zeta_floor:
            return precision
    raise ValueError(
        f"no weight draw cleared the margin floors after {max_attempts} "
        f"attempts (last margins: gamma={last.gamma:.3g}, zeta={last.zeta:.3g})"
    )


def sample_bound(
    rho_min: float, eps_d: float, p: int, tau: float, c: float = 1.0
) -> int:
    """Sample-size bound that makes every estimated distance accurate to
    eps_d/2 with probability at least 1 - tau."""
    if not (0.0 < rho_min <= 1.0):
        raise ValueError("rho_min must lie in (0, 1]")
    if eps_d <= 0 or tau <= 0 or tau >= 1 or p < 2 or c <= 0:
        raise ValueError("invalid sample-bound arguments")
    x = (rho_min * eps_d) ** 2
    kappa = log((16.0 + x) / (16.0 - x))
    return ceil(c * (1.0 / kappa) * max(log(p * p / tau), log(1.0 / kappa)))
