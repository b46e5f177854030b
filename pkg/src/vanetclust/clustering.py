"""1-D K-means cluster formation, gateway election and cluster-count search.

All routines work on positions sorted ascending. In one dimension the
nearest-center cells of sorted centers are intervals, so every grouping
produced here is a contiguous run of the sorted input.

The Lloyd loop and the cluster-count search run inside numba kernels; the
Monte Carlo estimator calls the search once per street per trial.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from numba import njit

from .rng import derive_seed, make_rng
from .scenario import VehicleSet

DEFAULT_MAX_ITER = 100
DEFAULT_TOL = 1e-6

# slack on the span lower bound so rounding can never push it past a feasible k
_SPAN_SLACK = 1.0 + 1e-12


@dataclass(frozen=True)
class KMeansResult:
    labels: np.ndarray  # center index per input position
    centers: np.ndarray
    iterations: int
    wcss: float
    wcss_history: tuple[float, ...] = ()

    @property
    def assignments(self) -> dict[int, int]:
        return {i: int(c) for i, c in enumerate(self.labels)}


@dataclass(frozen=True)
class Cluster:
    member_ids: tuple[int, ...]
    centroid: float
    gateway_id: int
    span: float

    def to_dict(self) -> dict:
        return {
            "member_ids": list(self.member_ids),
            "centroid_m": self.centroid,
            "gateway_id": self.gateway_id,
            "span_m": self.span,
        }


@dataclass(frozen=True)
class ClusterStructure:
    street_id: str
    clusters: tuple[Cluster, ...]
    singleton_ids: tuple[int, ...]
    n: int
    k_searched: int = 0

    @property
    def k(self) -> int:
        return len(self.clusters)

    @property
    def m(self) -> int:
        return len(self.singleton_ids)

    @property
    def groups(self) -> int:
        """Number of feasible groups, singletons included."""
        return self.k + self.m

    def to_dict(self) -> dict:
        return {
            "street_id": self.street_id,
            "n": self.n,
            "k": self.k,
            "m": self.m,
            "clusters": [c.to_dict() for c in self.clusters],
            "singleton_ids": list(self.singleton_ids),
        }


# --------------------------------------------------------------------------
# kernels


@njit(cache=True, nogil=True)
def _assign_into(x, centers, labels):
    # merge walk over sorted x and sorted centers; midpoint ties go low
    k = centers.size
    j = 0
    for i in range(x.size):
        while j < k - 1 and x[i] > 0.5 * (centers[j] + centers[j + 1]):
            j += 1
        labels[i] = j


@njit(cache=True, nogil=True)
def _lloyd_kernel(x, init, max_iter, tol):
    n = x.size
    k = init.size
    centers = np.sort(init)
    labels = np.empty(n, np.int64)
    history = np.empty(max_iter)
    counts = np.zeros(k, np.int64)
    sums = np.zeros(k)
    means = np.empty(k)
    revived = np.zeros(k, np.bool_)
    it = 0
    while it < max_iter:
        it += 1
        _assign_into(x, centers, labels)
        counts[:] = 0
        sums[:] = 0.0
        for i in range(n):
            counts[labels[i]] += 1
            sums[labels[i]] += x[i]
        has_empty = False
        for j in range(k):
            if counts[j] > 0:
                means[j] = sums[j] / counts[j]
            else:
                means[j] = centers[j]
                has_empty = True
        w = 0.0
        for i in range(n):
            d = x[i] - means[labels[i]]
            w += d * d
        history[it - 1] = w

        new = means.copy()
        if has_empty:
            # move each empty center onto the point farthest from the
            # nearest live center
            revived[:] = False
            for j in range(k):
                if counts[j] > 0:
                    continue
                best = -1.0
                bi = 0
                for i in range(n):
                    dmin = np.inf
                    for c in range(k):
                        if counts[c] > 0 or revived[c]:
                            d = abs(x[i] - new[c])
                            if d < dmin:
                                dmin = d
                    if dmin > best:
                        best = dmin
                        bi = i
                if best > 0.0:
                    new[j] = x[bi]
                revived[j] = True

        shift = 0.0
        for j in range(k):
            d = abs(new[j] - centers[j])
            if d > shift:
                shift = d
        centers = np.sort(new)
        if shift <= tol:
            break
    return labels, means.copy(), it, history[:it].copy()


@njit(cache=True, nogil=True)
def _farthest_extend(x, order, mindist, have, want):
    if have == 0:
        mu = 0.0
        for i in range(x.size):
            mu += x[i]
        mu /= x.size
        best = -1.0
        for i in range(x.size):
            d = abs(x[i] - mu)
            if d > best:
                best = d
                order[0] = i
        for i in range(x.size):
            mindist[i] = abs(x[i] - x[order[0]])
        have = 1
    while have < want:
        nxt = 0
        best = -1.0
        for i in range(x.size):
            if mindist[i] > best:
                best = mindist[i]
                nxt = i
        order[have] = nxt
        have += 1
        for i in range(x.size):
            d = abs(x[i] - x[nxt])
            if d < mindist[i]:
                mindist[i] = d
    return have


@njit(cache=True, nogil=True)
def _groups_of(x, labels):
    n = x.size
    starts = np.empty(n, np.int64)
    ends = np.empty(n, np.int64)
    g = 0
    starts[0] = 0
    for i in range(1, n):
        if labels[i] != labels[i - 1]:
            ends[g] = i
            g += 1
            starts[g] = i
    ends[g] = n
    g += 1
    starts = starts[:g].copy()
    ends = ends[:g].copy()
    means = np.empty(g)
    gateways = np.empty(g, np.int64)
    for j in range(g):
        a = starts[j]
        b = ends[j]
        s = 0.0
        for i in range(a, b):
            s += x[i]
        mu = min(max(s / (b - a), x[a]), x[b - 1])
        means[j] = mu
        # first minimum: smaller position, then smaller id
        gi = a
        best = abs(x[a] - mu)
        for i in range(a + 1, b):
            d = abs(x[i] - mu)
            if d < best:
                best = d
                gi = i
        gateways[j] = gi
    return starts, ends, means, gateways


@njit(cache=True, nogil=True)
def _groups_feasible(x, radii, starts, ends, gateways):
    for j in range(starts.size):
        g = gateways[j]
        for i in range(starts[j], ends[j]):
            if abs(x[i] - x[g]) > min(radii[i], radii[g]):
                return False
    return True


@njit(cache=True, nogil=True)
def _search_kernel(x, radii, max_iter, tol):
    n = x.size
    max_span = 2.0 * radii.max() * _SPAN_SLACK
    k = 1
    start = x[0]
    for i in range(n):
        if x[i] - start > max_span:
            k += 1
            start = x[i]
    order = np.empty(n, np.int64)
    mindist = np.empty(n)
    have = 0
    while True:
        have = _farthest_extend(x, order, mindist, have, k)
        init = np.empty(k)
        for j in range(k):
            init[j] = x[order[j]]
        labels, _, _, _ = _lloyd_kernel(x, init, max_iter, tol)
        starts, ends, means, gateways = _groups_of(x, labels)
        if k >= n or _groups_feasible(x, radii, starts, ends, gateways):
            return k, starts, ends, means, gateways
        k += 1


# --------------------------------------------------------------------------
# public API


def _as_sorted_array(positions: Sequence[float]) -> np.ndarray:
    x = np.ascontiguousarray(positions, dtype=float)
    if x.ndim != 1 or x.size == 0:
        raise ValueError("positions must be a non-empty 1-D sequence")
    if np.any(np.diff(x) < 0):
        raise ValueError("positions must be sorted ascending")
    return x


def _check_k(k: int, n: int) -> None:
    if not 1 <= k <= n:
        raise ValueError(f"k must lie in [1, {n}], got {k}")


def partition_wcss(x: np.ndarray, labels: np.ndarray) -> tuple[float, np.ndarray]:
    """WCSS of a labelled grouping and the per-label means."""
    k = int(labels.max()) + 1
    counts = np.bincount(labels, minlength=k)
    sums = np.bincount(labels, weights=x, minlength=k)
    means = np.divide(sums, counts, out=np.zeros(k), where=counts > 0)
    return float(np.sum((x - means[labels]) ** 2)), means


def farthest_point_init(positions: Sequence[float], k: int) -> np.ndarray:
    """Seeds spread as far apart as possible, in selection order.

    The first seed is the point farthest from the mean of the input; each
    later one maximizes its distance to the nearest earlier seed. Ties go to
    the lower index. The seeds for k are a prefix of the seeds for k + 1.
    """
    x = _as_sorted_array(positions)
    _check_k(k, x.size)
    order = np.empty(x.size, np.int64)
    _farthest_extend(x, order, np.empty(x.size), 0, k)
    return x[order[:k]]


def lloyd_1d(x: np.ndarray, init: np.ndarray, max_iter: int = DEFAULT_MAX_ITER,
             tol: float = DEFAULT_TOL) -> KMeansResult:
    x = _as_sorted_array(x)
    labels, centers, iterations, history = _lloyd_kernel(
        x, np.ascontiguousarray(init, dtype=float), int(max_iter), float(tol))
    wcss, _ = partition_wcss(x, labels)
    return KMeansResult(labels, centers, int(iterations), wcss, tuple(history.tolist()))


def _kmeans_pp_init(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    idx = [int(rng.integers(x.size))]
    d2 = (x - x[idx[0]]) ** 2
    for _ in range(1, k):
        total = d2.sum()
        if total <= 0:
            i = int(rng.integers(x.size))
        else:
            i = int(np.searchsorted(np.cumsum(d2), rng.random() * total, side="right"))
            i = min(i, x.size - 1)
        idx.append(i)
        np.minimum(d2, (x - x[i]) ** 2, out=d2)
    return x[idx]


def kmeans_1d(positions: Sequence[float], k: int, max_iter: int = DEFAULT_MAX_ITER,
              tol: float = DEFAULT_TOL, restarts: int = 0, seed: int = 0) -> KMeansResult:
    """Lloyd's K-means on sorted 1-D positions.

    Starts from farthest-point seeds and iterates until no center moves more
    than ``tol`` or ``max_iter`` assignment steps have run. With
    ``restarts > 0``, extra k-means++ starts are drawn from streams derived
    from ``seed`` and the lowest-WCSS result is kept; earlier runs win ties.
    """
    x = _as_sorted_array(positions)
    _check_k(k, x.size)
    if max_iter < 1:
        raise ValueError("max_iter must be at least 1")
    best = lloyd_1d(x, farthest_point_init(x, k), max_iter, tol)
    for r in range(restarts):
        rng = make_rng(derive_seed(seed, "kmeans-restart", k, r))
        cand = lloyd_1d(x, _kmeans_pp_init(x, k, rng), max_iter, tol)
        if cand.wcss < best.wcss:
            best = cand
    return best


def kmeans_1d_exact(positions: Sequence[float], k: int) -> KMeansResult:
    """Globally WCSS-optimal partition into k contiguous groups.

    Optimal 1-D clusters are intervals of the sorted input, so a dynamic
    program over split points is exact. O(k n^2) time, O(n^2) memory.
    """
    x = _as_sorted_array(positions)
    n = x.size
    _check_k(k, n)

    # cost[i, j]: squared deviations of x[i..j] inclusive
    cost = np.full((n, n), np.inf)
    for i in range(n):
        seg = x[i:] - x[i]
        cnt = np.arange(1, n - i + 1)
        s1 = np.cumsum(seg)
        cost[i, i:] = np.maximum(np.cumsum(seg * seg) - s1 * s1 / cnt, 0.0)

    # best[c, j]: optimal cost of x[0..j] split into c + 1 groups
    best = np.full((k, n), np.inf)
    split = np.zeros((k, n), dtype=np.int64)
    best[0] = cost[0]
    for c in range(1, k):
        for j in range(c, n):
            cand = best[c - 1, c - 1:j] + cost[c:j + 1, j]
            i = int(np.argmin(cand))
            best[c, j] = cand[i]
            split[c, j] = i + c

    labels = np.empty(n, dtype=np.int64)
    j = n - 1
    for c in range(k - 1, -1, -1):
        i = split[c, j] if c > 0 else 0
        labels[i:j + 1] = c
        j = i - 1
    wcss, means = partition_wcss(x, labels)
    return KMeansResult(labels, means, 0, wcss, (wcss,))


def elect_gateway(positions: Sequence[float], ids: Sequence[int], centroid: float) -> int:
    """Member closest to the centroid; ties go to smaller position, then id."""
    if len(positions) == 0:
        raise ValueError("cannot elect a gateway for an empty member set")
    if len(positions) != len(ids):
        raise ValueError("positions and ids differ in length")
    _, _, gid = min((abs(p - centroid), p, i) for p, i in zip(positions, ids))
    return gid


def _radius_of(radii: Mapping[int, float] | float, vid: int) -> float:
    if isinstance(radii, Mapping):
        return float(radii[vid])
    return float(radii)


def check_feasibility(cluster: Cluster, positions: Mapping[int, float],
                      radii: Mapping[int, float] | float) -> bool:
    """Star-topology linking condition around the gateway.

    True iff every member lies within both its own radius and the gateway's
    radius of the gateway.
    """
    g = cluster.gateway_id
    gpos = positions[g]
    grad = _radius_of(radii, g)
    return all(abs(positions[v] - gpos) <= min(_radius_of(radii, v), grad)
               for v in cluster.member_ids)


def search_groups(x: np.ndarray, radii: np.ndarray, max_iter: int = DEFAULT_MAX_ITER,
                  tol: float = DEFAULT_TOL):
    """Smallest k whose K-means grouping is feasible, with its groups.

    Returns ``(k, starts, ends, means, gateways)`` where group j covers
    ``x[starts[j]:ends[j]]`` and ``gateways[j]`` indexes its gateway.

    The scan begins at a provable lower bound instead of k = 1: a feasible
    star spans at most twice the largest radius, so fewer groups than the
    greedy span cover needs are never feasible and skipping them cannot
    change the answer.
    """
    x = _as_sorted_array(x)
    radii = np.ascontiguousarray(radii, dtype=float)
    return _search_kernel(x, radii, int(max_iter), float(tol))


def optimize_cluster_count(vs: VehicleSet, radius: float | None = None,
                           max_iter: int = DEFAULT_MAX_ITER,
                           tol: float = DEFAULT_TOL) -> ClusterStructure:
    """Cluster one street with the smallest feasible number of K-means groups.

    ``radius`` overrides every vehicle's coverage radius when given; otherwise
    each vehicle's own radius applies. One-vehicle groups become singletons.
    """
    if len(vs) == 0:
        raise ValueError(f"street {vs.street_id!r} has no vehicles to cluster")
    x = vs.positions
    if radius is not None:
        if not (radius > 0 and math.isfinite(radius)):
            raise ValueError(f"radius must be positive, got {radius!r}")
        radii = np.full(x.size, float(radius))
    else:
        radii = vs.radii
    k, starts, ends, means, gateways = search_groups(x, radii, max_iter, tol)
    ids = vs.ids
    clusters, singles = [], []
    for a, b, mean, g in zip(starts, ends, means, gateways):
        if b - a == 1:
            singles.append(ids[a])
        else:
            clusters.append(Cluster(tuple(ids[a:b]), float(mean), ids[g], float(x[b - 1] - x[a])))
    return ClusterStructure(vs.street_id, tuple(clusters), tuple(singles), len(vs), int(k))


def min_feasible_groups(positions: Sequence[float], radius: float) -> int:
    """Group count (clusters plus singletons) picked by the count search."""
    x = _as_sorted_array(positions)
    _, starts, _, _, _ = search_groups(x, np.full(x.size, float(radius)))
    return int(starts.size)
