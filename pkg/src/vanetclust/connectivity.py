"""Closed-form connection probabilities and a Monte Carlo estimator.

The analytic side evaluates the per-vehicle probability 1 - exp(-rho R) and
the clustered street probability

    [(1 - q)(1 - exp(-rho R)) + q (1 - exp(-2 rho R))] ** (m + k),  q = k / n

for a realized cluster structure. The Monte Carlo side is independent of
those formulas: it places vehicles, clusters them, and checks geometric gap
thresholds directly.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Iterable, Sequence

import numpy as np

from .clustering import DEFAULT_MAX_ITER, DEFAULT_TOL, search_groups
from .rng import derive_seed, make_rng
from .scenario import RoadScenario, sample_positions

Z95 = 1.96


def _require_positive(name: str, value: float) -> None:
    if not (value > 0 and math.isfinite(value)):
        raise ValueError(f"{name} must be positive and finite, got {value!r}")


def vehicle_connection_probability(density: float, radius: float) -> float:
    """Probability that the gap to the next vehicle is at most ``radius``."""
    _require_positive("density", density)
    _require_positive("radius", radius)
    return -math.expm1(-density * radius)


@dataclass(frozen=True)
class AnalyticParams:
    density: float
    radius: float
    n: int
    k: int
    m: int

    def __post_init__(self):
        _require_positive("density", self.density)
        _require_positive("radius", self.radius)
        if self.n < 1:
            raise ValueError(f"n must be at least 1, got {self.n}")
        if not 0 <= self.k <= self.n:
            raise ValueError(f"k must lie in [0, n], got {self.k}")
        if self.m < 0:
            raise ValueError(f"m must be non-negative, got {self.m}")

    @property
    def q(self) -> float:
        return self.k / self.n


def _power(base: float, exponent: int) -> float:
    if exponent == 0 or base >= 1.0:
        return 1.0
    if base <= 0.0:
        return 0.0
    return math.exp(exponent * math.log(base))


def clustered_bracket(density: float, radius: float, q: float) -> float:
    """Per-node factor of the clustered formula for cluster fraction ``q``."""
    single = -math.expm1(-density * radius)
    cluster = -math.expm1(-2.0 * density * radius)
    return (1.0 - q) * single + q * cluster


def system_connection_probability(params: AnalyticParams) -> float:
    p = params
    return _power(clustered_bracket(p.density, p.radius, p.q), p.m + p.k)


def noncluster_connection_probability(density: float, radius: float, n: int) -> float:
    """Every vehicle links on its own: ``(1 - exp(-rho R)) ** n``."""
    if n < 0:
        raise ValueError(f"n must be non-negative, got {n}")
    return _power(vehicle_connection_probability(density, radius), n)


def road_connection_probability(per_street: Iterable[float]) -> float:
    """Streets are isolated from each other, so their probabilities multiply."""
    total = 1.0
    for p in per_street:
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"probability out of range: {p!r}")
        total *= p
    return total


# --------------------------------------------------------------------------
# Monte Carlo


@dataclass(frozen=True)
class MCEstimate:
    successes: int
    trials: int

    @property
    def estimate(self) -> float:
        return self.successes / self.trials

    @property
    def halfwidth_95(self) -> float:
        p = self.estimate
        return Z95 * math.sqrt(p * (1.0 - p) / self.trials)


@dataclass(frozen=True)
class ConnectivityReport:
    p_vehicle: float
    p_system_clustered: float
    p_system_noncluster: float
    mc_estimate: float
    mc_halfwidth_95: float
    mc_estimate_noncluster: float
    mc_halfwidth_noncluster_95: float
    trials: int

    def to_dict(self) -> dict:
        return asdict(self)


def effective_chain_connected(gateways: np.ndarray, singletons: np.ndarray, radius: float) -> bool:
    """Gap rule over gateways (reach 2R) and singletons (reach R).

    Nodes are taken in position order; each must reach the next one within
    its own threshold. The last node has no successor and always passes.
    """
    pos = np.concatenate((gateways, singletons))
    if pos.size < 2:
        return True
    reach = np.concatenate((np.full(gateways.size, 2.0 * radius), np.full(singletons.size, radius)))
    order = np.argsort(pos, kind="stable")
    pos = pos[order]
    reach = reach[order]
    return bool(np.all(np.diff(pos) <= reach[:-1]))


def chain_connected(positions: np.ndarray, radius: float) -> bool:
    return positions.size < 2 or bool(np.max(np.diff(positions)) <= radius)


def street_outcomes(x: np.ndarray, radius: float, max_iter: int = DEFAULT_MAX_ITER,
                    tol: float = DEFAULT_TOL) -> tuple[bool, bool]:
    """(clustered, non-clustered) connectivity of one street placement."""
    if x.size == 0:
        return True, True
    _, starts, ends, _, gateways = search_groups(x, np.full(x.size, float(radius)), max_iter, tol)
    single = (ends - starts) == 1
    clustered = effective_chain_connected(x[gateways[~single]], x[starts[single]], radius)
    return clustered, chain_connected(x, radius)


def trial_placements(lengths: Sequence[float], density: float, seed: int, trial: int) -> list[np.ndarray]:
    """Fresh placement on every street for one trial.

    Street i of trial t uses the stream ``(seed, "mc-trial", t, i)``, so
    ``place_vehicles`` with that seed reproduces it exactly.
    """
    return [sample_positions(L, density, make_rng(derive_seed(seed, "mc-trial", trial, i)))
            for i, L in enumerate(lengths)]


def _run_trials(lengths, density, radii, seed, trials, max_iter, tol) -> np.ndarray:
    # out[t, r, 0] clustered, out[t, r, 1] non-clustered
    out = np.empty((len(trials), len(radii), 2), dtype=bool)
    for row, t in enumerate(trials):
        streets = trial_placements(lengths, density, seed, t)
        for j, radius in enumerate(radii):
            ok_c = ok_n = True
            for x in streets:
                c, nc = street_outcomes(x, radius, max_iter, tol)
                ok_c &= c
                ok_n &= nc
            out[row, j] = ok_c, ok_n
    return out


def mc_outcomes(lengths: Sequence[float], density: float, radii: Sequence[float], trials: int,
                seed: int, threads: int = 1, max_iter: int = DEFAULT_MAX_ITER,
                tol: float = DEFAULT_TOL) -> np.ndarray:
    """Per-trial success flags, shape (trials, len(radii), 2).

    All radii see the same placements. Trials are split into contiguous
    chunks when ``threads > 1``; the result does not depend on the split.
    """
    if trials < 1:
        raise ValueError(f"trials must be at least 1, got {trials}")
    _require_positive("density", density)
    for r in radii:
        _require_positive("radius", r)
    ids = np.arange(trials)
    if threads <= 1:
        return _run_trials(lengths, density, radii, seed, ids, max_iter, tol)
    chunks = np.array_split(ids, min(threads, trials))
    with ThreadPoolExecutor(max_workers=threads) as pool:
        parts = list(pool.map(
            lambda c: _run_trials(lengths, density, radii, seed, c, max_iter, tol), chunks))
    return np.concatenate(parts)


def mc_estimates(lengths: Sequence[float], density: float, radii: Sequence[float], trials: int,
                 seed: int, threads: int = 1) -> list[tuple[MCEstimate, MCEstimate]]:
    """(clustered, non-clustered) estimates for each radius."""
    flags = mc_outcomes(lengths, density, radii, trials, seed, threads)
    wins = flags.sum(axis=0)
    return [(MCEstimate(int(w[0]), trials), MCEstimate(int(w[1]), trials)) for w in wins]


def mc_connectivity(scenario: RoadScenario, trials: int, seed: int,
                    threads: int = 1) -> tuple[MCEstimate, MCEstimate]:
    """Monte Carlo connectivity of the whole road, clustered and not."""
    [(clustered, plain)] = mc_estimates(scenario.lengths, scenario.density,
                                        [scenario.coverage_radius], trials, seed, threads)
    return clustered, plain


def connectivity_report(scenario: RoadScenario, trials: int, seed: int,
                        threads: int = 1) -> ConnectivityReport:
    """Analytic probabilities for one placement next to Monte Carlo estimates.

    Street i is placed with the stream ``(seed, "report", i)``; its cluster
    structure supplies (n, k, m) for the closed forms, and streets combine by
    product. The Monte Carlo part is ``mc_connectivity`` with the same seed.
    """
    rho, radius = scenario.density, scenario.coverage_radius
    clustered, plain = [], []
    for i, street in enumerate(scenario.streets):
        x = sample_positions(street.length, rho, make_rng(derive_seed(seed, "report", i)))
        if x.size == 0:
            continue
        _, starts, ends, _, _ = search_groups(x, np.full(x.size, float(radius)))
        m = int(np.sum(ends - starts == 1))
        k = int(starts.size) - m
        clustered.append(system_connection_probability(AnalyticParams(rho, radius, int(x.size), k, m)))
        plain.append(noncluster_connection_probability(rho, radius, int(x.size)))
    mc_c, mc_n = mc_connectivity(scenario, trials, seed, threads)
    return ConnectivityReport(
        p_vehicle=vehicle_connection_probability(rho, radius),
        p_system_clustered=road_connection_probability(clustered),
        p_system_noncluster=road_connection_probability(plain),
        mc_estimate=mc_c.estimate,
        mc_halfwidth_95=mc_c.halfwidth_95,
        mc_estimate_noncluster=mc_n.estimate,
        mc_halfwidth_noncluster_95=mc_n.halfwidth_95,
        trials=trials,
    )


def sample_gaps(length: float, density: float, count: int, seed: int) -> np.ndarray:
    """At least ``count`` consecutive-vehicle gaps from independent placements."""
    chunks = []
    total = 0
    i = 0
    while total < count:
        x = sample_positions(length, density, make_rng(derive_seed(seed, "gaps", i)))
        g = np.diff(x)
        chunks.append(g)
        total += g.size
        i += 1
    return np.concatenate(chunks)[:count]


def per_gap_frequency(length: float, density: float, radius: float, count: int, seed: int) -> float:
    """Fraction of sampled consecutive gaps not exceeding ``radius``."""
    gaps = sample_gaps(length, density, count, seed)
    return float(np.mean(gaps <= radius))
