"""Parameter sweeps over street length and coverage radius, and CSV output."""

from __future__ import annotations

import csv
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Sequence

import numpy as np

from .clustering import DEFAULT_MAX_ITER, DEFAULT_TOL, search_groups
from .connectivity import (AnalyticParams, MCEstimate, effective_chain_connected, chain_connected,
                           mc_estimates, noncluster_connection_probability,
                           road_connection_probability, system_connection_probability)
from .rng import derive_seed, make_rng
from .scenario import RoadScenario, sample_positions

DEFAULT_LENGTHS = (600.0, 800.0, 1000.0, 1200.0, 1400.0)
DEFAULT_RADII = (25.0, 50.0, 75.0, 100.0, 150.0, 200.0, 300.0)
DEFAULT_DENSITY = 0.1
DEFAULT_SEEDS = 20
DEFAULT_TRIALS = 10_000


@dataclass(frozen=True)
class SweepSpec:
    lengths: tuple[float, ...] = DEFAULT_LENGTHS
    radii: tuple[float, ...] = DEFAULT_RADII
    density: float = DEFAULT_DENSITY
    seeds: tuple[int, ...] = tuple(range(DEFAULT_SEEDS))
    trials: int = DEFAULT_TRIALS
    master_seed: int = 0

    def __post_init__(self):
        for name in ("lengths", "radii", "seeds"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
            if not getattr(self, name):
                raise ValueError(f"{name} must not be empty")
        if any(not v > 0 for v in self.lengths + self.radii):
            raise ValueError("lengths and radii must be positive")
        if not self.density > 0:
            raise ValueError("density must be positive")
        if any(s < 0 for s in self.seeds):
            raise ValueError("seeds must be non-negative")
        if self.trials < 1:
            raise ValueError("trials must be at least 1")


@dataclass(frozen=True)
class SweepRow:
    length_m: float
    radius_m: float
    mean_k: float
    mean_m: float
    p_clustered_analytic: float
    p_noncluster_analytic: float
    p_clustered_mc: float
    p_noncluster_mc: float
    mc_halfwidth: float


CSV_HEADER = tuple(f.name for f in fields(SweepRow))


@dataclass(frozen=True)
class StreetCounts:
    n: int
    k: int
    m: int
    groups: int


def count_structure(x: np.ndarray, radius: float, max_iter: int = DEFAULT_MAX_ITER,
                    tol: float = DEFAULT_TOL) -> StreetCounts:
    if x.size == 0:
        return StreetCounts(0, 0, 0, 0)
    _, starts, ends, _, _ = search_groups(x, np.full(x.size, float(radius)), max_iter, tol)
    m = int(np.sum(ends - starts == 1))
    return StreetCounts(int(x.size), int(starts.size) - m, m, int(starts.size))


def _analytic_pair(density: float, radius: float, c: StreetCounts) -> tuple[float, float]:
    if c.n == 0:
        # empty street: nothing to connect
        return 1.0, 1.0
    clustered = system_connection_probability(AnalyticParams(density, radius, c.n, c.k, c.m))
    return clustered, noncluster_connection_probability(density, radius, c.n)


def master_placement(length: float, density: float, master_seed: int, replicate: int) -> np.ndarray:
    rng = make_rng(derive_seed(master_seed, "placement", replicate))
    return sample_positions(length, density, rng)


def group_count_grid(spec: SweepSpec, seed: int) -> np.ndarray:
    """Group counts (k + m) for one seed, shape (lengths, radii).

    Every length is a truncation of one placement on the longest street.
    """
    x = master_placement(max(spec.lengths), spec.density, spec.master_seed, seed)
    grid = np.zeros((len(spec.lengths), len(spec.radii)), dtype=int)
    for i, L in enumerate(spec.lengths):
        xs = x[x <= L]
        for j, R in enumerate(spec.radii):
            grid[i, j] = count_structure(xs, R).groups
    return grid


def _nested_mc(spec: SweepSpec, threads: int) -> dict[tuple[int, int], tuple[MCEstimate, MCEstimate]]:
    # nested placements per trial: one draw on the longest street, truncated
    lmax = max(spec.lengths)

    def run(trials):
        wins = np.zeros((len(spec.lengths), len(spec.radii), 2), dtype=np.int64)
        for t in trials:
            x = sample_positions(lmax, spec.density, make_rng(derive_seed(spec.master_seed, "mc-nested", t)))
            for i, L in enumerate(spec.lengths):
                xs = x[x <= L]
                for j, R in enumerate(spec.radii):
                    if xs.size == 0:
                        wins[i, j] += 1
                        continue
                    _, starts, ends, _, gws = search_groups(xs, np.full(xs.size, float(R)))
                    single = (ends - starts) == 1
                    wins[i, j, 0] += effective_chain_connected(xs[gws[~single]], xs[starts[single]], R)
                    wins[i, j, 1] += chain_connected(xs, R)
        return wins

    ids = np.arange(spec.trials)
    if threads <= 1:
        wins = run(ids)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            wins = sum(pool.map(run, np.array_split(ids, min(threads, spec.trials))))
    return {(i, j): (MCEstimate(int(wins[i, j, 0]), spec.trials), MCEstimate(int(wins[i, j, 1]), spec.trials))
            for i in range(len(spec.lengths)) for j in range(len(spec.radii))}


def sweep_optimized_k(spec: SweepSpec, threads: int = 1, with_mc: bool = True) -> list[SweepRow]:
    """Cluster counts over the (length, radius) grid for a single street.

    For each seed one placement is drawn on the longest street and truncated
    to every shorter length. Analytic columns average the per-seed street
    probabilities; Monte Carlo columns use ``spec.trials`` fresh nested
    placements.
    """
    nl, nr = len(spec.lengths), len(spec.radii)
    sum_k = np.zeros((nl, nr))
    sum_m = np.zeros((nl, nr))
    sum_pc = np.zeros((nl, nr))
    sum_pn = np.zeros((nl, nr))
    for seed in spec.seeds:
        x = master_placement(max(spec.lengths), spec.density, spec.master_seed, seed)
        for i, L in enumerate(spec.lengths):
            xs = x[x <= L]
            for j, R in enumerate(spec.radii):
                c = count_structure(xs, R)
                pc, pn = _analytic_pair(spec.density, R, c)
                sum_k[i, j] += c.k
                sum_m[i, j] += c.m
                sum_pc[i, j] += pc
                sum_pn[i, j] += pn
    mc = _nested_mc(spec, threads) if with_mc else {}
    ns = len(spec.seeds)
    rows = []
    for i, L in enumerate(spec.lengths):
        for j, R in enumerate(spec.radii):
            mc_c, mc_n = mc.get((i, j), (None, None))
            rows.append(SweepRow(
                float(L), float(R), sum_k[i, j] / ns, sum_m[i, j] / ns,
                sum_pc[i, j] / ns, sum_pn[i, j] / ns,
                mc_c.estimate if mc_c else float("nan"),
                mc_n.estimate if mc_n else float("nan"),
                max(mc_c.halfwidth_95, mc_n.halfwidth_95) if mc_c else float("nan"),
            ))
    return rows


def sweep_connection_probability(scenario: RoadScenario, radii: Sequence[float],
                                 seeds: Sequence[int], trials: int, master_seed: int = 0,
                                 threads: int = 1) -> list[SweepRow]:
    """Road-level connection probability against coverage radius.

    Per seed, every street gets its own placement and cluster structure; the
    street probabilities multiply into a road probability, which is then
    averaged over seeds. ``mean_k`` and ``mean_m`` are road totals. The
    Monte Carlo columns draw ``trials`` fresh placements shared by all radii.
    """
    if not radii or not seeds:
        raise ValueError("radii and seeds must not be empty")
    rho = scenario.density
    placements = {seed: [sample_positions(s.length, rho, make_rng(derive_seed(master_seed, "road", seed, idx)))
                         for idx, s in enumerate(scenario.streets)]
                  for seed in seeds}
    mc = mc_estimates(scenario.lengths, rho, radii, trials, master_seed, threads)
    total_length = float(sum(scenario.lengths))
    rows = []
    for R, (mc_c, mc_n) in zip(radii, mc):
        ks, ms, pcs, pns = [], [], [], []
        for seed in seeds:
            counts = [count_structure(x, R) for x in placements[seed]]
            pairs = [_analytic_pair(rho, R, c) for c in counts]
            ks.append(sum(c.k for c in counts))
            ms.append(sum(c.m for c in counts))
            pcs.append(road_connection_probability(p for p, _ in pairs))
            pns.append(road_connection_probability(p for _, p in pairs))
        rows.append(SweepRow(total_length, float(R), float(np.mean(ks)), float(np.mean(ms)),
                             float(np.mean(pcs)), float(np.mean(pns)),
                             mc_c.estimate, mc_n.estimate,
                             max(mc_c.halfwidth_95, mc_n.halfwidth_95)))
    return rows


def _fmt(v: float) -> str:
    return f"{v:.6g}"


def emit_table(rows: Sequence[SweepRow], destination: str | Path, json_mirror: bool = False) -> Path:
    """Write rows as CSV (6 significant digits), length-major then radius."""
    if not rows:
        raise ValueError("refusing to write an empty table")
    dest = Path(destination)
    ordered = sorted(rows, key=lambda r: (r.length_m, r.radius_m))
    with dest.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for row in ordered:
            writer.writerow([_fmt(getattr(row, name)) for name in CSV_HEADER])
    if json_mirror:
        payload = [{k: float(_fmt(v)) for k, v in asdict(r).items()} for r in ordered]
        dest.with_suffix(".json").write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    return dest
