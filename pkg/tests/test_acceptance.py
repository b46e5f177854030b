"""Exit criteria for the build, one test per criterion.

Each test records a PASS/FAIL line that is printed in the pytest terminal
summary under "acceptance criteria".
"""

import itertools
import time

import mpmath
import numpy as np
import pytest
from scipy import stats

from vanetclust.cli import main
from vanetclust.clustering import (check_feasibility, kmeans_1d, kmeans_1d_exact,
                                   optimize_cluster_count)
from vanetclust.connectivity import (MCEstimate, clustered_bracket, sample_gaps,
                                     vehicle_connection_probability)
from vanetclust.experiments import (DEFAULT_LENGTHS, DEFAULT_RADII, SweepSpec, group_count_grid,
                                    sweep_connection_probability)
from vanetclust.scenario import Street, place_vehicles, reference_road

from .conftest import record

SEEDS = tuple(range(20))
TRIALS = 10_000
RHO = 0.1


@pytest.fixture(scope="module")
def count_grids():
    spec = SweepSpec(DEFAULT_LENGTHS, DEFAULT_RADII, RHO, SEEDS, trials=1)
    t0 = time.perf_counter()
    grids = {seed: group_count_grid(spec, seed) for seed in SEEDS}
    return grids, time.perf_counter() - t0


def test_c1_cluster_count_falls_with_radius(count_grids):
    grids, elapsed = count_grids
    violations = sum(int(np.sum(np.diff(g, axis=1) > 0)) for g in grids.values())
    ok = violations == 0 and elapsed < 60
    record("C1 count non-increasing in R", ok,
           f"{violations} violations over {len(SEEDS)} seeds x 5 lengths x 7 radii, {elapsed:.1f}s")
    assert ok


def test_c2_cluster_count_grows_with_length(count_grids):
    grids, elapsed = count_grids
    bad = {seed: int(np.sum(np.diff(g, axis=0) < 0)) for seed, g in grids.items()}
    violations = sum(bad.values())
    ok = violations == 0 and elapsed < 60
    worst = ", ".join(f"seed {s}: {v}" for s, v in bad.items() if v)
    record("C2 count non-decreasing in L (nested)", ok,
           f"{violations} violations ({worst or 'none'}), {elapsed:.1f}s")
    assert ok, f"group count decreased with street length: {worst}"


@pytest.fixture(scope="module")
def fig5():
    t0 = time.perf_counter()
    road = reference_road(RHO)
    rows = sweep_connection_probability(road, DEFAULT_RADII, SEEDS, trials=TRIALS, master_seed=0)
    mc = [(MCEstimate(round(r.p_clustered_mc * TRIALS), TRIALS),
           MCEstimate(round(r.p_noncluster_mc * TRIALS), TRIALS)) for r in rows]
    return rows, mc, time.perf_counter() - t0


def test_c3_fig5_analytic(fig5):
    rows, _, elapsed = fig5
    bad = [r.radius_m for r in rows if not r.p_clustered_analytic >= r.p_noncluster_analytic]
    ok = not bad and elapsed < 300
    record("C3a analytic clustered >= non-clustered", ok,
           f"{len(rows) - len(bad)}/{len(rows)} radii hold, {elapsed:.1f}s")
    assert ok


def test_c3_fig5_monte_carlo(fig5):
    rows, mc, elapsed = fig5
    weak, sep = [], []
    for row, (c, n) in zip(rows, mc):
        if c.estimate < n.estimate - 2 * max(c.halfwidth_95, n.halfwidth_95):
            weak.append(row.radius_m)
        if 0.05 < c.estimate < 0.95 and 0.05 < n.estimate < 0.95:
            if not c.estimate - c.halfwidth_95 > n.estimate + n.halfwidth_95:
                sep.append(row.radius_m)
    ok = not weak and not sep and elapsed < 300
    table = "; ".join(f"R={r.radius_m:g}: {c.estimate:.4f} vs {n.estimate:.4f}"
                      for r, (c, n) in zip(rows, mc))
    record("C3b MC clustered >= non-clustered", ok,
           f"dominance fails at R={weak}, separation fails at R={sep} [{table}]")
    assert ok, f"MC clustered below non-clustered at radii {weak}; separation fails at {sep}"


def test_c4_formula_oracle():
    mpmath.mp.dps = 50
    reference = float(1 - mpmath.exp(mpmath.mpf("-0.1") * 10))
    p = vehicle_connection_probability(0.1, 10.0)
    formula_ok = abs(p - 0.632121) <= 1e-6 and abs(p - reference) <= 1e-12

    gaps = sample_gaps(1000.0, 0.1, 100_000, seed=2024)
    freq = float(np.mean(gaps <= 10.0))
    ks = stats.kstest(gaps, "expon", args=(0.0, 10.0)).statistic
    ok = formula_ok and abs(freq - p) < 0.01 and ks < 0.01
    record("C4 formula oracle", ok,
           f"P={p:.9f} (mpmath {reference:.9f}), per-gap freq={freq:.5f}, KS={ks:.5f}")
    assert ok


def _contiguous_optimum(x, k):
    n = len(x)
    best = np.inf
    for cuts in itertools.combinations(range(1, n), k - 1):
        bounds = (0, *cuts, n)
        best = min(best, sum(float(np.sum((x[a:b] - x[a:b].mean()) ** 2))
                             for a, b in zip(bounds, bounds[1:])))
    return best


def test_c5_clustering_oracle():
    rng = np.random.default_rng(55)
    matches = below = 0
    exact_ok = exact_total = 0
    for i in range(200):
        n = int(rng.integers(1, 13))
        k = int(rng.integers(1, min(4, n) + 1))
        x = np.sort(rng.uniform(0.0, 1000.0, n))
        heuristic = kmeans_1d(x, k, restarts=10, seed=i).wcss
        exact = kmeans_1d_exact(x, k).wcss
        matches += abs(heuristic - exact) <= 1e-9
        below += heuristic < exact - 1e-9
        if n <= 10:
            exact_total += 1
            exact_ok += abs(exact - _contiguous_optimum(x, k)) <= 1e-9 * max(1.0, exact)
    ok = matches >= 190 and below == 0 and exact_ok == exact_total
    record("C5 clustering oracle", ok,
           f"heuristic matches exact on {matches}/200, below exact {below}, "
           f"exact = enumeration on {exact_ok}/{exact_total} (n <= 10)")
    assert ok


def test_c6_invariant_suite():
    rng = np.random.default_rng(66)
    cases = 1000
    fails = dict(partition=0, contiguity=0, monotone_wcss=0, gateway=0, bracket=0)
    for i in range(cases):
        length = float(rng.choice([200.0, 600.0, 1000.0]))
        radius = float(rng.uniform(2.0, 150.0))
        vs = place_vehicles(Street("s", length), RHO, (66, i))
        if len(vs) == 0:
            vs = place_vehicles(Street("s", length), 1.0, (66, i))
        x = vs.positions

        cs = optimize_cluster_count(vs, radius)
        members = sorted([m for c in cs.clusters for m in c.member_ids] + list(cs.singleton_ids))
        fails["partition"] += members != vs.ids or cs.n != len(vs)

        pos = {v.id: v.position for v in vs.vehicles}
        fails["gateway"] += not all(check_feasibility(c, pos, radius) for c in cs.clusters)

        k = int(rng.integers(1, min(len(x), 12) + 1))
        res = kmeans_1d(x, k)
        fails["contiguity"] += bool(np.any(np.diff(res.labels) < 0))
        hist = np.array(res.wcss_history)
        fails["monotone_wcss"] += bool(np.any(hist[1:] > hist[:-1] + 1e-9 * max(1.0, hist[0])))

        q = float(rng.uniform(0.0, 1.0))
        rho_r = (float(rng.uniform(1e-3, 1.0)), float(rng.uniform(0.1, 300.0)))
        fails["bracket"] += clustered_bracket(*rho_r, q) < vehicle_connection_probability(*rho_r)
    ok = not any(fails.values())
    record("C6 invariant suite", ok,
           f"{cases} cases each; failures " + ", ".join(f"{k}={v}" for k, v in fails.items()))
    assert ok


def test_c7_reproducibility(tmp_path):
    flags = ["sweep", "--trials", "300", "--seeds", "4", "--radii", "50,100,200",
             "--lengths", "600,1000", "--seed", "13"]
    runs = {}
    for name, extra in (("a", []), ("b", []), ("threads", ["--threads", "3"])):
        out = tmp_path / name
        assert main([*flags, *extra, "--out", str(out)]) == 0
        runs[name] = {p.name: p.read_bytes() for p in sorted(out.iterdir())}
    same = runs["a"] == runs["b"]
    thread_free = runs["a"] == runs["threads"]
    ok = same and thread_free and len(runs["a"]) == 3
    record("C7 reproducibility", ok,
           f"repeat identical={same}, --threads 3 identical={thread_free}, files={sorted(runs['a'])}")
    assert ok
