import json
import math

import numpy as np
import pytest

from vanetclust.rng import derive_seed, make_rng
from vanetclust.scenario import (ConfigParseError, ConfigValidationError, RoadScenario, Street,
                                 VehicleSet, load_scenario, reference_road, place_vehicles,
                                 truncate_placement)

from .conftest import FIVE_STREET_CONFIG


class TestPlaceVehicles:
    def test_mean_count_matches_intensity(self):
        street = Street("s", 1000.0)
        counts = np.array([len(place_vehicles(street, 0.1, s)) for s in range(10_000)])
        stderr = math.sqrt(100.0 / counts.size)
        assert abs(counts.mean() - 100.0) < 3 * stderr

    def test_vanishing_density_gives_empty_street(self):
        street = Street("s", 1000.0)
        assert all(len(place_vehicles(street, 1e-9, s)) == 0 for s in range(100))

    def test_gap_distribution_is_exponential(self):
        from scipy import stats

        street = Street("s", 1000.0)
        gaps = np.concatenate([np.diff(place_vehicles(street, 0.1, s).positions) for s in range(2000)])
        # Exponential(0.1) truncated at the street length
        trunc = 1 - math.exp(-0.1 * 1000)
        ks = stats.kstest(gaps, lambda g: (1 - np.exp(-0.1 * g)) / trunc).statistic
        assert ks < 0.01

    def test_deterministic(self):
        street = Street("s", 800.0)
        a = place_vehicles(street, 0.1, derive_seed(3, "x", 1))
        b = place_vehicles(street, 0.1, derive_seed(3, "x", 1))
        assert a == b
        assert a.positions.tobytes() == b.positions.tobytes()

    def test_pinned_stream(self):
        # guards against silent changes of the bit generator or sampling order
        vs = place_vehicles(Street("s", 1000.0), 0.1, 42)
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(42)))
        n = rng.poisson(100.0)
        expected = np.sort(rng.uniform(0.0, 1000.0, size=n))
        assert np.array_equal(vs.positions, expected)

    def test_sorted_and_in_range(self):
        for s in range(200):
            vs = place_vehicles(Street("s", 600.0), 0.1, s)
            x = vs.positions
            assert np.all(np.diff(x) >= 0)
            assert np.all((x >= 0) & (x <= 600.0))
            assert vs.ids == list(range(len(vs)))

    @pytest.mark.parametrize("density", [0.0, -0.1, math.nan])
    def test_rejects_bad_density(self, density):
        with pytest.raises(ValueError):
            place_vehicles(Street("s", 100.0), density, 0)

    @pytest.mark.parametrize("length", [0.0, -5.0, math.inf])
    def test_rejects_bad_length(self, length):
        with pytest.raises(ValueError):
            Street("s", length)


class TestLoadScenario:
    def test_five_street_config(self):
        sc = load_scenario(json.dumps(FIVE_STREET_CONFIG))
        assert sc.lengths == [600, 800, 1000, 1200, 1400]
        assert sum(sc.lengths) == 5000
        assert sc.density == 0.1
        assert sc.coverage_radius == 100
        assert sc.seed == 7

    def test_from_path(self, tmp_path):
        path = tmp_path / "road.json"
        path.write_text(json.dumps(FIVE_STREET_CONFIG))
        assert load_scenario(path) == load_scenario(FIVE_STREET_CONFIG)
        assert load_scenario(str(path)) == load_scenario(path)

    def test_empty_street_list(self):
        doc = dict(FIVE_STREET_CONFIG, streets=[])
        with pytest.raises(ConfigValidationError) as err:
            load_scenario(doc)
        assert err.value.field == "streets"

    def test_negative_density(self):
        doc = dict(FIVE_STREET_CONFIG, density_per_m=-0.1)
        with pytest.raises(ConfigValidationError) as err:
            load_scenario(doc)
        assert err.value.field == "density_per_m"

    def test_unknown_field(self):
        with pytest.raises(ConfigValidationError, match="unknown"):
            load_scenario(dict(FIVE_STREET_CONFIG, speed_kmh=50))
        doc = dict(FIVE_STREET_CONFIG, streets=[{"id": "a", "length_m": 10, "lanes": 2}])
        with pytest.raises(ConfigValidationError) as err:
            load_scenario(doc)
        assert err.value.field == "streets[0].lanes"

    def test_bad_street_length(self):
        doc = dict(FIVE_STREET_CONFIG, streets=[{"id": "a", "length_m": "long"}])
        with pytest.raises(ConfigValidationError, match=r"streets\[0\].length_m"):
            load_scenario(doc)

    def test_duplicate_street_ids(self):
        doc = dict(FIVE_STREET_CONFIG, streets=[{"id": "a", "length_m": 10}, {"id": "a", "length_m": 20}])
        with pytest.raises(ConfigValidationError):
            load_scenario(doc)

    def test_parse_error_reports_line(self):
        text = '{\n  "streets": [\n    {"id": "a", "length_m": 10,}\n  ]\n}'
        with pytest.raises(ConfigParseError) as err:
            load_scenario(text)
        assert err.value.line == 3

    def test_reference_road(self):
        road = reference_road()
        assert road.lengths == [600, 800, 1000, 1200, 1400]
        assert road.density == 0.1

    def test_scenario_invariants(self):
        with pytest.raises(ValueError):
            RoadScenario((), 0.1, 10.0)
        with pytest.raises(ValueError):
            RoadScenario((Street("a", 10.0),), 0.1, 0.0)


class TestTruncatePlacement:
    def test_example(self):
        vs = VehicleSet.from_positions("s", 1000.0, [10, 500, 900])
        out = truncate_placement(vs, 600.0)
        assert [v.position for v in out.vehicles] == [10, 500]
        assert out.length == 600.0

    def test_identity(self):
        vs = place_vehicles(Street("s", 1000.0), 0.1, 5)
        assert truncate_placement(vs, 1000.0) == vs

    def test_matches_filter(self):
        for seed in range(50):
            vs = place_vehicles(Street("s", 1000.0), 0.1, seed)
            out = truncate_placement(vs, 500.0)
            assert list(out.vehicles) == [v for v in vs.vehicles if v.position <= 500.0]

    def test_idempotent_and_monotone(self):
        vs = place_vehicles(Street("s", 1400.0), 0.1, 11)
        once = truncate_placement(vs, 900.0)
        assert truncate_placement(once, 900.0) == once
        prev = set(vs.ids)
        for L in (1200.0, 1000.0, 800.0, 600.0):
            cur = set(truncate_placement(vs, L).ids)
            assert cur <= prev
            prev = cur

    @pytest.mark.parametrize("new_length", [0.0, -1.0, 1000.5])
    def test_rejects_out_of_range(self, new_length):
        vs = VehicleSet.from_positions("s", 1000.0, [1.0])
        with pytest.raises(ValueError):
            truncate_placement(vs, new_length)


class TestVehicleSet:
    def test_rejects_unsorted(self):
        with pytest.raises(ValueError, match="sorted"):
            VehicleSet.from_positions("s", 10.0, [5.0, 1.0])

    def test_rejects_out_of_street(self):
        with pytest.raises(ValueError):
            VehicleSet.from_positions("s", 10.0, [1.0, 11.0])

    def test_per_vehicle_radius(self):
        vs = VehicleSet.from_positions("s", 10.0, [1.0, 2.0], [3.0, 4.0])
        assert vs.radii.tolist() == [3.0, 4.0]


def test_derived_streams_are_distinct():
    a = make_rng(derive_seed(1, "placement", 0)).random(4)
    b = make_rng(derive_seed(1, "placement", 1)).random(4)
    c = make_rng(derive_seed(1, "mc-trial", 0)).random(4)
    assert not np.array_equal(a, b) and not np.array_equal(a, c)
    with pytest.raises(ValueError):
        derive_seed(-1, "x")
