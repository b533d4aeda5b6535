"""Datasets, traces, arrival schedules, and host-fleet sizing."""

from collections import Counter

import numpy as np
import pytest

from apsr import (
    ArrivalProcess,
    ConfigError,
    build_arrivals,
    build_trace,
    fleet_capacities,
    load_dataset,
    size_hosts,
)


class TestEmbeddedDatasets:
    def test_nfv_totals_and_cells(self):
        spec = load_dataset("nfv")
        assert spec.requests_per_replica == 437
        assert len(spec.flavors) == 16
        assert spec.flavor_counts["0.001x0.01"] == 14
        assert spec.flavor_counts["0.032x0.04"] == 165
        assert spec.host_shapes == (((1.0, 1.0), 1),)

    def test_google_totals_and_shapes(self):
        spec = load_dataset("google")
        assert spec.requests_per_replica == 12_477
        assert len(spec.flavors) == 8
        assert spec.flavor_counts["0.5x0.5"] == 6672
        assert spec.host_shapes == (((1.0, 2.0), 1), ((2.0, 1.0), 1))

    def test_amazon_classes(self):
        spec = load_dataset("amazon")
        assert spec.requests_per_replica == 1100
        assert spec.class_counts == {"small": 1000, "large": 100}
        assert len(spec.class_members("small")) == 9
        assert len(spec.class_members("large")) == 6
        # the 0.4-cpu flavor is large; everything below 0.4 cpu is small
        assert spec.flavor_classes["0.4x0.031"] == "large"
        assert all(
            float(f.id.split("x")[0]) < 0.4 for f in spec.class_members("small")
        )

    def test_unknown_dataset_rejected(self):
        with pytest.raises(ConfigError):
            load_dataset("azure")


class TestDatasetFiles:
    def test_user_file_round_trip(self, tmp_path):
        path = tmp_path / "tiny.txt"
        path.write_text(
            "# comment\n"
            "resources cpu mem\n"
            "host 1 1 1\n"
            "flavor 0.5 0.25 3\n"
            "flavor 0.1 0.1 2\n"
        )
        spec = load_dataset(str(path))
        assert spec.name == "tiny"
        assert spec.requests_per_replica == 5
        assert spec.flavor_counts["0.5x0.25"] == 3

    @pytest.mark.parametrize(
        "text",
        [
            "flavor 0.5 0.25 3\n",  # resources line must come first
            "resources cpu mem\nhost 1 1 1\n",  # no flavors
            "resources cpu mem\nhost 1 1 1\nflavor 0.5 0.25 x\n",  # bad count
            "resources cpu mem\nhost 1 1 1\nflavor 0.5 0.25 0 small\n",  # undeclared class
            "resources cpu mem\nhost 1 1 1\nclass small 10\nflavor 0.5 0.25 1\n",  # empty class
            "resources cpu mem\nhost 1 1 1\nwhat 1\n",  # unknown keyword
        ],
    )
    def test_malformed_files_rejected(self, tmp_path, text):
        path = tmp_path / "bad.txt"
        path.write_text(text)
        with pytest.raises(ConfigError):
            load_dataset(str(path))


class TestBuildTrace:
    def test_default_replica_scale_lengths(self):
        assert len(build_trace(load_dataset("nfv"), 30, seed=0)) == 13_110
        assert len(build_trace(load_dataset("amazon"), 7, seed=0)) == 7_700
        assert len(build_trace(load_dataset("google"), 1, seed=0)) == 12_477

    def test_single_replica_flavor_multiplicity(self):
        trace = build_trace(load_dataset("nfv"), 1, seed=3)
        histogram = Counter(r.flavor.id for r in trace)
        assert histogram["0.001x0.01"] == 14
        assert histogram == {fid: c for fid, c in load_dataset("nfv").flavor_counts.items() if c}

    def test_histogram_scales_with_replicas(self):
        spec = load_dataset("google")
        histogram = Counter(r.flavor.id for r in build_trace(spec, 2, seed=1))
        assert histogram == {fid: 2 * c for fid, c in spec.flavor_counts.items()}

    def test_shuffle_is_measure_preserving(self):
        spec = load_dataset("nfv")
        a = build_trace(spec, 2, seed=10)
        b = build_trace(spec, 2, seed=11)
        assert [r.flavor.id for r in a] != [r.flavor.id for r in b]
        assert Counter(r.flavor.id for r in a) == Counter(r.flavor.id for r in b)

    def test_amazon_class_totals_per_replica(self):
        spec = load_dataset("amazon")
        trace = build_trace(spec, 3, seed=5)
        by_class = Counter(spec.flavor_classes[r.flavor.id] for r in trace)
        assert by_class == {"small": 3000, "large": 300}

    def test_request_ids_dense_and_ordered(self):
        trace = build_trace(load_dataset("nfv"), 1, seed=0)
        assert [r.id for r in trace] == list(range(len(trace)))

    def test_replicas_validated(self):
        with pytest.raises(ConfigError):
            build_trace(load_dataset("nfv"), 0, seed=0)


class TestBuildArrivals:
    def test_total_equals_trace_length(self):
        schedule = build_arrivals(ArrivalProcess("poisson", 20.0), 13_110, seed=0)
        assert schedule.total == 13_110
        assert all(c >= 0 for c in schedule.counts)
        assert len(schedule.counts) == pytest.approx(13_110 / 20, rel=0.15)

    def test_empirical_mean_converges(self):
        schedule = build_arrivals(ArrivalProcess("poisson", 20.0), 40_000, seed=1)
        # drop the truncated last slot from the mean
        counts = np.array(schedule.counts[:-1])
        se = np.sqrt(20.0 / counts.size)
        assert abs(counts.mean() - 20.0) <= 3 * se

    def test_zero_rate_rejected(self):
        with pytest.raises(ConfigError):
            ArrivalProcess("poisson", 0.0)

    def test_mmpp_switches_rate_after_fraction(self):
        process = ArrivalProcess("mmpp", 20.0, rate_low=5.0, switch_fraction=0.2)
        schedule = build_arrivals(process, 10_000, seed=2)
        counts = schedule.counts
        cumulative = np.cumsum(counts)
        switch_slot = int(np.searchsorted(cumulative, 2000))
        head = np.array(counts[:switch_slot])
        tail = np.array(counts[switch_slot + 1 : -1])
        assert head.mean() > 3 * tail.mean()  # 20 vs 5 with slack
        assert tail.mean() == pytest.approx(5.0, rel=0.2)

    def test_mmpp_validation(self):
        with pytest.raises(ConfigError):
            ArrivalProcess("mmpp", 20.0)
        with pytest.raises(ConfigError):
            ArrivalProcess("mmpp", 20.0, rate_low=5.0, switch_fraction=1.5)


class TestFleetCapacities:
    def test_nfv_unit_hosts(self):
        assert fleet_capacities(load_dataset("nfv"), 3) == [(1.0, 1.0)] * 3

    def test_equal_proportions_exact_for_even_fleet(self):
        fleet = fleet_capacities(load_dataset("google"), 100)
        assert fleet.count((1.0, 2.0)) == 50
        assert fleet.count((2.0, 1.0)) == 50


class TestSizeHosts:
    def test_single_small_request_needs_one_host(self, tmp_path):
        path = tmp_path / "one.txt"
        path.write_text("resources a b\nhost 1 1 1\nflavor 0.3 0.3 1\n")
        assert size_hosts(load_dataset(str(path)), 1, ("ff",), runs=1, seed=0).hosts == 1

    def test_two_oversize_requests_need_two_hosts(self, tmp_path):
        path = tmp_path / "two.txt"
        path.write_text("resources a b\nhost 1 1 1\nflavor 0.6 0.6 2\n")
        assert size_hosts(load_dataset(str(path)), 1, ("ff",), runs=2, seed=0).hosts == 2

    def test_count_is_sufficient_and_deterministic(self):
        spec = load_dataset("nfv")
        result = size_hosts(spec, 1, ("ff", "random"), runs=2, seed=4)
        again = size_hosts(spec, 1, ("ff", "random"), runs=2, seed=4)
        assert result.hosts == again.hosts
        assert [r.hosts for r in result.runs] == [r.hosts for r in again.runs]
        # storage is the binding resource: one replica carries ~27.67 units
        assert result.hosts >= 28
        assert result.hosts == min(r.hosts for r in result.runs)

    def test_runs_validated(self):
        with pytest.raises(ConfigError):
            size_hosts(load_dataset("nfv"), 1, ("ff",), runs=0, seed=0)
