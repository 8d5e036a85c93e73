import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from smcbench.analysis import (
    CSV_COLUMNS,
    RegressionFit,
    RunMetrics,
    compare_to_reference,
    fit_linear,
    load_reference_fits,
    r_squared,
    read_metrics_csv,
    write_metrics_csv,
)


class TestFitLinear:
    def test_exact_line(self):
        points = [(x, 2 * x + 1) for x in range(10)]
        fit = fit_linear(points)
        assert fit.slope == pytest.approx(2.0)
        assert fit.intercept == pytest.approx(1.0)
        assert fit.mse == pytest.approx(0.0, abs=1e-18)
        assert fit.sample_count == 10

    def test_recovers_reference_peer_scaling_coefficients(self):
        slope, intercept = 2.01883, -1.086
        points = [(n, intercept + slope * n) for n in range(3, 16)]
        fit = fit_linear(points)
        assert abs(fit.slope - slope) < 1e-9
        assert abs(fit.intercept - intercept) < 1e-9

    def test_mse_matches_hand_computed_residuals(self):
        points = [(0.0, 0.0), (1.0, 2.0), (2.0, 2.0)]
        fit = fit_linear(points)
        expected_mse = sum(
            (y - (fit.intercept + fit.slope * x)) ** 2 for x, y in points
        ) / len(points)
        assert fit.mse == pytest.approx(expected_mse)
        # hand-derived for these three points: slope 1, intercept 1/3
        assert fit.slope == pytest.approx(1.0)
        assert fit.intercept == pytest.approx(1 / 3)

    def test_degenerate_inputs_rejected(self):
        with pytest.raises(ValueError):
            fit_linear([(1.0, 1.0)])
        with pytest.raises(ValueError):
            fit_linear([(2.0, 1.0), (2.0, 5.0)])

    @settings(max_examples=50, deadline=None)
    @given(st.randoms(use_true_random=False))
    def test_reorder_invariance(self, rnd):
        points = [(float(i), rnd.uniform(-5, 5)) for i in range(8)]
        shuffled = points[:]
        rnd.shuffle(shuffled)
        a, b = fit_linear(points), fit_linear(shuffled)
        assert a.slope == pytest.approx(b.slope)
        assert a.intercept == pytest.approx(b.intercept)
        assert a.mse == pytest.approx(b.mse)

    def test_least_squares_beats_random_candidate_lines(self):
        rng = random.Random(17)
        points = [(float(x), 3.0 * x - 2.0 + rng.gauss(0, 1.5)) for x in range(12)]
        fit = fit_linear(points)

        def mse_of(slope, intercept):
            return sum((y - (intercept + slope * x)) ** 2 for x, y in points) / len(points)

        for _ in range(100):
            slope = fit.slope + rng.uniform(-2, 2)
            intercept = fit.intercept + rng.uniform(-5, 5)
            assert fit.mse <= mse_of(slope, intercept) + 1e-12


class TestRSquared:
    def test_perfect_line(self):
        assert r_squared([(x, 5 * x) for x in range(5)]) == pytest.approx(1.0)

    def test_noise_lowers_r_squared(self):
        rng = random.Random(3)
        points = [(float(x), rng.uniform(0, 1)) for x in range(30)]
        assert r_squared(points) < 0.5


class TestCompareToReference:
    def test_identical_fits_within(self):
        fit = RegressionFit(2.0, 1.0, 0.5, 10)
        report = compare_to_reference(fit, fit, {"slope": 0.1, "intercept": 0.1})
        assert report["all_within"]
        assert report["verdicts"]["slope"] == "within"

    def test_large_slope_deviation_flagged(self):
        fit = RegressionFit(2.0, 1.0, 0.5, 10)
        ref = RegressionFit(2.5, 1.0, 0.5, 10)
        report = compare_to_reference(fit, ref, {"slope": 0.25})
        assert report["verdicts"]["slope"] == "outside"
        assert not report["all_within"]

    def test_without_tolerance_is_informational(self):
        fit = RegressionFit(2.0, 1.0, 0.5, 10)
        ref = RegressionFit(99.0, 1.0, 0.5, 10)
        report = compare_to_reference(fit, ref, {})
        assert report["verdicts"]["slope"] == "informational"
        assert report["all_within"]


class TestReferenceData:
    def test_shipped_constants(self):
        data = load_reference_fits()
        assert "hardware-specific reference, informational" in data["note"]
        peers = data["fits"]["session_ms_vs_peers"]["fit"]
        assert peers.slope == pytest.approx(2.01883)
        assert peers.intercept == pytest.approx(-1.086)
        assert peers.mse == pytest.approx(0.24894)
        bytes_fit = data["fits"]["mbytes_per_peer_vs_peers"]["fit"]
        assert bytes_fit.slope == pytest.approx(2.69419)
        assert bytes_fit.intercept == pytest.approx(-2.743)
        latency = data["fits"]["ms_vs_network_latency"]
        assert latency["fit"].slope == pytest.approx(4.61851)
        assert latency["fit"].intercept == pytest.approx(47.327)
        assert latency["fit"].mse == pytest.approx(15415.50432)
        assert "unit-unknown" in latency["unit_note"]


class TestMetricsCsv:
    def make_row(self, repetition=0):
        return RunMetrics(
            n=3, latency_ms=16.0, rate_mbit=1000.0, loss=0.0, pf=1,
            sessions=100, repetition=repetition, duration_ms=4874.2,
            bytes_per_peer=14600.0, messages=1200, packets=1200,
            retransmissions=0, failures=0, predicted_ms=4874.2,
        )

    def test_roundtrip(self, tmp_path):
        path = tmp_path / "results.csv"
        rows = [self.make_row(0), self.make_row(1)]
        write_metrics_csv(rows, path)
        assert read_metrics_csv(path) == rows

    def test_header_is_the_documented_schema(self, tmp_path):
        path = tmp_path / "results.csv"
        write_metrics_csv([self.make_row()], path)
        header = path.read_text().splitlines()[0]
        assert header == ",".join(CSV_COLUMNS)
        assert header == (
            "n,latency_ms,rate_mbit,loss,pf,sessions,repetition,duration_ms,"
            "bytes_per_peer,messages,packets,retransmissions,failures,predicted_ms"
        )

    def test_validation(self):
        with pytest.raises(ValueError):
            RunMetrics(
                n=3, latency_ms=0, rate_mbit=1, loss=0, pf=1, sessions=1,
                repetition=0, duration_ms=0.0, bytes_per_peer=0, messages=0,
                packets=0, retransmissions=0, failures=0, predicted_ms=0,
            )
