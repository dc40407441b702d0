import numpy as np
import pytest

from dapnet.core import Box
from dapnet.evaluation import (ATTRIBUTES, EvalConfig, MetricRow,
                               SequenceResult, SR_THRESHOLDS,
                               attribute_breakdown, center_errors, overlaps,
                               pooled_metrics, precision_curve,
                               precision_curve_from_errors, read_curve,
                               representative_pr, success_curve, write_curve)


def shifted(gts, dx, dy=0.0):
    return [Box(g.x + dx, g.y + dy, g.w, g.h) for g in gts]


@pytest.fixture
def gts():
    rng = np.random.default_rng(0)
    return [Box(*rng.uniform(10, 200, 2), *rng.uniform(5, 40, 2)) for _ in range(40)]


class TestPrecision:
    def test_perfect_results(self, gts):
        curve = precision_curve(gts, gts, [0, 1, 5, 20])
        assert np.all(curve == 1.0)

    def test_hand_counted_example(self):
        # center errors 0, 3, 10, 30 with threshold 5 -> 2 of 4 within
        gts = [Box(0, 0, 10, 10)] * 4
        results = [shifted(gts, d)[0] for d in (0, 3, 10, 30)]
        assert representative_pr(results, gts, 5.0) == 0.5

    def test_empty_threshold_list(self, gts):
        assert precision_curve(gts, gts, []).size == 0

    def test_monotone_nondecreasing(self, gts):
        rng = np.random.default_rng(3)
        results = [Box(g.x + rng.normal(0, 10), g.y + rng.normal(0, 10), g.w, g.h)
                   for g in gts]
        curve = precision_curve(results, gts, np.linspace(0, 50, 26))
        assert np.all(np.diff(curve) >= 0)

    def test_length_mismatch(self, gts):
        with pytest.raises(ValueError):
            precision_curve(gts[:-1], gts, [5])


class TestSuccess:
    def test_all_zero_overlap(self):
        gts = [Box(0, 0, 5, 5)] * 4
        results = [Box(100, 100, 5, 5)] * 4
        curve, sr = success_curve(results, gts)
        assert sr == 0.0  # strict inequality fails already at t = 0

    def test_half_perfect(self):
        gts = [Box(0, 0, 5, 5)] * 4
        results = gts[:2] + [Box(100, 100, 5, 5)] * 2
        curve, sr = success_curve(results, gts)
        assert sr == pytest.approx(10 / 21)
        assert curve[0] == 0.5
        assert curve[-1] == 0.0

    def test_perfect_results(self, gts):
        curve, sr = success_curve(gts, gts)
        assert sr == pytest.approx(20 / 21)
        assert curve[-1] == 0.0  # iou > 1.0 is impossible

    def test_monotone_nonincreasing(self, gts):
        rng = np.random.default_rng(4)
        results = [Box(g.x + rng.normal(0, 5), g.y + rng.normal(0, 5), g.w, g.h)
                   for g in gts]
        curve, _ = success_curve(results, gts)
        assert np.all(np.diff(curve) <= 0)


class TestTranslationInvariance:
    def test_both_curves(self, gts):
        rng = np.random.default_rng(5)
        results = [Box(g.x + rng.normal(0, 6), g.y + rng.normal(0, 6), g.w, g.h)
                   for g in gts]
        p1 = precision_curve(results, gts, [2, 5, 10])
        s1, _ = success_curve(results, gts)
        p2 = precision_curve(shifted(results, 37.5, -12.0),
                             shifted(gts, 37.5, -12.0), [2, 5, 10])
        s2, _ = success_curve(shifted(results, 37.5, -12.0),
                              shifted(gts, 37.5, -12.0))
        assert np.allclose(p1, p2)
        assert np.allclose(s1, s2)


class TestAttributeBreakdown:
    def _seq(self, name, n, err, attrs):
        gts = [Box(10.0 * i, 5.0, 10, 10) for i in range(n)]
        results = shifted(gts, err)
        return SequenceResult(name, results, gts, frozenset(attrs))

    def test_single_tagged_sequence(self):
        config = EvalConfig(pr_threshold=5)
        seq = self._seq("a", 4, 2.0, {"NO"})
        table = attribute_breakdown([seq], config)
        assert table["NO"].pr == representative_pr(seq.results, seq.gts, 5)
        assert table["NO"].n_frames == 4

    def test_untagged_attribute_is_absent(self):
        table = attribute_breakdown([self._seq("a", 4, 0.0, {"NO"})], EvalConfig())
        assert table["TC"] is None
        assert table["ALL"] is not None

    def test_pooling_is_frame_weighted(self):
        config = EvalConfig(pr_threshold=5)
        # both tagged PO: one sequence inside the threshold, one outside
        a = self._seq("a", 2, 0.0, {"PO"})
        b = self._seq("b", 2, 30.0, {"PO"})
        table = attribute_breakdown([a, b], config)
        assert table["PO"].pr == 0.5
        assert table["ALL"].pr == 0.5
        assert table["ALL"].n_frames == 4

    def test_all_row_equals_concatenated_frames(self):
        config = EvalConfig(pr_threshold=5)
        seqs = [self._seq("a", 3, 1.0, {"NO"}), self._seq("b", 5, 50.0, {"HO"})]
        table = attribute_breakdown(seqs, config)
        pooled_pr, pooled_sr = pooled_metrics(seqs, config)
        assert table["ALL"].pr == pooled_pr
        assert table["ALL"].sr == pooled_sr
        assert table["ALL"].pr == pytest.approx(3 / 8)

    def test_unknown_tag_rejected(self):
        with pytest.raises(ValueError, match="unknown attribute"):
            self._seq("a", 2, 0.0, {"XX"})


class TestExport:
    def test_curve_round_trip_is_exact(self, tmp_path):
        rng = np.random.default_rng(8)
        thresholds = np.linspace(0, 1, 21)
        values = rng.random(21)
        path = tmp_path / "curve.csv"
        write_curve(path, thresholds, values)
        t2, v2 = read_curve(path)
        assert np.array_equal(t2, thresholds)
        assert np.array_equal(v2, values)

    def test_deterministic_bytes(self, tmp_path):
        values = np.random.default_rng(9).random(5)
        write_curve(tmp_path / "a.csv", range(5), values)
        write_curve(tmp_path / "b.csv", range(5), values)
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
