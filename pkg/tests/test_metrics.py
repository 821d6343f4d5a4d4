import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from betadrop import (
    BandSpec,
    PredictiveSummary,
    SynthSpec,
    ValidationError,
    brier_score,
    bucket_predictions,
    classification_metrics,
    rescore_compare,
    synth_generate,
)


def summary_for(p_pos: float) -> PredictiveSummary:
    return PredictiveSummary.from_samples(np.array([[1.0 - p_pos, p_pos]]))


class TestBrier:
    def test_perfect_predictor(self):
        assert brier_score([1.0, 0.0], [1, 0]) == 0.0

    def test_uninformative_half(self):
        assert brier_score([0.5] * 4, [1, 0, 1, 1]) == 0.25

    def test_hand_case(self):
        # (0.8-1)^2 = 0.04, (0.3-0)^2 = 0.09, mean = 0.065
        assert brier_score([0.8, 0.3], [1, 0]) == pytest.approx(0.065, abs=1e-12)

    def test_length_mismatch(self):
        with pytest.raises(ValidationError):
            brier_score([0.5], [1, 0])

    def test_out_of_range_probability(self):
        with pytest.raises(ValidationError):
            brier_score([1.2], [1])

    def test_non_binary_outcome(self):
        with pytest.raises(ValidationError):
            brier_score([0.5], [2])

    @given(st.lists(st.sampled_from([0, 1]), min_size=1, max_size=40))
    @settings(max_examples=60, deadline=None)
    def test_half_predictor_always_quarter(self, outcomes):
        assert brier_score([0.5] * len(outcomes), outcomes) == 0.25

    @given(
        st.lists(st.floats(0.0, 1.0, allow_nan=False), min_size=1, max_size=40),
        st.integers(0, 2**31),
    )
    @settings(max_examples=60, deadline=None)
    def test_bounds(self, probs, seed):
        outcomes = np.random.default_rng(seed).integers(0, 2, size=len(probs))
        assert 0.0 <= brier_score(probs, outcomes) <= 1.0

    def test_true_probabilities_dominate_constants(self):
        ds, true_probs = synth_generate(SynthSpec(n=2000, dim=2, class_separation=1.5, seed=3))
        best = brier_score(true_probs, ds.labels)
        for const in (0.0, 0.25, 0.5, 0.75, 1.0):
            assert best <= brier_score([const] * len(ds), ds.labels)


class TestClassificationMetrics:
    def test_perfect(self):
        r = classification_metrics([1, 0, 1], [1, 0, 1])
        assert (r.precision, r.recall, r.f1, r.accuracy) == (1.0, 1.0, 1.0, 1.0)
        assert not r.zero_division

    def test_confusion_hand_count(self):
        r = classification_metrics([1, 1, 1, 1], [1, 0, 1, 0])
        assert r.precision == 0.5
        assert r.recall == 1.0
        assert r.f1 == pytest.approx(2 / 3, abs=1e-12)
        assert r.accuracy == 0.5

    def test_degenerate_all_negative_predictor(self):
        r = classification_metrics([0, 0, 0], [0, 1, 1])
        assert r.recall == 0.0
        assert r.f1 == 0.0
        assert r.zero_division

    def test_unknown_label_rejected(self):
        with pytest.raises(ValidationError):
            classification_metrics([1, -2], [1, 0])

    def test_brier_from_probs(self):
        r = classification_metrics([1, 0], [1, 0], positive_probs=[0.8, 0.3])
        assert r.brier == pytest.approx(0.065, abs=1e-12)

    @given(st.integers(0, 2**31), st.integers(2, 60))
    @settings(max_examples=80, deadline=None)
    def test_f1_consistent_with_p_and_r(self, seed, n):
        rng = np.random.default_rng(seed)
        pred, true = rng.integers(0, 2, n), rng.integers(0, 2, n)
        r = classification_metrics(pred, true)
        if r.precision + r.recall > 0:
            expected = 2 * r.precision * r.recall / (r.precision + r.recall)
            assert abs(r.f1 - expected) <= 1e-12
        else:
            assert r.f1 == 0.0


class TestBands:
    def test_default_partition_shape(self):
        bands = BandSpec.default()
        assert len(bands.bands) == 5
        assert bands.uncertain.pretty() == "(0.45, 0.55)"

    @given(st.floats(0.0, 1.0, allow_nan=False))
    @settings(max_examples=200, deadline=None)
    def test_every_value_lands_in_exactly_one_band(self, v):
        bands = BandSpec.default()
        hits = [b for b in bands.bands if b.contains(v)]
        assert len(hits) == 1

    def test_boundary_ownership(self):
        bands = BandSpec.default()
        assert bands.bands[bands.band_index(0.3)].label == "confident_low"
        assert bands.bands[bands.band_index(0.45)].label == "lean_low"
        assert bands.bands[bands.band_index(0.55)].label == "lean_high"
        assert bands.bands[bands.band_index(0.7)].label == "confident_high"

    def test_overlapping_bands_rejected(self):
        from betadrop import Band

        with pytest.raises(ValidationError):
            BandSpec(
                bands=[Band(0.0, 0.6, False, False, "a"), Band(0.5, 1.0, False, False, "b")],
                uncertain_index=0,
            )

    def test_gap_rejected(self):
        from betadrop import Band

        with pytest.raises(ValidationError):
            BandSpec(
                bands=[Band(0.0, 0.4, False, True, "a"), Band(0.6, 1.0, False, False, "b")],
                uncertain_index=0,
            )

    def test_from_edges_roundtrip(self):
        bands = BandSpec.from_edges([0.0, 0.3, 0.45, 0.55, 0.7, 1.0], (0.45, 0.55))
        assert bands.uncertain.pretty() == "(0.45, 0.55)"
        for v in (0.0, 0.3, 0.45, 0.5, 0.55, 0.7, 1.0):
            assert sum(b.contains(v) for b in bands.bands) == 1

    def test_from_edges_zero_width_uncertain(self):
        bands = BandSpec.from_edges([0.0, 0.5, 1.0], (0.5, 0.5))
        assert bands.uncertain.lo == bands.uncertain.hi == 0.5
        for v in (0.0, 0.5, 0.75, 1.0):
            assert sum(b.contains(v) for b in bands.bands) == 1


class TestBucketPredictions:
    def test_only_midpoint_flagged(self):
        bands = BandSpec.default()
        summaries = [summary_for(p) for p in (0.1, 0.5, 0.9)]
        report = bucket_predictions(summaries, [0, 1, 1], bands, ids=["a", "b", "c"])
        assert report.flagged_ids == ["b"]
        assert report.total == 3
        assert sum(b.count for b in report.bands) == 3

    def test_empty_input(self):
        report = bucket_predictions([], [], BandSpec.default())
        assert report.total == 0
        assert report.flagged_ids == []
        assert all(b.count == 0 and b.accuracy is None for b in report.bands)

    def test_zero_width_uncertain_never_flags(self):
        bands = BandSpec.from_edges([0.0, 0.5, 1.0], (0.5, 0.5))
        summaries = [summary_for(p) for p in (0.2, 0.5, 0.8)]
        report = bucket_predictions(summaries, [0, 1, 1], bands)
        assert report.flagged_ids == []

    def test_confident_bands_beat_uncertain_on_overlap_data(self):
        # oracle: Bayes-rule predictions scored against the generative labels
        ds, true_probs = synth_generate(SynthSpec(n=6000, dim=2, class_separation=1.5, seed=9))
        bands = BandSpec.default()
        summaries = [summary_for(p) for p in true_probs]
        report = bucket_predictions(summaries, ds.labels.tolist(), bands, ids=ds.ids)

        def band_acc(labels):
            rows = [b for b in report.bands if b.label in labels]
            total = sum(b.count for b in rows)
            return sum(b.correct for b in rows) / total

        confident = band_acc({"confident_low", "confident_high"})
        uncertain = band_acc({"uncertain"})
        assert confident > uncertain

        # brute-force check of the same quantities straight from the arrays
        pred = (true_probs > 0.5).astype(int)
        conf_mask = (true_probs <= 0.3) | (true_probs >= 0.7)
        unc_mask = (true_probs > 0.45) & (true_probs < 0.55)
        assert np.mean(pred[conf_mask] == ds.labels[conf_mask]) == pytest.approx(confident)
        assert np.mean(pred[unc_mask] == ds.labels[unc_mask]) == pytest.approx(uncertain)

    def test_length_mismatch_rejected(self):
        with pytest.raises(ValidationError):
            bucket_predictions([summary_for(0.5)], [1, 0], BandSpec.default())


class TestRescoreCompare:
    def _keyed(self, pairs):
        return {k: (summary_for(p), t) for k, p, t in pairs}

    def test_identity_comparison_is_zero(self):
        before = self._keyed([("a", 0.48, 1), ("b", 0.52, 0), ("c", 0.9, 1)])
        report = rescore_compare(before, dict(before), ["a", "b"])
        assert report.accuracy_delta == 0.0
        assert report.brier_delta == 0.0
        assert report.flagged_count == 2

    def test_forced_improvement(self):
        before = self._keyed([("a", 0.48, 1), ("b", 0.52, 0)])
        after = self._keyed([("a", 0.95, 1), ("b", 0.05, 0)])
        report = rescore_compare(before, after, ["a", "b"])
        assert report.accuracy_before == 0.0  # both borderline predictions are wrong
        assert report.accuracy_after == 1.0
        assert report.accuracy_delta == pytest.approx(1.0 - report.accuracy_before)
        assert report.brier_delta < 0

    def test_synthetic_paired_shift_improves_both(self):
        rng = np.random.default_rng(14)
        ids = [f"x{i}" for i in range(60)]
        truths = rng.integers(0, 2, 60)
        p_before = np.clip(0.5 + rng.normal(0, 0.03, 60), 0.46, 0.54)
        p_after = np.where(truths == 1, 0.9, 0.1)
        before = {i: (summary_for(p), int(t)) for i, p, t in zip(ids, p_before, truths)}
        after = {i: (summary_for(p), int(t)) for i, p, t in zip(ids, p_after, truths)}
        report = rescore_compare(before, after, ids)
        assert report.accuracy_delta > 0
        assert report.brier_delta < 0

    def test_empty_flagged_set_warns(self):
        before = self._keyed([("a", 0.5, 1)])
        report = rescore_compare(before, dict(before), [])
        assert report.flagged_count == 0
        assert report.warning
        assert report.accuracy_delta is None

    def test_id_mismatch_rejected(self):
        before = self._keyed([("a", 0.5, 1)])
        after = self._keyed([("b", 0.5, 1)])
        with pytest.raises(ValidationError):
            rescore_compare(before, after, [])

    def test_unknown_flagged_id_rejected(self):
        before = self._keyed([("a", 0.5, 1)])
        with pytest.raises(ValidationError):
            rescore_compare(before, dict(before), ["zz"])
