"""Metric closed forms, brute-force references, and A/B vote aggregation."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from style_vton.metrics import (
    SSIM_K1,
    ab_aggregate,
    format_ab_table,
    inception_score,
    load_votes_csv,
    ssim,
)


class TestSSIM:
    def test_self_similarity_is_one(self):
        rng = np.random.default_rng(0)
        img = rng.uniform(0, 1, size=(16, 16))
        assert abs(ssim(img, img) - 1.0) < 1e-9

    def test_self_similarity_rgb(self):
        rng = np.random.default_rng(1)
        img = rng.uniform(0, 1, size=(20, 14, 3))
        assert abs(ssim(img, img) - 1.0) < 1e-9

    def test_black_vs_white_closed_form(self):
        a = np.zeros((16, 16))
        b = np.ones((16, 16))
        c1 = (SSIM_K1 * 1.0) ** 2
        assert abs(ssim(a, b) - c1 / (1.0 + c1)) < 1e-9

    def test_identical_constants_score_one(self):
        a = np.full((12, 12), 0.37)
        assert abs(ssim(a, a) - 1.0) < 1e-9

    def test_symmetry(self):
        rng = np.random.default_rng(2)
        a = rng.uniform(0, 1, size=(15, 15))
        b = rng.uniform(0, 1, size=(15, 15))
        assert abs(ssim(a, b) - ssim(b, a)) < 1e-12

    def test_less_than_one_for_distinct_images(self):
        rng = np.random.default_rng(3)
        a = rng.uniform(0, 1, size=(15, 15))
        b = rng.uniform(0, 1, size=(15, 15))
        assert ssim(a, b) < 1.0

    def test_shape_mismatch_rejected(self):
        with pytest.raises(ValueError):
            ssim(np.zeros((16, 16)), np.zeros((16, 17)))

    def test_too_small_rejected(self):
        with pytest.raises(ValueError):
            ssim(np.zeros((8, 8)), np.zeros((8, 8)))

    def test_non_finite_rejected(self):
        a = np.zeros((16, 16))
        a[0, 0] = np.nan
        with pytest.raises(ValueError):
            ssim(a, np.zeros((16, 16)))

    @given(st.floats(0.05, 1.0))
    @settings(max_examples=20, deadline=None)
    def test_self_similarity_invariant_to_data_range(self, dr):
        rng = np.random.default_rng(4)
        img = rng.uniform(0, dr, size=(12, 12))
        assert abs(ssim(img, img, data_range=dr) - 1.0) < 1e-9


class TestInceptionScore:
    def test_uniform_predictions_score_one(self):
        probs = np.full((30, 5), 0.2)
        mean, std = inception_score(probs, splits=10)
        assert abs(mean - 1.0) < 1e-9
        assert abs(std) < 1e-9

    def test_one_hot_uniform_over_four_classes_scores_four(self):
        probs = np.tile(np.eye(4), (10, 1))  # 40 rows cycling the 4 classes
        mean, std = inception_score(probs, splits=10)
        assert abs(mean - 4.0) < 1e-6
        assert abs(std) < 1e-6

    def test_matches_scalar_reference(self):
        probs = np.array(
            [
                [0.7, 0.2, 0.1],
                [0.1, 0.8, 0.1],
                [0.3, 0.3, 0.4],
                [0.25, 0.5, 0.25],
            ]
        )
        mean, std = inception_score(probs, splits=2)
        scores = []
        for part in (probs[:2], probs[2:]):
            marginal = part.mean(axis=0)
            kls = []
            for row in part:
                kls.append(sum(p * math.log(p / q) for p, q in zip(row, marginal) if p > 0))
            scores.append(math.exp(sum(kls) / len(kls)))
        assert abs(mean - sum(scores) / 2) < 1e-12
        ref_std = math.sqrt(sum((s - sum(scores) / 2) ** 2 for s in scores) / 2)
        assert abs(std - ref_std) < 1e-12

    def test_score_bounded_by_class_count(self):
        rng = np.random.default_rng(5)
        raw = rng.uniform(0.01, 1.0, size=(40, 6))
        probs = raw / raw.sum(axis=1, keepdims=True)
        mean, _ = inception_score(probs, splits=4)
        assert 1.0 - 1e-9 <= mean <= 6.0 + 1e-9

    def test_rows_must_sum_to_one(self):
        with pytest.raises(ValueError):
            inception_score(np.full((10, 4), 0.3), splits=2)

    def test_requires_enough_samples(self):
        with pytest.raises(ValueError):
            inception_score(np.full((4, 2), 0.5), splits=10)

    def test_negative_probabilities_rejected(self):
        probs = np.full((10, 2), 0.5)
        probs[0] = [1.5, -0.5]
        with pytest.raises(ValueError):
            inception_score(probs, splits=2)


def make_votes(method_a: str, method_b: str, count_a: int, count_b: int) -> list:
    votes = []
    for i in range(count_a):
        votes.append((f"p{i:05d}", method_a, method_b, method_a))
    for i in range(count_b):
        votes.append((f"q{i:05d}", method_a, method_b, method_b))
    return votes


class TestABAggregation:
    def test_percentages_and_counts(self):
        rows = ab_aggregate(make_votes("Ours", "VITON", 7787, 2213))
        assert rows == [
            {
                "method_a": "Ours",
                "method_b": "VITON",
                "votes_a": 7787,
                "votes_b": 2213,
                "pct_a": 77.87,
                "pct_b": 22.13,
                "n": 10000,
            }
        ]

    def test_orientation_is_canonicalized(self):
        mixed = make_votes("Ours", "VITON", 3, 1) + make_votes("VITON", "Ours", 1, 3)
        rows = ab_aggregate(mixed)
        assert len(rows) == 1
        assert rows[0]["votes_a"] == 6 and rows[0]["votes_b"] == 2

    def test_rows_sorted_and_percentages_complementary(self):
        votes = make_votes("Ours", "VITON", 2, 1) + make_votes("CP-VTON", "Ours", 1, 2)
        rows = ab_aggregate(votes)
        assert [r["method_a"] for r in rows] == ["CP-VTON", "Ours"]
        for r in rows:
            assert abs(r["pct_a"] + r["pct_b"] - 100.0) < 1e-9

    def test_one_third_rounding(self):
        rows = ab_aggregate(make_votes("A", "B", 1, 2))
        assert rows[0]["pct_a"] == 33.33
        assert rows[0]["pct_b"] == 66.67

    def test_identical_methods_rejected(self):
        with pytest.raises(ValueError):
            ab_aggregate([("p0", "Ours", "Ours", "Ours")])

    def test_unknown_vote_rejected(self):
        with pytest.raises(ValueError, match="not one of the compared methods"):
            ab_aggregate([("p0", "Ours", "VITON", "CP-VTON")])

    def test_format_contains_percentages(self):
        table = format_ab_table(ab_aggregate(make_votes("Ours", "VITON", 7787, 2213)))
        assert "77.87%" in table and "22.13%" in table
        assert table.splitlines()[0].startswith("Method")

    def test_csv_round_trip(self, tmp_path):
        path = tmp_path / "votes.csv"
        votes = make_votes("Ours", "VTNFP", 3, 2)
        lines = ["pair_id,method_a,method_b,vote"]
        lines += [",".join(v) for v in votes]
        path.write_text("\n".join(lines) + "\n")
        assert load_votes_csv(path) == votes

    def test_csv_missing_columns_rejected(self, tmp_path):
        path = tmp_path / "votes.csv"
        path.write_text("pair_id,vote\np0,Ours\n")
        with pytest.raises(ValueError, match="columns"):
            load_votes_csv(path)

    @given(st.integers(1, 500), st.integers(1, 500))
    @settings(max_examples=40, deadline=None)
    def test_counts_always_recoverable(self, a, b):
        rows = ab_aggregate(make_votes("m1", "m2", a, b))
        assert rows[0]["votes_a"] == a and rows[0]["votes_b"] == b
        assert rows[0]["n"] == a + b
