import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kdeknn.errors import DimensionMismatchError, InsufficientDataError
from kdeknn.privacy import (
    dcr,
    dcr_baseline,
    dcr_histogram,
    ordering_verdict,
    privacy_utility_summary,
)


def pair_distances(A, B):
    # explicit double loop with feature-order accumulation
    out = np.empty((A.shape[0], B.shape[0]))
    for i in range(A.shape[0]):
        for j in range(B.shape[0]):
            s = 0.0
            for k in range(A.shape[1]):
                diff = A[i, k] - B[j, k]
                s = s + diff * diff
            out[i, j] = np.sqrt(s)
    return out


class TestDcr:
    def test_exact_copy(self, rng):
        X = rng.standard_normal((30, 4))
        r = dcr(X, X)
        assert r.mean_dcr == 0.0
        assert np.all(r.distances == 0.0)

    def test_single_pair(self):
        assert dcr(np.array([[0.0]]), np.array([[3.0]])).mean_dcr == 3.0

    def test_brute_force(self, rng, backend):
        R = rng.standard_normal((40, 4))
        S = rng.standard_normal((25, 4))
        ref = pair_distances(S, R).min(axis=1)
        got = dcr(R, S)
        np.testing.assert_allclose(got.distances, ref, rtol=1e-12)
        assert got.mean_dcr == pytest.approx(ref.mean(), rel=1e-12)

    def test_reverse_direction(self, rng):
        R = rng.standard_normal((12, 2))
        S = rng.standard_normal((7, 2))
        got = dcr(R, S, "real_to_synthetic")
        np.testing.assert_allclose(got.distances, pair_distances(R, S).min(axis=1), rtol=1e-12)
        assert got.distances.size == 12

    def test_unknown_direction(self, rng):
        with pytest.raises(ValueError):
            dcr(np.zeros((2, 1)), np.zeros((2, 1)), "sideways")

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            dcr(np.zeros((3, 2)), np.zeros((3, 3)))

    def test_empty(self):
        with pytest.raises(InsufficientDataError):
            dcr(np.zeros((0, 2)), np.zeros((3, 2)))

    @settings(max_examples=50, deadline=None)
    @given(st.integers(1, 40), st.integers(1, 40), st.integers(1, 6), st.integers(0, 2**32 - 1))
    def test_permutation_invariance(self, n, m, d, seed):
        r = np.random.default_rng(seed)
        R = r.standard_normal((n, d))
        S = r.standard_normal((m, d))
        base = dcr(R, S).mean_dcr
        shuffled = dcr(R[r.permutation(n)], S[r.permutation(m)]).mean_dcr
        assert shuffled == pytest.approx(base, rel=1e-12)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(1, 50), st.integers(1, 27), st.integers(0, 2**32 - 1))
    def test_self_dcr_is_zero(self, n, d, seed):
        X = np.random.default_rng(seed).standard_normal((n, d))
        assert dcr(X, X).mean_dcr == 0.0


class TestBaseline:
    def test_hand_example(self):
        r = dcr_baseline(np.array([[0.0], [1.0], [5.0]]))
        np.testing.assert_array_equal(r.distances, [1.0, 1.0, 4.0])
        assert r.mean_dcr == 2.0

    def test_duplicate_row(self):
        r = dcr_baseline(np.array([[0.0], [2.0], [7.0], [2.0]]))
        np.testing.assert_array_equal(r.distances, [2.0, 0.0, 5.0, 0.0])

    def test_leave_one_out_oracle(self, rng, backend):
        X = rng.standard_normal((60, 5))
        D = pair_distances(X, X)
        np.fill_diagonal(D, np.inf)
        np.testing.assert_allclose(dcr_baseline(X).distances, D.min(axis=1), rtol=1e-12)

    def test_needs_two_rows(self):
        with pytest.raises(InsufficientDataError):
            dcr_baseline(np.zeros((1, 3)))


class TestHistogram:
    def test_two_bins(self):
        r = dcr_histogram(dcr_baseline(np.array([[0.0], [1.0], [5.0]])), bins=2)
        assert [(lo, hi, n) for lo, hi, n in r.histogram] == [(0.0, 2.0, 2), (2.0, 4.0, 1)]

    def test_single_distance(self):
        r = dcr_histogram(dcr(np.array([[0.0]]), np.array([[2.5]])), bins=1)
        assert r.histogram == ((0.0, 2.5, 1),)

    def test_all_zero(self):
        X = np.ones((4, 2))
        r = dcr_histogram(dcr(X, X), bins=3)
        assert [n for _, _, n in r.histogram] == [4, 0, 0]

    def test_conservation(self, rng):
        r = dcr_histogram(dcr(rng.standard_normal((50, 3)), rng.standard_normal((1000, 3))), bins=20)
        assert sum(n for _, _, n in r.histogram) == 1000
        assert len(r.histogram) == 20

    def test_csv_and_json(self, tmp_path):
        r = dcr_histogram(dcr_baseline(np.array([[0.0], [1.0], [5.0]])), bins=2)
        r.write_histogram_csv(tmp_path / "h.csv")
        assert (tmp_path / "h.csv").read_text() == "bin_center,count\n1.0,2\n3.0,1\n"
        d = json.loads(r.to_json())
        assert d["mean_dcr"] == 2.0 and d["n"] == 3
        assert d["direction"] == "real_to_real_baseline"

    def test_csv_needs_histogram(self, tmp_path):
        with pytest.raises(ValueError):
            dcr(np.zeros((1, 1)), np.ones((1, 1))).write_histogram_csv(tmp_path / "x.csv")

    def test_bins_positive(self):
        with pytest.raises(ValueError):
            dcr_histogram(dcr(np.zeros((1, 1)), np.ones((1, 1))), bins=0)


class TestVerdict:
    def test_ordering_line(self):
        line = ordering_verdict({"smote": 1.0, "kde_knn": 5.0}, 2.7)
        assert line.startswith("smote (1.000) < real-real baseline (2.700) < kde_knn (5.000)")
        assert "smote" in line.split(";")[1]

    def test_all_farther(self):
        assert "all synthetic sets are farther" in ordering_verdict({"a": 3.0}, 1.0)

    def test_summary_pairs_dcr_with_auc(self):
        s = privacy_utility_summary({"smote": 1.0, "kde_knn": 5.0}, {"kde_knn": 0.7}, 2.7)
        assert s["methods"]["kde_knn"] == {"mean_dcr": 5.0, "auc": 0.7, "farther_than_baseline": True}
        assert s["methods"]["smote"]["auc"] is None
