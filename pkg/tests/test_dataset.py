import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from kdeknn.dataset import (
    CohortSpec,
    Dataset,
    NormStats,
    concat,
    feature_medians,
    impute_median,
    load_csv,
    madb_like_spec,
    prepare,
    simulate_cohort,
    sldb_like_spec,
    split,
    split_indices,
    write_csv,
    zscore_apply,
    zscore_fit,
)
from kdeknn.errors import (
    CsvParseError,
    DimensionMismatchError,
    ImputationError,
    InsufficientDataError,
    SchemaError,
    StratificationError,
)


def _ds(X, y=None, names=None):
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    y = np.arange(X.shape[0]) % 2 if y is None else y
    names = names or [f"x{j}" for j in range(X.shape[1])]
    return Dataset(X, y, names)


@pytest.fixture
def csv_file(tmp_path):
    def make(text, name="data.csv"):
        p = tmp_path / name
        p.write_text(text, encoding="utf-8")
        return p
    return make


class TestLoadCsv:
    def test_three_rows_two_features(self, csv_file):
        ds = load_csv(csv_file("a,b,label\n1,2,0\n3,4,1\n5,6,0\n"))
        assert ds.features.shape == (3, 2)
        np.testing.assert_array_equal(ds.features, [[1, 2], [3, 4], [5, 6]])
        np.testing.assert_array_equal(ds.labels, [0, 1, 0])
        assert ds.feature_names == ("a", "b")

    def test_empty_cell_is_missing(self, csv_file):
        ds = load_csv(csv_file("a,b,label\n1,2,0\n3,,1\n5,6,0\n"))
        assert np.isnan(ds.features[1, 1])
        assert np.isnan(ds.features).sum() == 1
        assert ds.has_missing

    def test_na_token_is_missing(self, csv_file):
        ds = load_csv(csv_file("a,label\nNA,0\n2,1\n"))
        assert np.isnan(ds.features[0, 0])

    def test_label_column_anywhere(self, csv_file):
        ds = load_csv(csv_file("sepsis,a\n1,0.5\n0,1.5\n"), label_column="sepsis")
        np.testing.assert_array_equal(ds.labels, [1, 0])
        assert ds.feature_names == ("a",)

    def test_string_labels_map_by_sorted_order(self, csv_file):
        ds = load_csv(csv_file("a,label\n1,sepsis\n2,control\n"))
        np.testing.assert_array_equal(ds.labels, [1, 0])

    def test_ragged_row_reports_line(self, csv_file):
        with pytest.raises(CsvParseError) as err:
            load_csv(csv_file("a,b,label\n1,2,0\n3,1\n"))
        assert err.value.line == 3

    def test_non_numeric_feature(self, csv_file):
        with pytest.raises(SchemaError):
            load_csv(csv_file("a,label\nabc,0\n2,1\n"))

    def test_missing_label_column(self, csv_file):
        with pytest.raises(SchemaError):
            load_csv(csv_file("a,b\n1,0\n2,1\n"))

    def test_non_binary_label(self, csv_file):
        with pytest.raises(SchemaError):
            load_csv(csv_file("a,label\n1,0\n2,2\n"))

    def test_too_few_rows(self, csv_file):
        with pytest.raises(InsufficientDataError):
            load_csv(csv_file("a,label\n1,0\n"))

    def test_full_size_cohort(self, tmp_path):
        ds = simulate_cohort(madb_like_spec(), 3)
        write_csv(ds, tmp_path / "c.csv")
        back = load_csv(tmp_path / "c.csv")
        assert (back.n_samples, back.n_features) == (1275, 27)

    def test_roundtrip_is_exact(self, tmp_path, rng):
        X = rng.standard_normal((20, 3)) * 1e3
        X[4, 1] = np.nan
        ds = _ds(X)
        write_csv(ds, tmp_path / "r.csv")
        back = load_csv(tmp_path / "r.csv")
        np.testing.assert_array_equal(back.features, ds.features)
        np.testing.assert_array_equal(back.labels, ds.labels)


class TestDataset:
    def test_arrays_are_read_only(self):
        ds = _ds([[1.0], [2.0]])
        with pytest.raises(ValueError):
            ds.features[0, 0] = 5

    def test_rejects_inf(self):
        with pytest.raises(SchemaError):
            _ds([[1.0], [np.inf]])

    def test_name_count_mismatch(self):
        with pytest.raises(SchemaError):
            Dataset(np.zeros((2, 2)), [0, 1], ["a"])

    def test_concat_requires_same_features(self):
        with pytest.raises(SchemaError):
            concat([_ds([[1.0], [2.0]], names=["a"]), _ds([[1.0], [2.0]], names=["b"])])


class TestImputation:
    def test_single_gap(self):
        out = impute_median(_ds([1.0, np.nan, 3.0], [0, 1, 0]))
        np.testing.assert_array_equal(out.features[:, 0], [1, 2, 3])

    def test_no_missing_is_identity(self, rng):
        ds = _ds(rng.standard_normal((10, 2)))
        assert impute_median(ds) is ds

    def test_median_of_observed(self):
        out = impute_median(_ds([5.0, np.nan, np.nan, 9.0, 1.0]))
        # hand median of {1, 5, 9}
        np.testing.assert_array_equal(out.features[:, 0], [5, 5, 5, 9, 1])

    def test_all_missing_feature(self):
        ds = Dataset(np.array([[np.nan, 1.0], [np.nan, 2.0]]), [0, 1], ["dead", "ok"])
        with pytest.raises(ImputationError) as err:
            impute_median(ds)
        assert err.value.feature == "dead"

    def test_external_medians(self):
        out = impute_median(_ds([np.nan, 4.0]), medians=[10.0])
        np.testing.assert_array_equal(out.features[:, 0], [10, 4])

    def test_medians_dimension(self):
        with pytest.raises(DimensionMismatchError):
            impute_median(_ds([np.nan, 4.0]), medians=[1.0, 2.0])


class TestZscore:
    def test_constant_feature_is_degenerate(self):
        stats = zscore_fit(_ds([0.0, 0.0, 0.0]))
        assert stats.means[0] == 0.0
        assert stats.degenerate[0]
        np.testing.assert_array_equal(stats.apply(np.array([[3.0]])), [[0.0]])

    def test_symmetric_pair(self):
        stats = zscore_fit(_ds([-1.0, 1.0]))
        assert stats.means[0] == 0.0
        assert stats.stds[0] == 1.0

    def test_population_std(self):
        stats = zscore_fit(_ds([2.0, 4.0, 6.0, 8.0]))
        assert stats.means[0] == 5.0
        # sqrt(((-3)^2 + (-1)^2 + 1^2 + 3^2) / 4) = sqrt(5)
        assert stats.stds[0] == pytest.approx(2.2360679, abs=1e-7)

    def test_one_step(self):
        stats = NormStats([5.0], [2.0])
        assert stats.apply(np.array([7.0]))[0] == 1.0

    def test_self_normalization(self, rng):
        ds = _ds(rng.normal(3.0, 2.0, (200, 4)))
        z = zscore_apply(ds, zscore_fit(ds))
        np.testing.assert_allclose(z.features.mean(axis=0), 0.0, atol=1e-12)
        np.testing.assert_allclose(z.features.std(axis=0), 1.0, atol=1e-12)
        assert z.normalized

    def test_external_uses_training_stats(self, rng):
        train = _ds(rng.normal(0.0, 1.0, (100, 3)))
        other = _ds(rng.normal(2.0, 3.0, (80, 3)))
        stats = zscore_fit(train)
        z = zscore_apply(other, stats)
        # oracle: recompute from first principles
        mu = train.features.sum(axis=0) / 100
        sd = np.sqrt(((train.features - mu) ** 2).sum(axis=0) / 100)
        np.testing.assert_allclose(z.features, (other.features - mu) / sd, rtol=1e-12)
        assert np.all(np.abs(z.features.mean(axis=0)) > 0.5)

    def test_requires_imputed(self):
        with pytest.raises(ValueError):
            zscore_fit(_ds([1.0, np.nan]))

    def test_json_roundtrip(self):
        stats = NormStats([1.0, 2.0], [3.0, 1.0], [False, True])
        back = NormStats.from_json(stats.to_json())
        np.testing.assert_array_equal(back.means, stats.means)
        np.testing.assert_array_equal(back.degenerate, stats.degenerate)

    @settings(max_examples=50, deadline=None)
    @given(arrays(np.float64, (12, 3), elements=st.floats(-1e4, 1e4)))
    def test_invert_recovers_input(self, X):
        stats = zscore_fit(_ds(X))
        back = stats.invert(stats.apply(X))
        keep = ~stats.degenerate
        np.testing.assert_allclose(back[:, keep], X[:, keep], rtol=1e-9, atol=1e-8)

    def test_prepare_uses_training_medians(self):
        train = _ds([1.0, 3.0, np.nan, 5.0], [0, 1, 0, 1])
        other = _ds([np.nan, 7.0], [0, 1])
        stats, tr, ot = prepare(train, other)
        # training median of {1, 3, 5} is 3, which z-scores to the training mean position
        assert ot.features[0, 0] == pytest.approx(stats.apply(np.array([3.0]))[0])
        assert not tr.has_missing


class TestSplit:
    def test_balanced_hundred(self):
        y = np.repeat([0, 1], 50)
        tr, te = split_indices(y, 0.85, 0)
        assert tr.size == 84 and te.size == 16
        assert (y[tr] == 0).sum() == 42

    def test_deterministic(self):
        y = np.repeat([0, 1], 50)
        a = split_indices(y, 0.85, 7)
        b = split_indices(y, 0.85, 7)
        np.testing.assert_array_equal(a[0], b[0])

    def test_madb_shape(self):
        ds = simulate_cohort(madb_like_spec(), 1)
        tr, te = split(ds, 0.85, 42)
        # floor(979 * 0.85) + floor(296 * 0.85) = 832 + 251
        assert tr.class_counts() == (832, 251)
        assert tr.n_samples == 1083
        assert te.n_samples == 1275 - 1083

    def test_float_guard(self):
        # 20 * 0.85 evaluates to 16.999999999999996 in floating point
        y = np.repeat([0, 1], 20)
        tr, _ = split_indices(y, 0.85, 0)
        assert tr.size == 34

    def test_singleton_class(self):
        with pytest.raises(StratificationError):
            split_indices([0, 0, 0, 1], 0.5, 0)

    def test_bad_fraction(self):
        with pytest.raises(ValueError):
            split_indices([0, 1, 0, 1], 1.0, 0)

    @settings(max_examples=60, deadline=None)
    @given(st.integers(2, 60), st.integers(2, 60), st.floats(0.05, 0.95), st.integers(0, 2**31))
    def test_partition_property(self, n0, n1, frac, seed):
        y = np.r_[np.zeros(n0, int), np.ones(n1, int)]
        tr, te = split_indices(y, frac, seed)
        assert np.intersect1d(tr, te).size == 0
        np.testing.assert_array_equal(np.sort(np.r_[tr, te]), np.arange(n0 + n1))
        assert (y[tr] == 0).sum() == math.floor(round(n0 * frac, 9))
        assert (y[tr] == 1).sum() == math.floor(round(n1 * frac, 9))


class TestSimulation:
    def test_separated_means(self):
        spec = CohortSpec(n_per_class=(10, 10), n_features=2, class_mean_shift=(3.0, 3.0),
                          band_correlation=0.0)
        ds = simulate_cohort(spec, 0)
        assert ds.n_samples == 20
        a, b = ds.class_points(0), ds.class_points(1)
        se = np.sqrt(a.var(axis=0, ddof=1) / 10 + b.var(axis=0, ddof=1) / 10)
        t = (b.mean(axis=0) - a.mean(axis=0)) / se
        assert np.all(t > 5)

    def test_madb_like_default(self):
        ds = simulate_cohort(madb_like_spec(), 42)
        assert ds.class_counts() == (979, 296)
        assert ds.n_features == 27

    def test_sldb_like_default(self):
        ds = simulate_cohort(sldb_like_spec(), 42, "external")
        assert ds.class_counts() == (1014, 1014)

    def test_zero_drift_identity(self):
        plain = simulate_cohort(CohortSpec(), 5)
        drifted = simulate_cohort(CohortSpec(external_drift=tuple([0.0] * 27)), 5)
        np.testing.assert_array_equal(plain.features, drifted.features)

    def test_seed_determinism(self):
        a = simulate_cohort(CohortSpec(), 9)
        b = simulate_cohort(CohortSpec(), 9)
        np.testing.assert_array_equal(a.features, b.features)
        assert not np.array_equal(a.features, simulate_cohort(CohortSpec(), 10).features)

    def test_skew_keeps_order(self):
        base = simulate_cohort(CohortSpec(), 4)
        skewed = simulate_cohort(CohortSpec(skew=0.5), 4)
        np.testing.assert_allclose(skewed.features, np.expm1(0.5 * base.features) / 0.5, rtol=1e-12)

    def test_covariance_band(self):
        spec = CohortSpec(n_per_class=(20000, 1), n_features=3, band_correlation=0.3)
        X = simulate_cohort(spec, 0).class_points(0)
        np.testing.assert_allclose(np.cov(X, rowvar=False), spec.covariance(), atol=0.03)

    @pytest.mark.parametrize("kw", [
        {"n_per_class": (0, 5)},
        {"covariance_scale": 0.0},
        {"skew": -1.0},
        {"class_mean_shift": (1.0, 2.0)},
    ])
    def test_invalid_spec(self, kw):
        with pytest.raises(ValueError):
            CohortSpec(**kw)


def test_feature_medians_ignore_missing():
    ds = _ds(np.array([[1.0, np.nan], [3.0, 4.0], [np.nan, 8.0]]), [0, 1, 0])
    np.testing.assert_array_equal(feature_medians(ds), [2.0, 6.0])
