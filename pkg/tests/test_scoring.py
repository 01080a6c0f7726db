import numpy as np
import pytest
from hypothesis import given, strategies as st
from numpy.testing import assert_allclose, assert_array_equal

from coreselect import (
    EmbeddingMatrix,
    InputError,
    KMeansParams,
    ScoreVector,
    load_scores,
    lloyd_kmeans,
    normalize_scores,
    ssp_scores,
)


class TestSspScores:
    def test_single_cluster_symmetric_pair(self):
        emb = EmbeddingMatrix(np.array([[0.0, 0.0], [2.0, 0.0]]))
        scores = ssp_scores(emb, KMeansParams(clusters=1))
        assert_allclose(scores.values, [1.0, 1.0], atol=1e-12)

    def test_point_at_centroid_scores_zero(self):
        emb = EmbeddingMatrix(np.array([[1.0, 1.0], [1.0, 1.0], [1.0, 1.0]]))
        scores = ssp_scores(emb, KMeansParams(clusters=1))
        assert_allclose(scores.values, [0.0, 0.0, 0.0], atol=1e-12)

    @pytest.mark.parametrize("seed", [0, 1, 7])
    def test_two_separated_clusters(self, seed):
        emb = EmbeddingMatrix(np.array([[0.0, 0.0], [0.1, 0.0], [10.0, 0.0]]))
        scores = ssp_scores(emb, KMeansParams(clusters=2, seed=seed))
        assert_allclose(scores.values, [0.05, 0.05, 0.0], atol=1e-12)

    def test_deterministic_at_fixed_seed(self, rng):
        emb = EmbeddingMatrix(rng.normal(size=(60, 5)))
        a = ssp_scores(emb, KMeansParams(clusters=6, seed=3))
        b = ssp_scores(emb, KMeansParams(clusters=6, seed=3))
        assert a.values.tobytes() == b.values.tobytes()

    def test_clusters_above_n_rejected(self, rng):
        emb = EmbeddingMatrix(rng.normal(size=(4, 3)))
        with pytest.raises(InputError, match="clusters"):
            ssp_scores(emb, KMeansParams(clusters=5))

    def test_raw_not_normalized(self, rng):
        emb = EmbeddingMatrix(rng.normal(size=(30, 4)) * 10)
        scores = ssp_scores(emb, KMeansParams(clusters=3))
        assert not scores.normalized


class TestLloydKmeans:
    def test_inertia_non_increasing(self, rng):
        x = rng.normal(size=(200, 6))
        res = lloyd_kmeans(x, KMeansParams(clusters=5, seed=1))
        assert (np.diff(res.inertia) <= 1e-9).all()

    def test_labels_cover_all_points(self, rng):
        x = rng.normal(size=(50, 3))
        res = lloyd_kmeans(x, KMeansParams(clusters=4, seed=0))
        assert res.labels.shape == (50,)
        assert res.labels.min() >= 0 and res.labels.max() < 4

    def test_duplicate_points_trigger_reseed_and_terminate(self):
        # three identical points with c=3: k-means++ mass degenerates to
        # zero and empty clusters must be reseeded deterministically
        x = np.zeros((3, 2))
        x = np.vstack([x, [[1.0, 1.0]]])
        res = lloyd_kmeans(x, KMeansParams(clusters=3, seed=0))
        assert np.isfinite(res.centroids).all()
        assert (np.diff(res.inertia) <= 1e-9).all()

    def test_exact_clusters_zero_inertia(self):
        x = np.array([[0.0, 0.0], [0.0, 0.0], [5.0, 5.0], [5.0, 5.0]])
        res = lloyd_kmeans(x, KMeansParams(clusters=2, seed=2))
        assert res.inertia[-1] == pytest.approx(0.0, abs=1e-18)


class TestNormalizeScores:
    def test_affine_map(self):
        out = normalize_scores(ScoreVector([2.0, 4.0, 6.0]))
        assert_array_equal(out.values, [0.0, 0.5, 1.0])
        assert out.normalized

    def test_degenerate_range_maps_to_half(self):
        out = normalize_scores(ScoreVector([7.0, 7.0, 7.0]))
        assert_array_equal(out.values, [0.5, 0.5, 0.5])

    def test_negative_values(self):
        out = normalize_scores(ScoreVector([-1.0, 0.0, 3.0]))
        assert_array_equal(out.values, [0.0, 0.25, 1.0])

    def test_endpoints_exact(self, rng):
        out = normalize_scores(ScoreVector(rng.normal(size=50) * 100))
        assert out.values.min() == 0.0 and out.values.max() == 1.0

    @given(
        st.lists(
            st.floats(min_value=-1e6, max_value=1e6, allow_nan=False),
            min_size=2,
            max_size=50,
        )
    )
    def test_monotone_never_swaps(self, values):
        # rounding may merge values that differ in the last few ulps, but the
        # affine map must never invert an ordering
        v = np.asarray(values)
        if v.max() == v.min():
            return
        out = normalize_scores(ScoreVector(v)).values
        vi, vj = v[:, None], v[None, :]
        oi, oj = out[:, None], out[None, :]
        assert not ((vi < vj) & (oi > oj)).any()
        assert not np.where(vi == vj, oi - oj, 0.0).any()

    def test_argsort_preserved_for_separated_values(self, rng):
        v = rng.permutation(np.arange(100, dtype=np.float64) * 3.7 - 120.0)
        out = normalize_scores(ScoreVector(v)).values
        assert_array_equal(np.argsort(v, kind="stable"), np.argsort(out, kind="stable"))


class TestLoadScores:
    def test_direct_mapping(self):
        out = load_scores([(0, 0.3), (1, 0.9)])
        assert_array_equal(out.values, [0.3, 0.9])

    def test_order_independent(self):
        out = load_scores([(1, 0.9), (0, 0.3)])
        assert_array_equal(out.values, [0.3, 0.9])

    def test_duplicate_index_names_row(self):
        with pytest.raises(InputError, match="row 2.*duplicate"):
            load_scores([(0, 0.3), (0, 0.5)])

    def test_out_of_range_index(self):
        with pytest.raises(InputError, match="row 2"):
            load_scores([(0, 0.3), (5, 0.5)])

    def test_non_finite_score(self):
        with pytest.raises(InputError, match="row 1.*finite"):
            load_scores([(0, float("nan")), (1, 0.5)])

    def test_empty_table(self):
        with pytest.raises(InputError, match="empty"):
            load_scores([])
