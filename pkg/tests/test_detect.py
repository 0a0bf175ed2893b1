import numpy as np
import pytest

from spectralgap.detect import (DistLabel, GapDetectorConfig, Orientation,
                                choose_tau, gap_detect, lof_scores, ssd_scores)


def reference_lof(train, test, k):
    """Independent quadratic-time LOF used as the oracle."""
    train = np.asarray(train, dtype=float)
    test = np.asarray(test, dtype=float)
    m = train.shape[0]

    def dist(a, b):
        return float(np.sqrt(((a - b) ** 2).sum()))

    def neighbors(point, exclude=None):
        order = sorted(
            (dist(point, train[j]), j) for j in range(m) if j != exclude)
        return order[:k]

    k_dist = np.zeros(m)
    nn = []
    for i in range(m):
        ns = neighbors(train[i], exclude=i)
        nn.append(ns)
        k_dist[i] = ns[-1][0]

    lrd = np.zeros(m)
    for i in range(m):
        reach = [max(k_dist[j], d) for d, j in nn[i]]
        lrd[i] = 1.0 / (sum(reach) / k)

    out = []
    for x in test:
        ns = neighbors(x)
        reach = [max(k_dist[j], d) for d, j in ns]
        lrd_x = 1.0 / (sum(reach) / k)
        out.append(sum(lrd[j] for _, j in ns) / k / lrd_x)
    return np.array(out)


class TestSsd:
    def test_score_at_mean_is_zero(self, rng):
        train = rng.standard_normal((50, 3))
        score = ssd_scores(train, [train.mean(axis=0)])[0]
        assert abs(score) <= 1e-9

    def test_whitened_unit_distance(self):
        # rows +-a e_i give an exactly-identity sample covariance
        d = 4
        a = np.sqrt((2 * d - 1) / 2.0)
        train = np.concatenate([a * np.eye(d), -a * np.eye(d)])
        score = ssd_scores(train, [np.eye(d)[0]])[0]
        assert abs(score - 1.0) <= 1e-3  # ridge shifts it slightly below 1

    def test_outlier_beats_inliers(self, rng):
        train = rng.standard_normal((80, 5))
        outlier = train.mean(axis=0) + 12.0
        inlier_scores = ssd_scores(train, train)
        assert ssd_scores(train, [outlier])[0] > inlier_scores.max()

    def test_matches_dense_inverse_oracle(self, rng):
        train = rng.standard_normal((60, 4)) @ rng.standard_normal((4, 4))
        test = rng.standard_normal((10, 4))
        got = ssd_scores(train, test)
        mu = train.mean(axis=0)
        sigma = np.cov(train, rowvar=False, ddof=1)
        gamma = 1e-4 * np.trace(sigma) / 4
        inv = np.linalg.inv(sigma + gamma * np.eye(4))
        expected = np.array([(x - mu) @ inv @ (x - mu) for x in test])
        np.testing.assert_allclose(got, expected, rtol=1e-8)

    def test_rotation_invariance(self, rng):
        train = rng.standard_normal((40, 4))
        test = rng.standard_normal((6, 4))
        q, _ = np.linalg.qr(rng.standard_normal((4, 4)))
        base = ssd_scores(train, test)
        rotated = ssd_scores(train @ q, test @ q)
        np.testing.assert_allclose(base, rotated, atol=1e-8)

    def test_needs_two_points(self):
        with pytest.raises(ValueError, match="2 training"):
            ssd_scores([[1.0, 2.0]], [[0.0, 0.0]])

    def test_dimension_mismatch(self, rng):
        with pytest.raises(ValueError, match="mismatch"):
            ssd_scores(rng.standard_normal((5, 3)), rng.standard_normal((2, 4)))


class TestLof:
    def test_grid_interior_near_one(self):
        gx, gy = np.meshgrid(np.arange(10.0), np.arange(10.0))
        grid = np.column_stack([gx.ravel(), gy.ravel()])
        score = lof_scores(grid, [[4.5, 4.5]], 8)[0]
        assert 0.8 <= score <= 1.2

    def test_far_point_is_outlier(self):
        gx, gy = np.meshgrid(np.arange(10.0), np.arange(10.0))
        grid = np.column_stack([gx.ravel(), gy.ravel()])
        score = lof_scores(grid, [[19.0, 4.5]], 8)[0]  # 10 spacings out
        assert score > 1.5

    def test_matches_reference(self, rng):
        train = rng.standard_normal((30, 3))
        test = rng.standard_normal((8, 3))
        got = lof_scores(train, test, 5)
        expected = reference_lof(train, test, 5)
        np.testing.assert_allclose(got, expected, atol=1e-9)

    def test_train_too_small(self, rng):
        with pytest.raises(ValueError, match="exceed"):
            lof_scores(rng.standard_normal((5, 2)), rng.standard_normal((1, 2)), 5)


class TestGapDetect:
    def test_paper_style_threshold(self):
        cfg = GapDetectorConfig(3.0, Orientation.GAP_HIGH_MEANS_ID)
        assert gap_detect([3.5], cfg) == [DistLabel.ID]

    def test_tie_goes_ood(self):
        for orientation in Orientation:
            cfg = GapDetectorConfig(3.0, orientation)
            assert gap_detect([3.0], cfg) == [DistLabel.OOD]

    def test_inverted_orientation(self):
        cfg = GapDetectorConfig(3.0, Orientation.GAP_HIGH_MEANS_OOD)
        assert gap_detect([3.5, 2.0], cfg) == [DistLabel.OOD, DistLabel.ID]

    def test_rejects_non_finite(self):
        cfg = GapDetectorConfig(1.0, Orientation.GAP_HIGH_MEANS_ID)
        with pytest.raises(ValueError, match="finite"):
            gap_detect([np.nan], cfg)


def sweep_oracle(id_gaps, ood_gaps):
    """Exhaustive threshold sweep over a fine grid of candidates."""
    id_gaps = np.asarray(id_gaps, dtype=float)
    ood_gaps = np.asarray(ood_gaps, dtype=float)
    pooled = np.unique(np.concatenate([id_gaps, ood_gaps]))
    candidates = np.concatenate(
        [[-np.inf], pooled - 1e-9, pooled + 1e-9, [np.inf]])
    best = np.inf
    for tau in candidates:
        e_high_id = 0.5 * (np.mean(id_gaps <= tau) + np.mean(ood_gaps > tau))
        e_high_ood = 0.5 * (np.mean(id_gaps >= tau) + np.mean(ood_gaps < tau))
        best = min(best, e_high_id, e_high_ood)
    return best


class TestChooseTau:
    def test_separable(self):
        tau, orientation, err = choose_tau([1, 2], [9, 10])
        assert orientation is Orientation.GAP_HIGH_MEANS_OOD
        assert 2 < tau < 9
        assert err == 0.0

    def test_identical_lists(self):
        tau, orientation, err = choose_tau([1.0, 2.0, 3.0], [1.0, 2.0, 3.0])
        assert err == 0.5
        assert orientation is Orientation.GAP_HIGH_MEANS_ID

    def test_matches_exhaustive_sweep(self, rng):
        for _ in range(25):
            id_gaps = rng.normal(2.0, 1.0, size=int(rng.integers(3, 30)))
            ood_gaps = rng.normal(2.5, 1.2, size=int(rng.integers(3, 30)))
            _, _, err = choose_tau(id_gaps, ood_gaps)
            assert err == sweep_oracle(id_gaps, ood_gaps)

    def test_classification_agrees_with_error(self, rng):
        id_gaps = rng.normal(1.0, 0.5, size=40)
        ood_gaps = rng.normal(3.0, 0.8, size=40)
        tau, orientation, err = choose_tau(id_gaps, ood_gaps)
        cfg = GapDetectorConfig(tau, orientation)
        id_pred = gap_detect(id_gaps, cfg)
        ood_pred = gap_detect(ood_gaps, cfg)
        id_err = np.mean([p is not DistLabel.ID for p in id_pred])
        ood_err = np.mean([p is not DistLabel.OOD for p in ood_pred])
        assert abs(0.5 * (id_err + ood_err) - err) <= 1e-12

    def test_empty_rejected(self):
        with pytest.raises(ValueError, match="non-empty"):
            choose_tau([], [1.0])
