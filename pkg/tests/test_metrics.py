import numpy as np
import pytest

from src.evaluation.metrics import (
    adaptive_threshold, binarize_adaptive, f_measure, mae, max_f, overlap, pr_curve,
    precision_recall,
)


def _brute_force_curve(S, gt):
    """逐阈值直接计数混淆矩阵"""
    pred = S.ravel()[:, None] >= np.arange(256)[None, :]
    pos = gt.ravel()[:, None]
    tp = np.count_nonzero(pred & pos, axis=0)
    fp = np.count_nonzero(pred & ~pos, axis=0)
    fn = np.count_nonzero(~pred & pos, axis=0)
    precision = np.array([t / (t + f) if t + f else 1.0 for t, f in zip(tp, fp)])
    return precision, tp / (tp + fn)


def test_pr_curve_matches_brute_force(rng):
    for trial in range(1000):
        S = rng.uniform(0, 255, size=(8, 8))
        if trial % 2:
            S = np.floor(S)
        gt = rng.random((8, 8)) < rng.uniform(0.05, 0.6)
        gt[trial % 8, trial % 7] = True
        precision, recall = _brute_force_curve(S, gt)
        got_p, got_r = pr_curve(S, gt)
        np.testing.assert_allclose(got_p, precision, atol=1e-15)
        np.testing.assert_allclose(got_r, recall, atol=1e-15)


def _brute_force_counts(pred, gt):
    tp = fp = fn = 0
    for p, g in zip(pred.ravel().tolist(), gt.ravel().tolist()):
        tp += p and g
        fp += p and not g
        fn += g and not p
    return tp, fp, fn


def test_binary_metrics_match_brute_force(rng):
    for trial in range(1000):
        S = rng.random((8, 8))
        if trial % 3 == 0:
            S = np.round(S, 1)
        gt = rng.random((8, 8)) < rng.uniform(0.0, 0.7)
        pred = S >= rng.uniform(0.0, 1.0)
        tp, fp, fn = _brute_force_counts(pred, gt)

        P = tp / (tp + fp) if tp + fp else 1.0
        R = tp / (tp + fn) if tp + fn else 0.0
        got_p, got_r = precision_recall(pred, gt)
        assert abs(got_p - P) < 1e-12 and abs(got_r - R) < 1e-12
        F = 1.3 * P * R / (0.3 * P + R) if 0.3 * P + R > 0 else 0.0
        assert abs(f_measure(got_p, got_r) - F) < 1e-12

        union = tp + fp + fn
        assert abs(overlap(pred, gt) - (tp / union if union else 0.0)) < 1e-12

        total = sum(abs(s - float(g)) for s, g in zip(S.ravel().tolist(), gt.ravel().tolist()))
        assert abs(mae(S, gt) - total / 64) < 1e-12


def test_pr_curve_of_exact_map():
    gt = np.zeros((6, 6), dtype=bool)
    gt[1:4, 2:5] = True
    precision, recall = pr_curve(np.where(gt, 255.0, 0.0), gt)
    assert len(precision) == len(recall) == 256
    np.testing.assert_array_equal(precision[1:], 1.0)
    np.testing.assert_array_equal(recall[1:], 1.0)
    assert recall[0] == 1.0
    assert precision[0] == pytest.approx(9 / 36)


def test_pr_curve_of_complement():
    gt = np.zeros((4, 4), dtype=bool)
    gt[:2] = True
    precision, recall = pr_curve(np.where(gt, 0.0, 255.0), gt)
    np.testing.assert_array_equal(precision[1:], 0.0)
    np.testing.assert_array_equal(recall[1:], 0.0)


def test_recall_is_non_increasing(rng):
    S = rng.uniform(0, 255, size=(16, 16))
    gt = rng.random((16, 16)) < 0.3
    _, recall = pr_curve(S, gt)
    assert np.all(np.diff(recall) <= 0)


def test_pr_curve_errors():
    with pytest.raises(ValueError, match='真值不含显著像素'):
        pr_curve(np.zeros((3, 3)), np.zeros((3, 3), dtype=bool))
    with pytest.raises(ValueError, match='尺寸不一致'):
        pr_curve(np.zeros((3, 3)), np.ones((3, 4), dtype=bool))


@pytest.mark.parametrize('S, expected', [
    (np.full((4, 4), 0.4), 0.6),
    (np.zeros((4, 4)), 0.0),
    (np.concatenate([np.zeros(8), np.ones(8)]), 0.75),
])
def test_adaptive_threshold(S, expected):
    assert adaptive_threshold(S) == pytest.approx(expected)


def test_adaptive_threshold_empty_map():
    with pytest.raises(ValueError):
        adaptive_threshold(np.array([]))


def test_binarize_adaptive_caps_threshold():
    assert binarize_adaptive(np.ones((2, 2))).all()
    S = np.array([0.0, 0.0, 0.0, 0.8])
    assert binarize_adaptive(S).tolist() == [False, False, False, True]


@pytest.mark.parametrize('P, R, expected', [
    (0.9, 0.9, 0.9),
    (1.0, 0.0, 0.0),
    (0.0, 0.0, 0.0),
    (0.8, 0.4, 0.65),
])
def test_f_measure_examples(P, R, expected):
    assert f_measure(P, R) == pytest.approx(expected)


def test_f_measure_lies_between_precision_and_recall(rng):
    P = rng.uniform(0.01, 1.0, size=500)
    R = rng.uniform(0.01, 1.0, size=500)
    F = f_measure(P, R)
    assert np.all(F >= np.minimum(P, R) - 1e-12)
    assert np.all(F <= np.maximum(P, R) + 1e-12)


def test_max_f_picks_curve_peak():
    precision = np.array([0.2, 0.8, 1.0])
    recall = np.array([1.0, 0.4, 0.0])
    assert max_f(precision, recall) == pytest.approx(max(f_measure(0.2, 1.0), 0.65))


def test_precision_recall_conventions():
    gt = np.array([True, False])
    assert precision_recall(np.array([False, False]), gt) == (1.0, 0.0)
    assert precision_recall(np.array([True, False]), np.array([False, False])) == (0.0, 0.0)


def test_overlap_examples():
    gt = np.zeros((40, 40), dtype=bool)
    gt[10:20, 10:20] = True
    assert overlap(gt, gt) == 1.0
    other = np.zeros_like(gt)
    other[30:, 30:] = True
    assert overlap(other, gt) == 0.0
    dilated = np.zeros_like(gt)
    dilated[10:20, 5:25] = True
    assert overlap(dilated, gt) == 0.5
    assert overlap(np.zeros_like(gt), np.zeros_like(gt)) == 0.0


def test_mae_examples(rng):
    gt = rng.random((10, 12)) < 0.4
    assert mae(gt.astype(float), gt) == 0.0
    assert mae(1.0 - gt, gt) == 1.0
    assert mae(np.full(gt.shape, 0.5), gt) == 0.5


def test_mae_symmetric_and_flip_invariant(rng):
    S = rng.random((9, 7))
    gt = rng.random((9, 7)) < 0.5
    assert mae(S, gt) == pytest.approx(mae(gt.astype(float), S))
    assert mae(S, gt) == pytest.approx(mae(S[:, ::-1], gt[:, ::-1]))
