import json
import logging
import os

import numpy as np
import pandas as pd
import pytest

from src.evaluation.evaluator import (
    RUN_RECORDS_FILE, DatasetEvaluator, evaluate_dataset, pair_files, save_report,
)
from src.evaluation.ground_truth import GroundTruth, binarize_ground_truth, load_ground_truth
from src.imaging.image_io import save_png

# 4x4 真值：左半为显著
GT = np.zeros((4, 4), dtype=np.uint8)
GT[:, :2] = 255
F_HALF = 1.3 * 0.5 / (0.3 * 0.5 + 1.0)


def _write(directory, name, data):
    os.makedirs(directory, exist_ok=True)
    return save_png(np.asarray(data, dtype=np.uint8), os.path.join(directory, name))


@pytest.fixture
def three_pairs(tmp_path):
    maps, gts = str(tmp_path / 'maps'), str(tmp_path / 'gt')
    _write(maps, 'a.png', GT)
    _write(maps, 'b.png', np.full((4, 4), 255))
    _write(maps, 'c.png', np.zeros((4, 4)))
    for name in ('a', 'b', 'c'):
        _write(gts, f'{name}.png', GT)
    return maps, gts


def test_ground_truth_binarization(tmp_path, caplog):
    assert binarize_ground_truth(np.array([0, 127, 128, 255])).tolist() == [False, False, True, True]
    path = _write(str(tmp_path), 'empty.png', np.zeros((3, 3)))
    with caplog.at_level(logging.WARNING, logger='src.evaluation.ground_truth'):
        gt = load_ground_truth(path)
    assert gt.positives == 0
    assert gt.shape == (3, 3)
    assert '真值不含显著像素' in caplog.text


def test_one_perfect_pair(tmp_path):
    maps, gts = str(tmp_path / 'maps'), str(tmp_path / 'gt')
    _write(maps, 'img.png', GT)
    _write(gts, 'img.png', GT)
    summary = evaluate_dataset(maps, gts).summary()
    assert summary['n_images'] == 1
    assert summary['f_measure'] == 1.0
    assert summary['overlap'] == 1.0
    assert summary['mae'] == 0.0
    assert summary['max_f'] == pytest.approx(1.0)


def test_empty_directories(tmp_path):
    (tmp_path / 'maps').mkdir()
    (tmp_path / 'gt').mkdir()
    with pytest.raises(ValueError, match='no matched pairs'):
        evaluate_dataset(str(tmp_path / 'maps'), str(tmp_path / 'gt'))


def test_missing_directory(tmp_path):
    with pytest.raises(FileNotFoundError):
        evaluate_dataset(str(tmp_path / 'nope'), str(tmp_path))


def test_three_pair_means(three_pairs):
    report = evaluate_dataset(*three_pairs)
    frame = report.to_frame()
    assert frame['image_id'].tolist() == ['a', 'b', 'c']
    np.testing.assert_allclose(frame['f_measure'], [1.0, F_HALF, F_HALF])
    np.testing.assert_allclose(frame['overlap'], [1.0, 0.5, 0.5])
    np.testing.assert_allclose(frame['mae'], [0.0, 0.5, 0.5])

    summary = report.summary()
    assert summary['f_measure'] == pytest.approx((1.0 + 2 * F_HALF) / 3)
    assert summary['overlap'] == pytest.approx(2 / 3)
    assert summary['mae'] == pytest.approx(1 / 3)
    assert summary['precision'] == pytest.approx(2 / 3)
    assert summary['recall'] == pytest.approx(1.0)
    assert 'inter_fraction' not in summary


def test_pairing_is_case_insensitive_and_extension_agnostic(tmp_path):
    maps, gts = str(tmp_path / 'maps'), str(tmp_path / 'gt')
    _write(maps, 'IMG_01.png', GT)
    _write(gts, 'img_01.PNG', GT)
    _write(maps, 'unmatched.png', GT)
    (tmp_path / 'maps' / 'notes.txt').write_text('x', encoding='utf-8')
    pairs = pair_files(maps, gts)
    assert [key for key, _, _ in pairs] == ['img_01']


def test_maps_resized_to_ground_truth(tmp_path):
    maps, gts = str(tmp_path / 'maps'), str(tmp_path / 'gt')
    _write(maps, 'big.png', np.full((8, 8), 255))
    _write(gts, 'big.png', GT)
    metrics = evaluate_dataset(maps, gts).per_image[0]
    assert metrics.precision.shape == (256,)
    assert metrics.f_measure == pytest.approx(F_HALF)
    assert metrics.mae == pytest.approx(0.5)


def test_failed_pair_recorded(three_pairs, tmp_path):
    maps, gts = three_pairs
    _write(maps, 'd.png', GT)
    _write(gts, 'd.png', np.zeros((4, 4)))
    report = evaluate_dataset(maps, gts)
    assert len(report.per_image) == 3
    assert [f['image_id'] for f in report.failures] == ['d']
    assert report.summary()['n_failures'] == 1


def test_all_pairs_failing_raises(tmp_path):
    maps, gts = str(tmp_path / 'maps'), str(tmp_path / 'gt')
    _write(maps, 'x.png', GT)
    _write(gts, 'x.png', np.zeros((4, 4)))
    with pytest.raises(ValueError, match='所有配对评价均失败'):
        evaluate_dataset(maps, gts)


def test_routes_read_from_run_records(three_pairs):
    maps, gts = three_pairs
    records = [{'image_id': 'a', 'route': 'inter'}, {'image_id': 'b', 'route': 'inner'},
               {'image_id': 'c', 'route': 'inner'}]
    with open(os.path.join(maps, RUN_RECORDS_FILE), 'w', encoding='utf-8') as f:
        json.dump(records, f)
    report = evaluate_dataset(maps, gts)
    assert report.to_frame()['route'].tolist() == ['inter', 'inner', 'inner']
    assert report.summary()['inter_fraction'] == pytest.approx(1 / 3)


def test_save_report(three_pairs, tmp_path):
    report = DatasetEvaluator().evaluate(*three_pairs, config='gamma2=1.6\n')
    paths = save_report(report, str(tmp_path / 'eval'))
    with open(paths['report'], encoding='utf-8') as f:
        payload = json.load(f)
    assert set(payload) == {'config', 'aggregate', 'per_image', 'failures'}
    assert payload['config'] == 'gamma2=1.6\n'
    assert payload['aggregate']['n_images'] == 3
    assert len(pd.read_csv(paths['per_image'])) == 3
    pr = pd.read_csv(paths['pr_curve'])
    assert list(pr.columns) == ['threshold', 'precision', 'recall', 'f_measure']
    assert len(pr) == 256
    assert pr['recall'].is_monotonic_decreasing

    rows = payload['per_image']
    assert all(len(r['pr_precision']) == len(r['pr_recall']) == 256 for r in rows)
    np.testing.assert_allclose(np.mean([r['pr_precision'] for r in rows], axis=0), pr['precision'])
    np.testing.assert_allclose(np.mean([r['pr_recall'] for r in rows], axis=0), pr['recall'])
    assert 'pr_precision' not in pd.read_csv(paths['per_image']).columns


def test_evaluate_image_uses_adaptive_threshold():
    gt = GroundTruth(mask=GT > 127)
    S255 = np.where(GT > 127, 200.0, 20.0)
    metrics = DatasetEvaluator(k_adaptive=1.5).evaluate_image('x', S255, gt, route='inner')
    assert metrics.threshold == pytest.approx(1.5 * (110.0 / 255.0))
    assert metrics.overlap == 1.0
    assert metrics.route == 'inner'
