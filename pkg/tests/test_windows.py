import logging

import numpy as np
import pandas as pd
import pytest

from src.imaging.image_io import RgbRaster
from src.objectness.windows import Window, WindowScore, sample_windows, save_windows


def test_window_geometry():
    win = Window(2, 4, 11, 7)
    assert (win.width, win.height, win.area) == (10, 4, 40)
    assert win.center == (6.5, 5.5)
    assert win.fits(20, 20)
    assert not win.fits(11, 20)
    assert not Window(0, 0, 1, 1).fits(100, 100)


def test_window_rejects_inverted_coordinates():
    with pytest.raises(ValueError):
        Window(5, 0, 4, 3)
    with pytest.raises(ValueError):
        Window(-1, 0, 4, 3)


def test_single_window_is_deterministic(blob_fixture):
    first = sample_windows(blob_fixture.image, M=1, seed=7)
    second = sample_windows(blob_fixture.image, M=1, seed=7)
    assert len(first) == 1
    assert first == second


def test_same_seed_same_windows(blob_fixture):
    first = sample_windows(blob_fixture.image, M=50, seed=3)
    second = sample_windows(blob_fixture.image, M=50, seed=3)
    assert [s.window for s in first] == [s.window for s in second]
    assert [s.p for s in first] == [s.p for s in second]


def test_windows_stay_inside_image(blob_fixture):
    img = blob_fixture.image
    scores = sample_windows(img, M=200, seed=1)
    assert len(scores) == 200
    for s in scores:
        assert s.window.x1 < img.width and s.window.y1 < img.height
        assert s.window.width >= 0.1 * img.width
        assert s.window.height >= 0.1 * img.height
        assert 0.0 <= s.p <= 1.0
        assert s.p == pytest.approx(s.ms * s.cc * s.ed)


def test_flat_image_falls_back_to_uniform_sampling(caplog):
    img = RgbRaster(np.full((48, 48, 3), 120, dtype=np.uint8))
    with caplog.at_level(logging.WARNING, logger='src.objectness.windows'):
        scores = sample_windows(img, M=5, seed=2)
    assert len(scores) == 5
    assert all(s.ms == 0.0 and s.p == 0.0 for s in scores)
    assert '均匀采样' in caplog.text


def test_invalid_window_count(blob_fixture):
    with pytest.raises(ValueError, match='窗口数'):
        sample_windows(blob_fixture.image, M=0)


def test_save_windows(tmp_path):
    scores = [WindowScore(Window(0, 1, 4, 5), 0.5, 1.0, 0.25, 0.125)]
    path = save_windows(scores, str(tmp_path / 'out' / 'windows.csv'))
    frame = pd.read_csv(path)
    assert list(frame.columns) == ['x0', 'y0', 'x1', 'y1', 'ms', 'cc', 'ed', 'p']
    assert frame.iloc[0].tolist() == [0, 1, 4, 5, 0.5, 1.0, 0.25, 0.125]
