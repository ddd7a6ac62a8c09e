import numpy as np
import pytest

from src.fixtures.synthetic import blob, bright_pixel, noisy_step
from src.imaging.color import rgb_to_lab
from src.imaging.image_io import RgbRaster
from src.objectness.cues import (
    ColorContrastCue, EdgeDensityCue, chi_square, edge_raster, score_cc, score_ed, score_ms,
    spectral_residual_map, surround_bounds,
)
from src.objectness.windows import Window, combine_cues

RED = (255, 0, 0)
BLUE = (0, 0, 255)


def _blue_with_red(x0, y0, x1, y1, size=30):
    data = np.zeros((size, size, 3), dtype=np.uint8)
    data[...] = BLUE
    data[y0:y1 + 1, x0:x1 + 1] = RED
    return rgb_to_lab(RgbRaster(data))


def test_constant_image_gives_zero_maps():
    img = RgbRaster(np.full((64, 64, 3), 77, dtype=np.uint8))
    maps = spectral_residual_map(img, (16, 32, 64))
    assert len(maps) == 3
    for m in maps:
        assert m.shape == (64, 64)
        assert not m.any()
    assert score_ms(Window(0, 0, 63, 63), maps) == 0.0


def test_bright_pixel_peak_location():
    fx = bright_pixel(64, 64, at=(40, 20))
    (sal,) = spectral_residual_map(fx.image, (64,))
    y, x = np.unravel_index(np.argmax(sal), sal.shape)
    assert abs(x - 40) <= 2 and abs(y - 20) <= 2
    assert sal.max() == pytest.approx(1.0)


def test_spectral_residual_scale_errors():
    img = RgbRaster(np.zeros((16, 16, 3), dtype=np.uint8))
    with pytest.raises(ValueError):
        spectral_residual_map(img, ())
    with pytest.raises(ValueError, match='大于图像宽度'):
        spectral_residual_map(img, (32,))


def test_blob_window_beats_background_window():
    fx = blob()
    maps = spectral_residual_map(fx.image)
    on_blob = score_ms(Window(34, 34, 61, 61), maps)
    for corner in (Window(0, 0, 27, 27), Window(68, 0, 95, 27), Window(0, 68, 27, 95)):
        assert on_blob > score_ms(corner, maps)


@pytest.mark.parametrize('scale', [16, 32, 64])
def test_blob_window_beats_corner_at_each_scale(scale):
    fx = blob()
    (sal,) = spectral_residual_map(fx.image, (scale,))
    on_blob = score_ms(Window(34, 34, 61, 61), [sal])
    for corner in (Window(0, 0, 27, 27), Window(68, 68, 95, 95)):
        assert on_blob > score_ms(corner, [sal])


def test_color_contrast_examples():
    uniform = rgb_to_lab(RgbRaster(np.full((30, 30, 3), 90, dtype=np.uint8)))
    assert score_cc(Window(10, 10, 19, 19), uniform) == 0.0
    assert score_cc(Window(0, 0, 29, 29), uniform) == 0.0

    disjoint = score_cc(Window(10, 10, 19, 19), _blue_with_red(10, 10, 19, 19))
    assert disjoint == pytest.approx(1.0)

    half = score_cc(Window(10, 10, 19, 19), _blue_with_red(10, 10, 14, 19))
    assert 0.0 < half < disjoint
    assert half == pytest.approx(0.5 * (0.5 + 0.25 / 1.5))


def test_surround_is_clipped_to_image():
    assert surround_bounds(10, 10, 19, 19, 30, 30) == (5, 5, 24, 24)
    assert surround_bounds(0, 0, 9, 9, 12, 12) == (0, 0, 11, 11)


def test_chi_square_bounds():
    p = np.array([1.0, 0.0])
    assert chi_square(p, p) == 0.0
    assert chi_square(p, np.array([0.0, 1.0])) == pytest.approx(1.0)


def test_edge_density_examples():
    edges = np.zeros((40, 40), dtype=bool)
    assert score_ed(Window(5, 5, 30, 30), edges) == 0.0

    edges[10, 10:30] = edges[29, 10:30] = True
    edges[10:30, 10] = edges[10:30, 29] = True
    exact = score_ed(Window(10, 10, 29, 29), edges)
    others = [Window(9, 9, 30, 30), Window(11, 11, 28, 28), Window(0, 0, 39, 39),
              Window(5, 5, 24, 24), Window(15, 15, 34, 34), Window(12, 8, 31, 27)]
    for other in others:
        assert exact > score_ed(other, edges)


def test_cue_rejects_windows_outside_image():
    cue = EdgeDensityCue()
    cue.set_edges(np.zeros((10, 10), dtype=bool))
    with pytest.raises(ValueError, match='窗口超出图像范围'):
        cue.score(np.array([[0, 0, 10, 5]]))


def test_cue_config_validation():
    with pytest.raises(ValueError):
        ColorContrastCue({'bins': 0})
    with pytest.raises(ValueError):
        EdgeDensityCue({'edge_top_frac': 0.0})


@pytest.mark.parametrize('cues, expected', [
    ((1.0, 1.0, 1.0), 1.0),
    ((0.7, 0.0, 0.4), 0.0),
    ((0.5, 0.5, 0.5), 0.125),
])
def test_combine_cues(cues, expected):
    assert combine_cues(*cues) == pytest.approx(expected)


def test_edge_raster_ignores_flat_regions():
    fx = blob()
    edges = edge_raster(fx.image, 0.1)
    assert 0 < edges.mean() <= 0.1
    # 边缘只出现在圆斑边界附近
    ys, xs = np.nonzero(edges)
    r = np.hypot(xs - 47.5, ys - 47.5)
    assert r.min() > 11 and r.max() < 17

    flat = RgbRaster(np.full((40, 40, 3), 128, dtype=np.uint8))
    assert not edge_raster(flat).any()


def test_edge_raster_keeps_top_fraction_on_texture():
    edges = edge_raster(noisy_step().image, 0.1)
    assert edges.mean() == pytest.approx(0.1, abs=0.02)
    assert edges[:, 30:34].mean() > edges.mean()
