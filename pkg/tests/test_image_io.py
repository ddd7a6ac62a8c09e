import numpy as np
import pytest
from PIL import Image

from src.fixtures.synthetic import checkerboard
from src.imaging.image_io import (
    LabRaster, RgbRaster, lab_to_unit, load_gray, load_image, resize_to_max, save_png, to_uint8,
)
from src.utils.exceptions import ImageDecodeError


def test_load_single_white_pixel(tmp_path):
    path = tmp_path / 'white.png'
    Image.new('RGB', (1, 1), (255, 255, 255)).save(path)
    img = load_image(str(path))
    assert (img.width, img.height) == (1, 1)
    assert img.data[0, 0].tolist() == [255, 255, 255]


def test_missing_file_names_path(tmp_path):
    path = tmp_path / 'nope.png'
    with pytest.raises(FileNotFoundError, match='file not found'):
        load_image(str(path))


def test_undecodable_file_raises_decode_error(tmp_path):
    path = tmp_path / 'broken.png'
    path.write_bytes(b'not an image at all')
    with pytest.raises(ImageDecodeError) as info:
        load_image(str(path))
    assert str(path) in str(info.value)


def test_checkerboard_matches_fixture_bytes(tmp_path):
    fx = checkerboard()
    path = save_png(fx.image.data, str(tmp_path / 'board.png'))
    loaded = load_image(path)
    np.testing.assert_array_equal(loaded.data, fx.image.data)
    assert loaded.data[0, 0].tolist() == [0, 0, 0]
    assert loaded.data[0, 8].tolist() == [255, 255, 255]


def test_grayscale_promoted_to_rgb(tmp_path):
    path = tmp_path / 'gray.png'
    Image.fromarray(np.array([[10, 200]], dtype=np.uint8), mode='L').save(path)
    img = load_image(str(path))
    assert img.data.shape == (1, 2, 3)
    assert img.data[0, 1].tolist() == [200, 200, 200]


def test_raster_rejects_bad_shapes():
    with pytest.raises(ValueError):
        RgbRaster(np.zeros((4, 4), dtype=np.uint8))
    with pytest.raises(ValueError):
        RgbRaster(np.zeros((4, 4, 3), dtype=np.float64))


def test_to_uint8_rounds_half_up():
    out = to_uint8(np.array([0.0, 0.5, 1.0, 1.5, -0.2]))
    assert out.tolist() == [0, 128, 255, 255, 0]


def test_lab_unit_view_is_affine():
    native = np.array([[[0.0, -128.0, -128.0], [100.0, 127.0, 127.0]]])
    unit = LabRaster(native).unit
    np.testing.assert_allclose(unit[0, 0], [0.0, 0.0, 0.0])
    np.testing.assert_allclose(unit[0, 1], [1.0, 1.0, 1.0])
    np.testing.assert_allclose(lab_to_unit(np.array([50.0, 0.0, 0.0])), [0.5, 128 / 255, 128 / 255])


def test_resize_to_max_keeps_small_images():
    img = RgbRaster(np.zeros((20, 30, 3), dtype=np.uint8))
    assert resize_to_max(img, 0) is img
    assert resize_to_max(img, 40) is img
    small = resize_to_max(img, 15)
    assert (small.width, small.height) == (15, 10)


def test_uint16_png_and_gray_loading(tmp_path):
    ids = np.arange(12, dtype=np.uint16).reshape(3, 4) * 1000
    path = save_png(ids, str(tmp_path / 'ids.png'))
    with Image.open(path) as img:
        np.testing.assert_array_equal(np.asarray(img, dtype=np.uint16), ids)

    mask = np.zeros((4, 4), dtype=np.uint8)
    mask[1:3, 1:3] = 255
    gray = load_gray(save_png(mask, str(tmp_path / 'mask.png')))
    assert gray.dtype == np.float64
    assert gray.max() == 255.0 and gray.min() == 0.0


def test_save_png_rejects_float(tmp_path):
    with pytest.raises(ValueError):
        save_png(np.zeros((2, 2)), str(tmp_path / 'x.png'))
