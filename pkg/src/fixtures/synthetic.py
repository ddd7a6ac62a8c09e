from dataclasses import dataclass
from typing import List, Optional, Tuple
import logging
import os

import numpy as np

from ..imaging.image_io import RgbRaster, save_png

logger = logging.getLogger(__name__)

SUITE_WIDTH = 128
SUITE_HEIGHT = 112


@dataclass(frozen=True)
class Fixture:
    """合成测试图像，mask 为可选的显著真值"""

    name: str
    image: RgbRaster
    mask: Optional[np.ndarray] = None


def _solid(height: int, width: int, color) -> np.ndarray:
    return np.broadcast_to(np.asarray(color, dtype=np.uint8), (height, width, 3)).copy()


def _paint(data: np.ndarray, mask: np.ndarray, color) -> np.ndarray:
    data[mask] = np.asarray(color, dtype=np.uint8)
    return data


def checkerboard(cells: int = 4, cell_size: int = 8) -> Fixture:
    """cells x cells 黑白棋盘格，左上角为黑"""
    idx = np.arange(cells * cell_size) // cell_size
    white = (idx[:, None] + idx[None, :]) % 2 == 1
    data = np.where(white[..., None], np.uint8(255), np.uint8(0)).repeat(3, axis=2)
    return Fixture('checkerboard', RgbRaster(data.astype(np.uint8)))


def two_color(width: int = 200, height: int = 100) -> Fixture:
    """左半红、右半蓝"""
    data = _solid(height, width, (255, 0, 0))
    data[:, width // 2:] = (0, 0, 255)
    return Fixture('two_color', RgbRaster(data))


def disc_mask(height: int, width: int, cx: float, cy: float, radius: float) -> np.ndarray:
    ys, xs = np.indices((height, width))
    return (xs - cx) ** 2 + (ys - cy) ** 2 <= radius ** 2


def blob(size: int = 96, radius: int = 14) -> Fixture:
    """深灰背景中央的亮黄色圆斑"""
    mask = disc_mask(size, size, (size - 1) / 2.0, (size - 1) / 2.0, radius)
    data = _paint(_solid(size, size, (40, 40, 40)), mask, (235, 205, 40))
    return Fixture('blob', RgbRaster(data), mask)


def bright_pixel(width: int = 64, height: int = 64, at: Tuple[int, int] = (40, 20)) -> Fixture:
    """黑底上单个白色像素，at 为 (x, y)"""
    data = _solid(height, width, (0, 0, 0))
    data[at[1], at[0]] = 255
    mask = np.zeros((height, width), dtype=bool)
    mask[at[1], at[0]] = True
    return Fixture('bright_pixel', RgbRaster(data), mask)


def noisy_step(width: int = 64, height: int = 32, sd: float = 6.0, seed: int = 3) -> Fixture:
    """带高斯噪声的阶跃边缘，边缘位于 x = width // 2"""
    rng = np.random.default_rng(seed)
    base = np.where(np.arange(width) < width // 2, 60.0, 190.0)
    gray = base[None, :] + rng.normal(0.0, sd, size=(height, width))
    gray = np.clip(np.floor(gray + 0.5), 0, 255).astype(np.uint8)
    return Fixture('noisy_step', RgbRaster(np.repeat(gray[..., None], 3, axis=2)))


def red_square_on_gray(size: int = 120, side: int = 40) -> Fixture:
    """灰底中央红色方块"""
    mask = np.zeros((size, size), dtype=bool)
    start = (size - side) // 2
    mask[start:start + side, start:start + side] = True
    data = _paint(_solid(size, size, (128, 128, 128)), mask, (220, 30, 30))
    return Fixture('red_square_on_gray', RgbRaster(data), mask)


def mid_gray_gradient(size: int = 120, top: int = 14) -> Fixture:
    """
    中灰背景上的低对比度径向隆起：半径 top 内为平顶亮区，
    向外线性渐变回背景（0.45·size 处），无清晰边缘。
    背景与平顶的亮度分属不同的 LAB 直方图桶，内部传播结果为中间值。
    """
    c = (size - 1) / 2.0
    ys, xs = np.indices((size, size))
    r = np.hypot(xs - c, ys - c)
    outer = 0.45 * size
    t = np.clip((outer - r) / (outer - top), 0.0, 1.0)
    gray = 105.0 + 60.0 * t
    gray = np.floor(gray + 0.5).astype(np.uint8)
    return Fixture('mid_gray_gradient', RgbRaster(np.repeat(gray[..., None], 3, axis=2)))


# (形状, 面积占比, 中心 x/W, 中心 y/H, 前景色, 背景色, 是否加纹理)
SUITE_SPECS = [
    ('square', 0.05, 0.50, 0.50, (220, 30, 30), (128, 128, 128), False),
    ('disc', 0.10, 0.45, 0.55, (250, 220, 40), (30, 40, 110), False),
    ('ellipse', 0.15, 0.50, 0.50, (245, 245, 245), (30, 80, 40), True),
    ('square', 0.20, 0.55, 0.45, (20, 20, 20), (200, 190, 170), True),
    ('disc', 0.25, 0.50, 0.50, (40, 160, 230), (230, 200, 150), False),
    ('ellipse', 0.30, 0.50, 0.50, (200, 40, 160), (90, 90, 90), False),
    ('square', 0.35, 0.50, 0.50, (250, 140, 20), (40, 40, 60), True),
    ('disc', 0.08, 0.40, 0.45, (30, 200, 60), (220, 220, 230), True),
    ('ellipse', 0.12, 0.55, 0.50, (10, 10, 140), (210, 210, 120), False),
    ('square', 0.40, 0.50, 0.50, (240, 240, 60), (60, 20, 20), False),
]


def _shape_mask(shape: str, area_frac: float, fx: float, fy: float,
                height: int, width: int) -> np.ndarray:
    area = area_frac * height * width
    cx, cy = fx * (width - 1), fy * (height - 1)
    ys, xs = np.indices((height, width))
    if shape == 'square':
        half = np.sqrt(area) / 2.0
        return (np.abs(xs - cx) <= half) & (np.abs(ys - cy) <= half)
    elif shape == 'disc':
        return disc_mask(height, width, cx, cy, np.sqrt(area / np.pi))
    elif shape == 'ellipse':
        b = np.sqrt(area / (np.pi * 1.6))
        a = 1.6 * b
        return ((xs - cx) / a) ** 2 + ((ys - cy) / b) ** 2 <= 1.0
    else:
        raise ValueError(f"不支持的形状类型: {shape}")


def object_suite(width: int = SUITE_WIDTH, height: int = SUITE_HEIGHT, seed: int = 11) -> List[Fixture]:
    """
    10 幅单目标合成图像及真值：方块、圆、椭圆，面积占比 5%~40%，
    纯色或带轻微噪声纹理的背景

    Args:
        width: 图像宽度
        height: 图像高度
        seed: 纹理随机种子

    Returns:
        List[Fixture]: 合成图像
    """
    rng = np.random.default_rng(seed)
    fixtures = []
    for k, (shape, frac, fx, fy, fg, bg, textured) in enumerate(SUITE_SPECS):
        mask = _shape_mask(shape, frac, fx, fy, height, width)
        data = _solid(height, width, bg).astype(np.float64)
        if textured:
            data += rng.normal(0.0, 6.0, size=(height, width, 1))
        data[mask] = fg
        data = np.clip(np.floor(data + 0.5), 0, 255).astype(np.uint8)
        fixtures.append(Fixture(f"obj_{k:02d}_{shape}", RgbRaster(data), mask))
    return fixtures


def write_fixture_suite(directory: str, fixtures: Optional[List[Fixture]] = None) -> Tuple[str, str]:
    """
    写出图像与真值 PNG

    Args:
        directory: 根目录，图像写入 images/，真值写入 gt/
        fixtures: 合成图像，缺省为 object_suite()

    Returns:
        Tuple[str, str]: (图像目录, 真值目录)
    """
    fixtures = object_suite() if fixtures is None else fixtures
    image_dir = os.path.join(directory, 'images')
    gt_dir = os.path.join(directory, 'gt')
    for fx in fixtures:
        save_png(fx.image.data, os.path.join(image_dir, f"{fx.name}.png"))
        if fx.mask is not None:
            save_png(np.where(fx.mask, 255, 0).astype(np.uint8), os.path.join(gt_dir, f"{fx.name}.png"))
    logger.info(f"写出合成数据 - 数量: {len(fixtures)}, 目录: {directory}")
    return image_dir, gt_dir
