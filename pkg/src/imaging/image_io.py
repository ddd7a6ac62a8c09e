from dataclasses import dataclass
from typing import Optional
import logging
import os

import numpy as np
from PIL import Image, UnidentifiedImageError
from skimage.transform import resize

from ..utils.exceptions import ImageDecodeError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RgbRaster:
    """8 位 RGB 图像，data 形状为 (H, W, 3)，dtype 为 uint8"""

    data: np.ndarray

    def __post_init__(self):
        data = self.data
        if data.ndim != 3 or data.shape[2] != 3:
            raise ValueError(f"RGB 图像形状必须为 (H, W, 3): {data.shape}")
        if data.shape[0] <= 0 or data.shape[1] <= 0:
            raise ValueError(f"图像尺寸必须为正: {data.shape}")
        if data.dtype != np.uint8:
            raise ValueError(f"RGB 图像必须为 uint8: {data.dtype}")

    @property
    def height(self) -> int:
        return int(self.data.shape[0])

    @property
    def width(self) -> int:
        return int(self.data.shape[1])

    def as_float(self) -> np.ndarray:
        """返回 [0, 1] 浮点视图"""
        return self.data.astype(np.float64) / 255.0

    def gray(self) -> np.ndarray:
        """返回 [0, 1] 灰度图（ITU-R 601 权重）"""
        return self.as_float() @ np.array([0.299, 0.587, 0.114])


@dataclass(frozen=True)
class LabRaster:
    """CIE LAB 图像，data 为原生取值 L∈[0,100]、a,b∈[-128,127]"""

    data: np.ndarray

    def __post_init__(self):
        if self.data.ndim != 3 or self.data.shape[2] != 3:
            raise ValueError(f"LAB 图像形状必须为 (H, W, 3): {self.data.shape}")

    @property
    def height(self) -> int:
        return int(self.data.shape[0])

    @property
    def width(self) -> int:
        return int(self.data.shape[1])

    @property
    def unit(self) -> np.ndarray:
        """各通道仿射映射到 [0, 1] 的视图"""
        return lab_to_unit(self.data)


def lab_to_unit(lab: np.ndarray) -> np.ndarray:
    """
    将原生 LAB 值仿射映射到单位区间

    Args:
        lab: (..., 3) 原生 LAB 值

    Returns:
        np.ndarray: L/100, (a+128)/255, (b+128)/255
    """
    lab = np.asarray(lab, dtype=np.float64)
    offset = np.array([0.0, 128.0, 128.0])
    scale = np.array([100.0, 255.0, 255.0])
    return (lab + offset) / scale


def load_image(path: str) -> RgbRaster:
    """
    读取图像文件，灰度图提升为 RGB

    Args:
        path: 图像路径（PNG/JPEG/BMP）

    Returns:
        RgbRaster: 精确像素值
    """
    if not os.path.isfile(path):
        raise FileNotFoundError(f"file not found: {path}")
    try:
        with Image.open(path) as img:
            img.load()
            if img.mode in ('I;16', 'I;16B', 'I'):
                # 16 位灰度按高 8 位截断
                arr = np.asarray(img, dtype=np.uint32) >> 8
                arr = np.repeat(arr.astype(np.uint8)[:, :, None], 3, axis=2)
            else:
                arr = np.asarray(img.convert('RGB'), dtype=np.uint8)
    except (UnidentifiedImageError, OSError, SyntaxError) as e:
        raise ImageDecodeError(path, str(e)) from e
    logger.debug(f"读取图像 - 路径: {path}, 尺寸: {arr.shape[1]}x{arr.shape[0]}")
    return RgbRaster(np.ascontiguousarray(arr))


def resize_to_max(img: RgbRaster, max_dim: int) -> RgbRaster:
    """
    按最长边缩放图像，max_dim 为 0 或图像已足够小时原样返回

    Args:
        img: 输入图像
        max_dim: 最长边像素数

    Returns:
        RgbRaster: 缩放后的图像
    """
    longest = max(img.width, img.height)
    if max_dim <= 0 or longest <= max_dim:
        return img
    ratio = max_dim / longest
    shape = (max(1, round(img.height * ratio)), max(1, round(img.width * ratio)))
    out = resize(img.as_float(), shape, order=1, anti_aliasing=True, preserve_range=True)
    return RgbRaster(np.clip(np.floor(out * 255.0 + 0.5), 0, 255).astype(np.uint8))


def to_uint8(values: np.ndarray) -> np.ndarray:
    """[0,1] 浮点转 8 位，round(255·v) 采用四舍五入（half-up）"""
    values = np.clip(np.asarray(values, dtype=np.float64), 0.0, 1.0)
    return np.floor(values * 255.0 + 0.5).astype(np.uint8)


def save_png(array: np.ndarray, path: str) -> str:
    """
    写出 PNG，支持 uint8 灰度/RGB 与 uint16 灰度

    Args:
        array: 图像数组
        path: 输出路径

    Returns:
        str: 输出路径
    """
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    array = np.ascontiguousarray(array)
    if array.dtype == np.uint16:
        img = Image.fromarray(array, mode='I;16')
    elif array.dtype == np.uint8:
        img = Image.fromarray(array)
    else:
        raise ValueError(f"不支持的 PNG 数据类型: {array.dtype}")
    try:
        img.save(path, format='PNG')
    except OSError as e:
        raise OSError(f"无法写入文件: {path} ({e})") from e
    return path


def load_gray(path: str, size: Optional[tuple] = None) -> np.ndarray:
    """
    读取灰度图为 [0, 255] 浮点数组，可选缩放到 (H, W)

    Args:
        path: 图像路径
        size: 目标尺寸 (H, W)

    Returns:
        np.ndarray: 灰度数组
    """
    if not os.path.isfile(path):
        raise FileNotFoundError(f"file not found: {path}")
    try:
        with Image.open(path) as img:
            arr = np.asarray(img.convert('L'), dtype=np.float64)
    except (UnidentifiedImageError, OSError) as e:
        raise ImageDecodeError(path, str(e)) from e
    if size is not None and arr.shape != tuple(size):
        arr = resize(arr, size, order=1, anti_aliasing=False, preserve_range=True)
    return arr
