from typing import Callable
import logging
import math

import numpy as np

from .image_io import RgbRaster

logger = logging.getLogger(__name__)

BETA_MAX = 1e5


def _psf2otf(psf: np.ndarray, shape: tuple) -> np.ndarray:
    """将卷积核补零并循环移位后做 FFT，得到光学传递函数"""
    padded = np.zeros(shape, dtype=np.float64)
    padded[:psf.shape[0], :psf.shape[1]] = psf
    for axis, size in enumerate(psf.shape):
        padded = np.roll(padded, -(size // 2), axis=axis)
    return np.fft.fft2(padded)


def l0_smooth(img: RgbRaster, lam: float = 0.02, kappa: float = 2.0) -> RgbRaster:
    """
    L0 梯度最小化平滑（半二次分裂求解）

    Args:
        img: RGB 图像
        lam: 平滑强度 lambda，0 时原样返回
        kappa: beta 的增长倍率，必须大于 1

    Returns:
        RgbRaster: 同尺寸的平滑结果
    """
    if not (math.isfinite(lam) and math.isfinite(kappa)):
        raise ValueError(f"L0 平滑参数必须为有限数值: lambda={lam}, kappa={kappa}")
    if lam < 0:
        raise ValueError(f"L0 平滑参数 lambda 必须 >= 0: {lam}")
    if kappa <= 1:
        raise ValueError(f"L0 平滑参数 kappa 必须 > 1: {kappa}")
    if lam == 0:
        return RgbRaster(img.data.copy())

    height, width = img.height, img.width
    S = img.as_float()

    otf_x = _psf2otf(np.array([[1.0, -1.0]]), (height, width))
    otf_y = _psf2otf(np.array([[1.0], [-1.0]]), (height, width))
    mtf = (np.abs(otf_x) ** 2 + np.abs(otf_y) ** 2)[:, :, None]
    FI = np.fft.fft2(S, axes=(0, 1))

    beta = 2.0 * lam
    iteration = 0
    while beta < BETA_MAX:
        # (h, v) 子问题：循环前向差分，能量低于 lambda/beta 的梯度置零
        h = np.roll(S, -1, axis=1) - S
        v = np.roll(S, -1, axis=0) - S
        small = (h ** 2 + v ** 2).sum(axis=2) < lam / beta
        h[small] = 0.0
        v[small] = 0.0

        # S 子问题：频域闭式解
        normin = (np.roll(h, 1, axis=1) - h) + (np.roll(v, 1, axis=0) - v)
        FS = (FI + beta * np.fft.fft2(normin, axes=(0, 1))) / (1.0 + beta * mtf)
        S = np.real(np.fft.ifft2(FS, axes=(0, 1)))

        beta *= kappa
        iteration += 1

    logger.debug(f"L0 平滑完成 - 尺寸: {width}x{height}, 迭代: {iteration}")
    out = np.clip(np.floor(S * 255.0 + 0.5), 0, 255).astype(np.uint8)
    return RgbRaster(out)


def create_smoother(name: str, lam: float = 0.02,
                    kappa: float = 2.0) -> Callable[[RgbRaster], RgbRaster]:
    """
    创建平滑器

    Args:
        name: 平滑器类型，'l0' 或 'none'
        lam: L0 平滑强度
        kappa: L0 增长倍率

    Returns:
        Callable[[RgbRaster], RgbRaster]: 平滑函数
    """
    smoother_type = name.lower()
    if smoother_type == 'l0':
        return lambda img: l0_smooth(img, lam, kappa)
    elif smoother_type == 'none':
        return lambda img: RgbRaster(img.data.copy())
    else:
        raise ValueError(f"不支持的平滑器类型: {name}")
