from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple
import logging

import numpy as np

from ..graph.propagation import normalize
from ..imaging.image_io import LabRaster, RgbRaster
from ..segmentation.superpixel import SuperpixelMap
from .cues import ColorContrastCue, EdgeDensityCue, SpectralResidualCue
from .windows import WindowScore, sample_windows

logger = logging.getLogger(__name__)


@dataclass
class ObjectnessMaps:
    """像素级与区域级目标性"""

    pixel: np.ndarray
    regional: np.ndarray
    windows: List[WindowScore] = field(default_factory=list)

    @property
    def normalized(self) -> np.ndarray:
        """区域目标性的 [0, 1] 归一化视图"""
        return normalize(self.regional)


def pixel_objectness(scores: Sequence[WindowScore], width: int, height: int) -> np.ndarray:
    """
    像素级目标性：各窗口 P_m 乘以以窗口中心为均值的高斯核后求和，
    sigma_x = 0.25·W，sigma_y = 0.25·H

    Args:
        scores: 窗口分数
        width: 图像宽度 W
        height: 图像高度 H

    Returns:
        np.ndarray: (H, W) 目标性图
    """
    if not scores:
        return np.zeros((height, width))
    sigma_x = 0.25 * width
    sigma_y = 0.25 * height
    centers = np.array([s.window.center for s in scores], dtype=np.float64)
    p = np.array([s.p for s in scores], dtype=np.float64)
    xs = np.arange(width, dtype=np.float64)
    ys = np.arange(height, dtype=np.float64)
    # 高斯核可分离：exp(-(dx²/2σx² + dy²/2σy²)) = gx·gy
    gx = np.exp(-((xs[None, :] - centers[:, 0:1]) ** 2) / (2.0 * sigma_x ** 2))
    gy = np.exp(-((ys[None, :] - centers[:, 1:2]) ** 2) / (2.0 * sigma_y ** 2))
    return (gy.T * p[None, :]) @ gx


def region_objectness(pix: np.ndarray, sp_map: SuperpixelMap) -> np.ndarray:
    """
    区域目标性：区域内像素目标性的均值

    Args:
        pix: (H, W) 像素目标性
        sp_map: 超像素图

    Returns:
        np.ndarray: (N,) 区域目标性
    """
    if pix.shape != sp_map.labels.shape:
        raise ValueError(f"目标性图与超像素图尺寸不一致: {pix.shape} vs {sp_map.labels.shape}")
    flat = sp_map.labels.ravel()
    sums = np.bincount(flat, weights=pix.ravel(), minlength=sp_map.n)
    counts = np.bincount(flat, minlength=sp_map.n)
    return sums / counts


def select_object_labels(regional: np.ndarray, gamma1: float = 0.8) -> Tuple[int, ...]:
    """
    目标性标签：归一化区域目标性不小于 gamma1 的区域

    Args:
        regional: 区域目标性（未归一化）
        gamma1: 目标性阈值

    Returns:
        Tuple[int, ...]: 目标性标签 O（升序）
    """
    values = normalize(regional)
    return tuple(int(i) for i in np.flatnonzero(values >= gamma1))


class ObjectnessEstimator:
    """目标性估计器：窗口采样、像素累积、区域平均与阈值化"""

    def __init__(self, config: Dict):
        """
        初始化目标性估计器

        Args:
            config: 配置信息，包含：
                - M: 窗口数
                - seed: 随机种子
                - ms_scales: MS 尺度
                - edge_top_frac: ED 边缘比例
                - gamma1: 目标性阈值
        """
        self.config = config
        self._validate_config()
        self.logger = logging.getLogger(__name__)

    def _validate_config(self) -> None:
        """验证配置信息"""
        required_params = ['M', 'seed', 'ms_scales', 'edge_top_frac', 'gamma1']
        for param in required_params:
            if param not in self.config:
                raise ValueError(f"缺少必需参数: {param}")

    def estimate(self, img: RgbRaster, lab: LabRaster,
                 sp_map: SuperpixelMap) -> Tuple[ObjectnessMaps, Tuple[int, ...]]:
        """
        计算目标性图与目标性标签

        Args:
            img: RGB 图像
            lab: LAB 图像
            sp_map: 超像素图

        Returns:
            Tuple[ObjectnessMaps, Tuple[int, ...]]: (目标性图, 目标性标签 O)
        """
        cues = (SpectralResidualCue({'scales': tuple(self.config['ms_scales'])}),
                ColorContrastCue(),
                EdgeDensityCue({'edge_top_frac': self.config['edge_top_frac']}))
        for cue in cues:
            cue.prepare(img, lab)
        scores = sample_windows(img, self.config['M'], self.config['seed'], lab=lab, cues=cues)
        pixel = pixel_objectness(scores, img.width, img.height)
        regional = region_objectness(pixel, sp_map)
        labels = select_object_labels(regional, self.config['gamma1'])
        if not labels:
            self.logger.warning("目标性标签为空，跳过联合传播")
        self.logger.debug(f"目标性估计完成 - 窗口: {len(scores)}, 目标性标签: {len(labels)}")
        return ObjectnessMaps(pixel=pixel, regional=regional, windows=scores), labels
