from dataclasses import dataclass
import logging

import numpy as np

from ..imaging.image_io import LabRaster, save_png, to_uint8
from ..segmentation.superpixel import SuperpixelMap

logger = logging.getLogger(__name__)

# 每批处理的像素行数，限制 (像素数 x 邻域大小) 的中间数组
ROW_CHUNK = 64


@dataclass(frozen=True)
class PixelSaliencyMap:
    """像素级显著图，raster 取值 [0, 1]，provenance 标明来源的区域图"""

    raster: np.ndarray
    provenance: str = 'inner'

    def __post_init__(self):
        if self.raster.ndim != 2:
            raise ValueError(f"显著图必须为二维: {self.raster.shape}")

    @property
    def height(self) -> int:
        return int(self.raster.shape[0])

    @property
    def width(self) -> int:
        return int(self.raster.shape[1])


def _neighborhood_table(sp_map: SuperpixelMap) -> np.ndarray:
    """(N, K) 表：第 i 行为区域 i 自身及其直接邻居，不足处填 -1"""
    groups = [[r.id] + sorted(r.neighbors_1) for r in sp_map.regions]
    width = max(len(g) for g in groups)
    table = np.full((sp_map.n, width), -1, dtype=np.int64)
    for i, g in enumerate(groups):
        table[i, :len(g)] = g
    return table


# 值域跨度不超过该相对量时视为常数图（仅有舍入误差）
CONST_REL_TOL = 1e-9


def _final_normalize(S: np.ndarray) -> np.ndarray:
    lo, hi = S.min(), S.max()
    if hi - lo <= CONST_REL_TOL * max(1.0, abs(hi)):
        return S
    return (S - lo) / (hi - lo)


def pixel_coherence(S_reg: np.ndarray, sp_map: SuperpixelMap, lab: LabRaster,
                    k1: float = 0.2, k2: float = 0.01, normalize: bool = True,
                    provenance: str = 'inner') -> PixelSaliencyMap:
    """
    区域显著性上采样为像素显著性

    像素 p 的值为其所在区域及直接邻居区域显著性的加权平均，
    权重 exp(-(k1·颜色距离 + k2·到区域质心的空间距离))，
    颜色距离使用原生 LAB 单位，空间距离使用像素单位。

    Args:
        S_reg: (N,) 区域显著性，取值 [0, 1]
        sp_map: 已计算邻接的超像素图
        lab: LAB 图像
        k1: 颜色权重系数
        k2: 空间权重系数
        normalize: 是否做最终最小-最大归一化（常数图保持不变）
        provenance: 来源标记

    Returns:
        PixelSaliencyMap: 像素显著图
    """
    S_reg = np.asarray(S_reg, dtype=np.float64)
    if S_reg.shape != (sp_map.n,):
        raise ValueError(f"区域显著性长度与区域数不一致: {S_reg.shape} vs {sp_map.n}")
    if S_reg.size and (S_reg.min() < 0 or S_reg.max() > 1):
        raise ValueError("区域显著性取值必须属于 [0, 1]")
    if k1 < 0 or k2 < 0:
        raise ValueError(f"k1、k2 必须 >= 0: {k1}, {k2}")
    if not sp_map.has_adjacency:
        raise ValueError("像素一致性计算前必须先计算邻接")
    if lab.data.shape[:2] != sp_map.labels.shape:
        raise ValueError(f"LAB 图像与超像素图尺寸不一致: {lab.data.shape[:2]} vs {sp_map.labels.shape}")

    table = _neighborhood_table(sp_map)
    region_lab = sp_map.mean_lab
    centroids = sp_map.centroids
    height, width = sp_map.labels.shape
    out = np.empty((height, width))
    xs = np.arange(width, dtype=np.float64)

    for y0 in range(0, height, ROW_CHUNK):
        y1 = min(height, y0 + ROW_CHUNK)
        own = sp_map.labels[y0:y1].ravel()
        group = table[own]
        valid = group >= 0
        safe = np.where(valid, group, 0)

        pix_lab = lab.data[y0:y1].reshape(-1, 3)
        color = np.linalg.norm(pix_lab[:, None, :] - region_lab[safe], axis=2)
        px = np.tile(xs, y1 - y0)
        py = np.repeat(np.arange(y0, y1, dtype=np.float64), width)
        dx = px[:, None] - centroids[safe, 0]
        dy = py[:, None] - centroids[safe, 1]
        space = np.hypot(dx, dy)

        weights = np.where(valid, np.exp(-(k1 * color + k2 * space)), 0.0)
        total = weights.sum(axis=1)
        values = (weights * S_reg[safe]).sum(axis=1)
        # 权重全部下溢时退回所在区域的取值
        fallback = total <= 0
        total[fallback] = 1.0
        values[fallback] = S_reg[own[fallback]]
        out[y0:y1] = (values / total).reshape(y1 - y0, width)

    out = np.clip(out, 0.0, 1.0)
    if normalize:
        out = _final_normalize(out)
    logger.debug(f"像素一致性完成 - 尺寸: {width}x{height}, 来源: {provenance}")
    return PixelSaliencyMap(raster=out, provenance=provenance)


def render(S: PixelSaliencyMap, path: str) -> str:
    """
    写出 8 位灰度 PNG，像素值为 round(255·S(p))（四舍五入）

    Args:
        S: 像素显著图
        path: 输出路径

    Returns:
        str: 输出路径
    """
    return save_png(to_uint8(S.raster), path)
