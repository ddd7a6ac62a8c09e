from dataclasses import dataclass
from typing import FrozenSet, List, Optional, Tuple
import logging
import math

import numpy as np
import scipy.sparse as sp
from skimage.measure import label as label_components
from skimage.segmentation import slic

from ..imaging.image_io import LabRaster, lab_to_unit

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Region:
    """超像素区域统计"""

    id: int
    mean_lab: np.ndarray
    mean_unit: np.ndarray
    centroid: Tuple[float, float]
    pixel_count: int
    neighbors_1: FrozenSet[int] = frozenset()
    neighbors_2: FrozenSet[int] = frozenset()


@dataclass(frozen=True)
class SuperpixelMap:
    """
    超像素分割结果

    labels 为 (H, W) 的区域编号（0..N-1 连续），regions 与编号一一对应。
    adjacency_1 / adjacency_2 为 compute_adjacency 之后填充的对称布尔稀疏矩阵。
    """

    labels: np.ndarray
    regions: List[Region]
    adjacency_1: Optional[sp.csr_matrix] = None
    adjacency_2: Optional[sp.csr_matrix] = None

    @property
    def n(self) -> int:
        return len(self.regions)

    @property
    def height(self) -> int:
        return int(self.labels.shape[0])

    @property
    def width(self) -> int:
        return int(self.labels.shape[1])

    @property
    def mean_lab(self) -> np.ndarray:
        """(N, 3) 原生 LAB 均值"""
        return np.array([r.mean_lab for r in self.regions]).reshape(-1, 3)

    @property
    def mean_unit(self) -> np.ndarray:
        """(N, 3) 单位化 LAB 均值"""
        return np.array([r.mean_unit for r in self.regions]).reshape(-1, 3)

    @property
    def centroids(self) -> np.ndarray:
        """(N, 2) 质心 (x, y)"""
        return np.array([r.centroid for r in self.regions], dtype=np.float64).reshape(-1, 2)

    @property
    def pixel_counts(self) -> np.ndarray:
        return np.array([r.pixel_count for r in self.regions], dtype=np.int64)

    @property
    def has_adjacency(self) -> bool:
        return self.adjacency_1 is not None

    @classmethod
    def from_labels(cls, labels: np.ndarray, lab: LabRaster) -> 'SuperpixelMap':
        """
        由任意整数标签图构建超像素图，标签重编号为 0..N-1（按原编号升序）

        Args:
            labels: (H, W) 整数标签
            lab: 对应的 LAB 图像

        Returns:
            SuperpixelMap: 含区域统计、未计算邻接
        """
        labels = np.asarray(labels)
        if labels.shape != lab.data.shape[:2]:
            raise ValueError(f"标签图与图像尺寸不一致: {labels.shape} vs {lab.data.shape[:2]}")
        _, dense = np.unique(labels, return_inverse=True)
        dense = dense.reshape(labels.shape).astype(np.int64)
        n = int(dense.max()) + 1

        flat = dense.ravel()
        counts = np.bincount(flat, minlength=n)
        lab_flat = lab.data.reshape(-1, 3)
        sums = np.stack([np.bincount(flat, weights=lab_flat[:, c], minlength=n)
                         for c in range(3)], axis=1)
        means = sums / counts[:, None]
        ys, xs = np.indices(dense.shape)
        cx = np.bincount(flat, weights=xs.ravel(), minlength=n) / counts
        cy = np.bincount(flat, weights=ys.ravel(), minlength=n) / counts
        units = lab_to_unit(means)

        regions = [
            Region(id=i, mean_lab=means[i], mean_unit=units[i],
                   centroid=(float(cx[i]), float(cy[i])), pixel_count=int(counts[i]))
            for i in range(n)
        ]
        return cls(labels=dense, regions=regions)


def enforce_connectivity(labels: np.ndarray) -> np.ndarray:
    """
    保证每个区域 4 连通：每个标签保留最大连通块，其余孤立块并入
    相邻像素数最多的已稳定区域（按区域当前像素数取最大，编号小者优先）

    Args:
        labels: (H, W) 整数标签

    Returns:
        np.ndarray: 修正后的标签（编号未压缩）
    """
    labels = np.asarray(labels, dtype=np.int64).copy()
    components = label_components(labels, background=-1, connectivity=1)
    comp_flat = components.ravel()
    label_flat = labels.ravel()
    n_comp = int(components.max())
    comp_size = np.bincount(comp_flat, minlength=n_comp + 1)
    comp_label = np.full(n_comp + 1, -1, dtype=np.int64)
    comp_label[comp_flat] = label_flat

    keeper = {}
    for c in range(1, n_comp + 1):
        lbl = comp_label[c]
        best = keeper.get(lbl)
        if best is None or comp_size[c] > comp_size[best]:
            keeper[lbl] = c
    keep_ids = np.zeros(n_comp + 1, dtype=bool)
    keep_ids[list(keeper.values())] = True
    settled = keep_ids[components]
    orphans = [c for c in range(1, n_comp + 1) if not keep_ids[c]]
    if not orphans:
        return labels

    height, width = labels.shape
    while orphans:
        pending = []
        counts = np.bincount(labels.ravel())
        for c in orphans:
            mask = components == c
            ring = np.zeros_like(mask)
            ring[1:, :] |= mask[:-1, :]
            ring[:-1, :] |= mask[1:, :]
            ring[:, 1:] |= mask[:, :-1]
            ring[:, :-1] |= mask[:, 1:]
            ring &= settled & ~mask
            candidates = np.unique(labels[ring])
            if candidates.size == 0:
                pending.append(c)
                continue
            # 并入像素数最多的相邻区域
            target = int(candidates[np.argmax(counts[candidates])])
            labels[mask] = target
            settled |= mask
            counts = np.bincount(labels.ravel())
        if len(pending) == len(orphans):
            raise RuntimeError("孤立超像素块无法合并")
        orphans = pending
    logger.debug(f"连通性修正 - 尺寸: {width}x{height}, 合并孤立块完成")
    return labels


def slic_segment(img: LabRaster, n_target: int = 200, compactness: float = 20.0,
                 max_num_iter: int = 10) -> SuperpixelMap:
    """
    SLIC 超像素分割：网格初始化的 (L,a,b,x,y) k-means，随后修正连通性

    Args:
        img: LAB 图像（原生取值）
        n_target: 期望区域数
        compactness: 空间权重（相对原生 LAB 颜色距离）
        max_num_iter: k-means 迭代次数

    Returns:
        SuperpixelMap: 区域统计已计算、邻接未计算
    """
    if n_target < 4:
        raise ValueError(f"n_target 必须 >= 4: {n_target}")
    if compactness <= 0:
        raise ValueError(f"compactness 必须 > 0: {compactness}")
    step = math.sqrt(img.height * img.width / n_target)
    if img.height < step or img.width < step:
        raise ValueError(
            f"图像尺寸 {img.width}x{img.height} 小于种子网格间距 {step:.1f}")

    # slic 会把输入整体拉伸到 [0, 1]；这里先行拉伸并同比缩小 compactness，
    # 使颜色项仍以原生 LAB 单位与空间项比较
    span = float(np.ptp(img.data)) or 1.0
    unit = (img.data - img.data.min()) / span
    raw = slic(unit, n_segments=n_target, compactness=compactness / span,
               max_num_iter=max_num_iter, convert2lab=False, enforce_connectivity=True,
               start_label=0, channel_axis=-1, sigma=0)
    labels = enforce_connectivity(raw)
    sp_map = SuperpixelMap.from_labels(labels, img)

    if abs(sp_map.n - n_target) > 0.3 * n_target:
        logger.warning(f"超像素数量偏离目标 - 目标: {n_target}, 实际: {sp_map.n}")
    logger.debug(f"SLIC 分割完成 - 尺寸: {img.width}x{img.height}, 区域数: {sp_map.n}")
    return sp_map
