from dataclasses import dataclass, replace
from typing import Tuple
import logging

import numpy as np
import scipy.sparse as sp

from .superpixel import SuperpixelMap

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class BoundarySet:
    """位于图像边界的区域编号集合 B（升序）"""

    ids: Tuple[int, ...]

    def __len__(self) -> int:
        return len(self.ids)

    def __contains__(self, item: int) -> bool:
        return item in self.ids

    def as_array(self) -> np.ndarray:
        return np.asarray(self.ids, dtype=np.int64)


def _pixel_adjacency(labels: np.ndarray, n: int) -> sp.csr_matrix:
    """由 4 邻接像素对构建区域一层邻接（对称、无自环）"""
    right_a, right_b = labels[:, :-1].ravel(), labels[:, 1:].ravel()
    down_a, down_b = labels[:-1, :].ravel(), labels[1:, :].ravel()
    a = np.concatenate([right_a, down_a])
    b = np.concatenate([right_b, down_b])
    differ = a != b
    a, b = a[differ], b[differ]
    rows = np.concatenate([a, b])
    cols = np.concatenate([b, a])
    data = np.ones(rows.size, dtype=np.int64)
    adj = sp.coo_matrix((data, (rows, cols)), shape=(n, n)).tocsr()
    adj.data[:] = 1
    return adj


def compute_adjacency(sp_map: SuperpixelMap) -> SuperpixelMap:
    """
    计算一层邻接与两层邻接（邻居及邻居的邻居，排除自身）

    Args:
        sp_map: 超像素图

    Returns:
        SuperpixelMap: 填充 neighbors_1 / neighbors_2 与稀疏邻接矩阵的新对象
    """
    n = sp_map.n
    adj1 = _pixel_adjacency(sp_map.labels, n)
    adj2 = (adj1 + adj1 @ adj1).tocsr()
    adj2.setdiag(0)
    adj2.eliminate_zeros()
    adj2.data[:] = 1

    adj1 = adj1.astype(bool)
    adj2 = adj2.astype(bool)
    regions = []
    for region in sp_map.regions:
        i = region.id
        n1 = frozenset(int(j) for j in adj1.indices[adj1.indptr[i]:adj1.indptr[i + 1]])
        n2 = frozenset(int(j) for j in adj2.indices[adj2.indptr[i]:adj2.indptr[i + 1]])
        regions.append(replace(region, neighbors_1=n1, neighbors_2=n2))

    logger.debug(f"邻接计算完成 - 区域数: {n}, 一层边数: {adj1.nnz // 2}, 两层边数: {adj2.nnz // 2}")
    return replace(sp_map, regions=regions, adjacency_1=adj1, adjacency_2=adj2)


def boundary_nodes(sp_map: SuperpixelMap) -> BoundarySet:
    """
    提取拥有首行、末行、首列或末列像素的区域

    Args:
        sp_map: 超像素图

    Returns:
        BoundarySet: 边界区域集合
    """
    labels = sp_map.labels
    border = np.concatenate([labels[0, :], labels[-1, :], labels[:, 0], labels[:, -1]])
    ids = tuple(int(i) for i in np.unique(border))
    return BoundarySet(ids=ids)
