from dataclasses import dataclass
from typing import Iterable, Tuple
import logging
import math
import os

import numpy as np
import scipy.sparse as sp

from ..segmentation.adjacency import BoundarySet
from ..segmentation.superpixel import SuperpixelMap

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class AffinityGraph:
    """
    超像素亲和图

    W 为非负亲和矩阵（对角为 0，支撑对称），A = D^-1 W 为行归一化矩阵；
    孤立节点（度为 0）在 A 中取自环 a_ii = 1，使 A 保持行随机。
    """

    n: int
    W: sp.csr_matrix
    A: sp.csr_matrix
    degrees: np.ndarray
    boundary: BoundarySet


def _neighborhood_mask(sp_map: SuperpixelMap, neighborhood: str) -> sp.csr_matrix:
    n = sp_map.n
    if neighborhood == 'two_layer':
        mask = sp_map.adjacency_2
    elif neighborhood == 'one_layer':
        mask = sp_map.adjacency_1
    elif neighborhood == 'full':
        mask = sp.csr_matrix(np.ones((n, n), dtype=bool))
    else:
        raise ValueError(f"不支持的邻域类型: {neighborhood}")
    return sp.csr_matrix(mask, dtype=bool)


def build_affinity(sp_map: SuperpixelMap, boundary: BoundarySet, sigma_c2: float = 0.1,
                   neighborhood: str = 'two_layer', geodesic: bool = True) -> AffinityGraph:
    """
    构建亲和矩阵：邻域内或同为边界节点时 w_ij = exp(-||c_i - c_j|| / sigma_c2)

    Args:
        sp_map: 已计算邻接的超像素图
        boundary: 边界节点集合 B
        sigma_c2: 颜色相似度带宽
        neighborhood: 'two_layer'、'one_layer' 或 'full'
        geodesic: 是否连接所有边界节点对

    Returns:
        AffinityGraph: 亲和图
    """
    if not sigma_c2 > 0:
        raise ValueError(f"sigma_c2 必须 > 0: {sigma_c2}")
    if not sp_map.has_adjacency:
        raise ValueError("构建亲和矩阵前必须先计算邻接")

    n = sp_map.n
    mask = _neighborhood_mask(sp_map, neighborhood)
    if geodesic and len(boundary) > 1:
        b = boundary.as_array()
        rows = np.repeat(b, b.size)
        cols = np.tile(b, b.size)
        geo = sp.csr_matrix((np.ones(rows.size, dtype=bool), (rows, cols)), shape=(n, n))
        mask = (mask + geo).astype(bool)
    mask = mask.tolil()
    mask.setdiag(False)
    mask = mask.tocsr()
    mask.eliminate_zeros()

    coo = mask.tocoo()
    colors = sp_map.mean_unit
    dist = np.linalg.norm(colors[coo.row] - colors[coo.col], axis=1)
    weights = np.exp(-dist / sigma_c2)
    W = sp.csr_matrix((weights, (coo.row, coo.col)), shape=(n, n))
    W.sort_indices()

    degrees = np.asarray(W.sum(axis=1)).ravel()
    isolated = degrees <= 0
    inv = np.zeros(n)
    inv[~isolated] = 1.0 / degrees[~isolated]
    A = sp.diags(inv) @ W
    if isolated.any():
        logger.warning(f"存在孤立节点 - 数量: {int(isolated.sum())}，以自环保持行随机")
        A = A + sp.diags(isolated.astype(np.float64))
    A = sp.csr_matrix(A)
    A.sort_indices()

    logger.debug(f"亲和矩阵构建完成 - 节点: {n}, 非零: {W.nnz}, 邻域: {neighborhood}, 测地约束: {geodesic}")
    return AffinityGraph(n=n, W=W, A=A, degrees=degrees, boundary=boundary)


def affinity_from_weights(W: np.ndarray, boundary: Iterable[int] = ()) -> AffinityGraph:
    """
    由给定亲和矩阵构建亲和图（用于小图与测试）

    Args:
        W: (N, N) 非负亲和矩阵
        boundary: 边界节点

    Returns:
        AffinityGraph: 亲和图
    """
    W = np.array(W, dtype=np.float64)
    if W.ndim != 2 or W.shape[0] != W.shape[1]:
        raise ValueError(f"亲和矩阵必须为方阵: {W.shape}")
    if (W < 0).any() or not np.isfinite(W).all():
        raise ValueError("亲和矩阵必须为有限非负数")
    np.fill_diagonal(W, 0.0)
    n = W.shape[0]
    degrees = W.sum(axis=1)
    A = np.zeros_like(W)
    connected = degrees > 0
    A[connected] = W[connected] / degrees[connected, None]
    idx = np.flatnonzero(~connected)
    A[idx, idx] = 1.0
    ids = tuple(sorted(int(i) for i in boundary))
    return AffinityGraph(n=n, W=sp.csr_matrix(W), A=sp.csr_matrix(A),
                         degrees=degrees, boundary=BoundarySet(ids=ids))


def select_boundary_labels(boundary: BoundarySet, sp_map: SuperpixelMap,
                           drop_frac: float = 0.3) -> Tuple[int, ...]:
    """
    选择边界标签：按与其他边界节点的平均 LAB 距离降序，去掉最显著的 floor(drop_frac·|B|) 个

    Args:
        boundary: 边界节点集合 B
        sp_map: 超像素图
        drop_frac: 去除比例，属于 [0, 1)

    Returns:
        Tuple[int, ...]: 选中的边界标签 B'（升序）
    """
    if not 0 <= drop_frac < 1:
        raise ValueError(f"drop_frac 必须属于 [0, 1): {drop_frac}")
    if len(boundary) < 2:
        raise ValueError(f"边界节点数必须 >= 2: {len(boundary)}")

    ids = boundary.as_array()
    colors = sp_map.mean_unit[ids]
    pairwise = np.linalg.norm(colors[:, None, :] - colors[None, :, :], axis=2)
    distinct = pairwise.sum(axis=1) / (ids.size - 1)

    n_drop = math.floor(drop_frac * ids.size + 1e-9)
    # 先按距离降序，距离相同时按编号升序
    order = np.lexsort((ids, -distinct))
    dropped = set(int(i) for i in ids[order[:n_drop]])
    kept = tuple(int(i) for i in ids if int(i) not in dropped)
    logger.debug(f"边界标签选择 - 边界节点: {ids.size}, 去除: {n_drop}, 保留: {len(kept)}")
    return kept


def save_triplets(matrix: sp.spmatrix, path: str) -> str:
    """
    以 (i, j, value) 三元组文本写出稀疏矩阵

    Args:
        matrix: 稀疏矩阵
        path: 输出路径

    Returns:
        str: 输出路径
    """
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    coo = sp.coo_matrix(matrix)
    order = np.lexsort((coo.col, coo.row))
    with open(path, 'w', encoding='utf-8') as f:
        for k in order:
            f.write(f"{coo.row[k]} {coo.col[k]} {float(coo.data[k])!r}\n")
    return path
