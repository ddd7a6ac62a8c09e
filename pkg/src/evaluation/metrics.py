from typing import Tuple
import logging

import numpy as np

logger = logging.getLogger(__name__)

N_THRESHOLDS = 256


def _check_aligned(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise ValueError(f"显著图与真值尺寸不一致: {a.shape} vs {b.shape}")


def pr_curve(S: np.ndarray, gt: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    固定阈值 PR 曲线：对 τ = 0..255 以 S >= τ 二值化

    Args:
        S: [0, 255] 显著图
        gt: 二值真值（True 为显著）

    Returns:
        Tuple[np.ndarray, np.ndarray]: (precision, recall)，长度 256；预测为空时 precision 取 1
    """
    S = np.asarray(S, dtype=np.float64)
    gt = np.asarray(gt, dtype=bool)
    _check_aligned(S, gt)
    n_pos = int(gt.sum())
    if n_pos == 0:
        raise ValueError("真值不含显著像素，无法计算 PR 曲线")

    # τ 为整数，S >= τ 等价于 floor(S) >= τ
    level = np.clip(np.floor(S), 0, N_THRESHOLDS - 1).astype(np.int64).ravel()
    hist_all = np.bincount(level, minlength=N_THRESHOLDS)
    hist_pos = np.bincount(level[gt.ravel()], minlength=N_THRESHOLDS)
    predicted = np.cumsum(hist_all[::-1])[::-1]
    tp = np.cumsum(hist_pos[::-1])[::-1]

    precision = np.ones(N_THRESHOLDS)
    nonempty = predicted > 0
    precision[nonempty] = tp[nonempty] / predicted[nonempty]
    recall = tp / n_pos
    return precision, recall


def adaptive_threshold(S: np.ndarray, k: float = 1.5) -> float:
    """
    自适应阈值 T_a = k·mean(S)

    Args:
        S: 显著图
        k: 比例系数

    Returns:
        float: 阈值
    """
    S = np.asarray(S, dtype=np.float64)
    if S.size == 0:
        raise ValueError("显著图为空")
    return float(k * S.mean())


def binarize_adaptive(S: np.ndarray, k: float = 1.5) -> np.ndarray:
    """[0, 1] 显著图以 S >= min(T_a, 1) 二值化"""
    return np.asarray(S, dtype=np.float64) >= min(adaptive_threshold(S, k), 1.0)


def precision_recall(pred: np.ndarray, gt: np.ndarray) -> Tuple[float, float]:
    """
    二值预测的精确率与召回率，预测为空时精确率为 1，真值为空时召回率为 0

    Returns:
        Tuple[float, float]: (precision, recall)
    """
    pred = np.asarray(pred, dtype=bool)
    gt = np.asarray(gt, dtype=bool)
    _check_aligned(pred, gt)
    tp = int(np.count_nonzero(pred & gt))
    n_pred = int(pred.sum())
    n_pos = int(gt.sum())
    precision = tp / n_pred if n_pred else 1.0
    recall = tp / n_pos if n_pos else 0.0
    return precision, recall


def f_measure(precision, recall, beta2: float = 0.3):
    """
    F_β = (1+β²)·P·R / (β²·P + R)，P = R = 0 时为 0

    Args:
        precision: 精确率，标量或数组
        recall: 召回率，标量或数组
        beta2: β²

    Returns:
        F 值，与输入同形
    """
    P = np.asarray(precision, dtype=np.float64)
    R = np.asarray(recall, dtype=np.float64)
    denom = beta2 * P + R
    safe = np.where(denom > 0, denom, 1.0)
    F = np.where(denom > 0, (1.0 + beta2) * P * R / safe, 0.0)
    return float(F) if F.ndim == 0 else F


def max_f(precision: np.ndarray, recall: np.ndarray, beta2: float = 0.3) -> float:
    """PR 曲线上 F_β 的最大值"""
    return float(np.max(f_measure(precision, recall, beta2)))


def overlap(pred: np.ndarray, gt: np.ndarray) -> float:
    """
    交并比 |S ∩ GT| / |S ∪ GT|，并集为空时为 0

    Args:
        pred: 二值预测
        gt: 二值真值

    Returns:
        float: 重叠率
    """
    pred = np.asarray(pred, dtype=bool)
    gt = np.asarray(gt, dtype=bool)
    _check_aligned(pred, gt)
    union = int(np.count_nonzero(pred | gt))
    if union == 0:
        return 0.0
    return int(np.count_nonzero(pred & gt)) / union


def mae(S: np.ndarray, gt: np.ndarray) -> float:
    """
    平均绝对误差

    Args:
        S: [0, 1] 连续显著图
        gt: {0, 1} 真值

    Returns:
        float: MAE
    """
    S = np.asarray(S, dtype=np.float64)
    G = np.asarray(gt, dtype=np.float64)
    _check_aligned(S, G)
    return float(np.abs(S - G).mean())
