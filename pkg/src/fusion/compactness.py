from dataclasses import dataclass
import logging

import numpy as np

logger = logging.getLogger(__name__)

N_BINS = 10
# 三角权重 w(b) = min(b, 11 - b)，b = 1..10
TRIANGLE_WEIGHTS = np.minimum(np.arange(1, N_BINS + 1), N_BINS + 1 - np.arange(1, N_BINS + 1))


@dataclass(frozen=True)
class CompactnessScore:
    """紧凑度得分 C 与 10 桶质量直方图 h"""

    value: float
    histogram: np.ndarray


def compactness(S: np.ndarray) -> CompactnessScore:
    """
    区域显著图的紧凑度：C = sum_b w(b)·h(b)，h 为等宽 10 桶的质量分布（第 10 桶右闭）

    Args:
        S: [0, 1] 区域显著性

    Returns:
        CompactnessScore: 紧凑度
    """
    S = np.asarray(S, dtype=np.float64).ravel()
    if S.size == 0:
        raise ValueError("显著图为空，无法计算紧凑度")
    if not np.isfinite(S).all() or S.min() < 0 or S.max() > 1:
        raise ValueError("显著性取值必须属于 [0, 1]")
    bins = np.minimum(np.floor(S * N_BINS).astype(np.int64), N_BINS - 1)
    counts = np.bincount(bins, minlength=N_BINS)
    value = float(np.dot(TRIANGLE_WEIGHTS, counts)) / S.size
    return CompactnessScore(value=value, histogram=counts / S.size)


def needs_refinement(score: CompactnessScore, gamma2: float = 1.6,
                     orientation: str = 'high') -> bool:
    """
    紧凑度门控：orientation='high' 时 C >= gamma2 转入联合传播；'low' 时 C < gamma2

    Args:
        score: 紧凑度
        gamma2: 紧凑度阈值
        orientation: 门控方向

    Returns:
        bool: 是否需要联合传播
    """
    if gamma2 < 0:
        raise ValueError(f"gamma2 必须 >= 0: {gamma2}")
    if orientation == 'high':
        return score.value >= gamma2
    elif orientation == 'low':
        return score.value < gamma2
    else:
        raise ValueError(f"不支持的门控方向: {orientation}")
