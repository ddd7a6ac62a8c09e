from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Sequence, Tuple, Union
import logging
import os

import numpy as np
import pandas as pd
import scipy.sparse as sp

from .affinity import AffinityGraph

logger = logging.getLogger(__name__)

MatrixLike = Union[AffinityGraph, sp.spmatrix, np.ndarray]


@dataclass(frozen=True)
class PropagationConfig:
    """传播停止条件：窗口方差阈值、窗口长度与最大迭代次数"""

    thres: float = 1e-4
    const: int = 49
    max_iters: int = 2000

    def __post_init__(self):
        if not self.thres > 0:
            raise ValueError(f"thres 必须 > 0: {self.thres}")
        if self.const < 1:
            raise ValueError(f"const 必须 >= 1: {self.const}")
        if self.max_iters <= self.const:
            raise ValueError(f"max_iters 必须 > const: {self.max_iters}")


@dataclass
class LabelState:
    """标签集合与相似度向量 V"""

    labels: Tuple[int, ...]
    V: np.ndarray
    t: int = 0
    converged: bool = False
    check: float = float('inf')
    trajectory: List[np.ndarray] = field(default_factory=list)


def as_matrix(A: MatrixLike) -> sp.csr_matrix:
    """取出行归一化矩阵"""
    if isinstance(A, AffinityGraph):
        return A.A
    return sp.csr_matrix(A)


def validate_labels(labels: Iterable[int], n: int) -> Tuple[int, ...]:
    """
    检查标签集合非空且编号合法

    Args:
        labels: 标签节点
        n: 节点数

    Returns:
        Tuple[int, ...]: 去重升序的标签
    """
    ids = tuple(sorted(set(int(i) for i in labels)))
    if not ids:
        raise ValueError("标签集合不能为空")
    if ids[0] < 0 or ids[-1] >= n:
        raise ValueError(f"标签编号超出范围 [0, {n}): {ids}")
    return ids


def windowed_variance(history: Sequence[np.ndarray]) -> float:
    """窗口内各节点的总体方差，再对节点取平均"""
    return float(np.var(np.stack(history), axis=0).mean())


class LabelPropagator:
    """
    标签钳制的迭代传播：未标注节点 V_{t+1}(i) = sum_j a_ij V_t(j)，标注节点每步钳制为 1
    """

    def __init__(self, A: MatrixLike, labels: Iterable[int],
                 cfg: Optional[PropagationConfig] = None, trace: bool = False):
        """
        Args:
            A: 行归一化矩阵或亲和图
            labels: 标签节点
            cfg: 停止条件
            trace: 是否记录 V 的轨迹
        """
        self.A = as_matrix(A)
        self.cfg = cfg or PropagationConfig()
        n = self.A.shape[0]
        self.labels = validate_labels(labels, n)
        self.label_index = np.asarray(self.labels, dtype=np.int64)
        self.trace = trace
        self.state = self._initial_state(n)
        self.history = deque([self.state.V.copy()], maxlen=self.cfg.const + 1)

    def _initial_state(self, n: int) -> LabelState:
        V = np.zeros(n)
        V[self.label_index] = 1.0
        state = LabelState(labels=self.labels, V=V)
        if self.trace:
            state.trajectory.append(V.copy())
        return state

    def step(self) -> LabelState:
        """执行一次迭代并更新收敛检查"""
        V = self.A @ self.state.V
        V[self.label_index] = 1.0
        self.state.V = V
        self.state.t += 1
        self.history.append(V.copy())
        if self.trace:
            self.state.trajectory.append(V.copy())
        if len(self.history) == self.history.maxlen:
            self.state.check = windowed_variance(self.history)
            self.state.converged = self.state.check < self.cfg.thres
        return self.state

    def run(self) -> LabelState:
        """迭代直至窗口方差低于阈值或达到最大迭代次数"""
        while not self.state.converged and self.state.t < self.cfg.max_iters:
            self.step()
        if not self.state.converged:
            logger.warning(f"传播未在 {self.cfg.max_iters} 次迭代内收敛 - 窗口方差: {self.state.check:.3e}")
        logger.debug(f"传播结束 - 标签数: {len(self.labels)}, 迭代: {self.state.t}, 窗口方差: {self.state.check:.3e}")
        return self.state


def propagate(A: MatrixLike, labels: Iterable[int],
              cfg: Optional[PropagationConfig] = None, trace: bool = False) -> LabelState:
    """
    内部标签传播（边界标签的迭代扩散）

    Args:
        A: 行归一化矩阵或亲和图
        labels: 标签节点
        cfg: 停止条件
        trace: 是否记录轨迹

    Returns:
        LabelState: 收敛（或截断）时的状态
    """
    return LabelPropagator(A, labels, cfg, trace).run()


def propagate_oracle(A: MatrixLike, labels: Iterable[int], iters: int) -> np.ndarray:
    """
    稠密参考实现：以朴素矩阵乘法执行固定步数的同一递推

    Args:
        A: 行归一化矩阵
        labels: 标签节点
        iters: 迭代步数

    Returns:
        np.ndarray: 第 iters 步的 V
    """
    dense = as_matrix(A).toarray()
    n = dense.shape[0]
    ids = list(validate_labels(labels, n))
    V = np.zeros(n)
    V[ids] = 1.0
    for _ in range(iters):
        nxt = np.zeros(n)
        for i in range(n):
            nxt[i] = float(np.dot(dense[i], V))
        nxt[ids] = 1.0
        V = nxt
    return V


def normalize(V: np.ndarray) -> np.ndarray:
    """最小-最大归一化到 [0, 1]，常数向量归一化为全 0"""
    V = np.asarray(V, dtype=np.float64)
    lo, hi = V.min(), V.max()
    if hi - lo <= 0:
        return np.zeros_like(V)
    return (V - lo) / (hi - lo)


def background_to_saliency(V: np.ndarray) -> np.ndarray:
    """
    背景相似度转区域显著性 S^B = 1 - normalize(V)，常数 V 对应全 0 显著性

    Args:
        V: 相似度向量

    Returns:
        np.ndarray: 区域显著性
    """
    V = np.asarray(V, dtype=np.float64)
    if V.size == 0 or V.max() - V.min() <= 0:
        return np.zeros_like(V)
    return 1.0 - normalize(V)


def save_trajectory(trajectory: Sequence[np.ndarray], path: str) -> str:
    """
    以 CSV 写出 V 轨迹（每行一次迭代，每列一个节点）

    Args:
        trajectory: 各次迭代的 V
        path: 输出路径

    Returns:
        str: 输出路径
    """
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    frame = pd.DataFrame(np.stack(trajectory),
                         columns=[f"node_{i}" for i in range(len(trajectory[0]))])
    frame.index.name = 't'
    frame.to_csv(path)
    return path
