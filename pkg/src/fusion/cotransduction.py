from collections import deque
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Set, Tuple
import logging
import os

import numpy as np
import pandas as pd

from ..graph.propagation import (
    MatrixLike, PropagationConfig, as_matrix, background_to_saliency, normalize,
    validate_labels, windowed_variance,
)
from .compactness import compactness

logger = logging.getLogger(__name__)


@dataclass
class CoTransductionState:
    """联合传播状态"""

    boundary_labels: Set[int]
    object_labels: Set[int]
    V_B: np.ndarray
    V_O: np.ndarray
    p1: int
    p2: int
    alpha: float = 1.0
    beta: float = 1.0
    t: int = 0
    check_B: float = float('inf')
    check_O: float = float('inf')
    converged: bool = False
    last_update_B: Optional[np.ndarray] = None
    last_update_O: Optional[np.ndarray] = None
    trace: List[Dict] = field(default_factory=list)


def fuse(V_B: np.ndarray, V_O: np.ndarray, alpha: float = 1.0, beta: float = 1.0):
    """
    融合两路相似度：S^B = 1 - normalize(V^B)，S^O = normalize(V^O)，
    S^C = normalize(alpha·S^B + beta·S^O)

    Returns:
        Tuple[np.ndarray, np.ndarray, np.ndarray]: (S^B, S^O, S^C)
    """
    S_B = background_to_saliency(V_B)
    S_O = normalize(V_O)
    return S_B, S_O, normalize(alpha * S_B + beta * S_O)


def _prepare_sets(boundary_labels: Iterable[int], object_labels: Iterable[int],
                  n: int, p1: int, p2: int) -> Tuple[Set[int], Set[int]]:
    if p1 < 1:
        raise ValueError(f"p1 必须 >= 1: {p1}")
    if p2 < p1:
        raise ValueError(f"p2 必须 >= p1: {p2}")
    O = set(validate_labels(object_labels, n))
    B = set(validate_labels(boundary_labels, n)) - O
    if not B:
        raise ValueError("去除与目标性标签冲突的节点后，边界标签为空")
    return B, O


def _bottom(values: np.ndarray, candidates: np.ndarray, count: int) -> np.ndarray:
    """候选节点中取值最小的 count 个，取值相同按编号升序"""
    order = np.lexsort((candidates, values[candidates]))
    return candidates[order[:count]]


def _switch(V_B: np.ndarray, V_O: np.ndarray, B: Set[int], O: Set[int],
            p1: int, p2: int) -> Tuple[np.ndarray, np.ndarray]:
    """标签互换：V^B 最低的 p1 个加入 O，V^O 最低的 p2 个加入 B'，同时被提名者只加入 O"""
    n = V_B.size
    labeled = np.zeros(n, dtype=bool)
    labeled[list(B)] = True
    labeled[list(O)] = True
    candidates = np.flatnonzero(~labeled)
    if candidates.size == 0:
        return candidates, candidates
    L_B = _bottom(V_B, candidates, p1)
    L_O = _bottom(V_O, candidates, p2)
    L_O = L_O[~np.isin(L_O, L_B)]
    return L_B, L_O


class CoTransducer:
    """
    联合传播：边界标签与目标性标签两路递推交替进行，
    每次迭代以一路排序结果为另一路补充标签
    """

    def __init__(self, A: MatrixLike, boundary_labels: Iterable[int],
                 object_labels: Iterable[int], cfg: Optional[PropagationConfig] = None,
                 p1: int = 2, p2: int = 150, alpha: float = 1.0, beta: float = 1.0,
                 trace: bool = False):
        """
        Args:
            A: 行归一化矩阵或亲和图
            boundary_labels: 边界标签 B'
            object_labels: 目标性标签 O
            cfg: 停止条件
            p1: 每次迭代由边界一路提名给 O 的节点数
            p2: 每次迭代由目标性一路提名给 B' 的节点数
            alpha: S^B 权重
            beta: S^O 权重
            trace: 是否记录每次迭代的统计
        """
        self.A = as_matrix(A)
        self.cfg = cfg or PropagationConfig()
        n = self.A.shape[0]
        B, O = _prepare_sets(boundary_labels, object_labels, n, p1, p2)
        V_B = np.zeros(n)
        V_O = np.zeros(n)
        V_B[list(B)] = 1.0
        V_O[list(O)] = 1.0
        self.trace = trace
        self.state = CoTransductionState(boundary_labels=B, object_labels=O, V_B=V_B, V_O=V_O,
                                         p1=p1, p2=p2, alpha=alpha, beta=beta)
        self.history_B = deque([V_B.copy()], maxlen=self.cfg.const + 1)
        self.history_O = deque([V_O.copy()], maxlen=self.cfg.const + 1)

    def step(self) -> CoTransductionState:
        """执行一次迭代：两路更新、收敛检查、标签互换"""
        st = self.state
        b_idx = np.fromiter(st.boundary_labels, dtype=np.int64)
        o_idx = np.fromiter(st.object_labels, dtype=np.int64)

        V_B = self.A @ st.V_B
        V_O = self.A @ st.V_O
        V_B[b_idx] = 1.0
        V_O[o_idx] = 1.0
        st.t += 1
        st.last_update_B = V_B.copy()
        st.last_update_O = V_O.copy()

        self.history_B.append(V_B.copy())
        self.history_O.append(V_O.copy())
        if len(self.history_B) == self.history_B.maxlen:
            st.check_B = windowed_variance(self.history_B)
            st.check_O = windowed_variance(self.history_O)
            st.converged = st.check_B < self.cfg.thres and st.check_O < self.cfg.thres

        L_B, L_O = _switch(V_B, V_O, st.boundary_labels, st.object_labels, st.p1, st.p2)
        st.object_labels.update(int(i) for i in L_B)
        st.boundary_labels.update(int(i) for i in L_O)
        V_O[L_B] = 1.0
        V_B[L_O] = 1.0
        st.V_B = V_B
        st.V_O = V_O

        if self.trace:
            _, _, S_C = fuse(V_B, V_O, st.alpha, st.beta)
            st.trace.append({
                't': st.t,
                'n_boundary': len(st.boundary_labels),
                'n_object': len(st.object_labels),
                'check_B': st.check_B,
                'check_O': st.check_O,
                'compactness': compactness(S_C).value,
            })
        return st

    def run(self) -> CoTransductionState:
        """迭代直至两路窗口方差均低于阈值或达到最大迭代次数"""
        while not self.state.converged and self.state.t < self.cfg.max_iters:
            self.step()
        st = self.state
        if not st.converged:
            logger.warning(f"联合传播未在 {self.cfg.max_iters} 次迭代内收敛")
        logger.debug(f"联合传播结束 - 迭代: {st.t}, |B'|: {len(st.boundary_labels)}, |O|: {len(st.object_labels)}")
        return st

    def saliency(self) -> np.ndarray:
        """当前状态的融合区域显著性 S^C"""
        return fuse(self.state.V_B, self.state.V_O, self.state.alpha, self.state.beta)[2]


def cotransduct(A: MatrixLike, boundary_labels: Iterable[int], object_labels: Iterable[int],
                cfg: Optional[PropagationConfig] = None, p1: int = 2, p2: int = 150,
                alpha: float = 1.0, beta: float = 1.0,
                trace: bool = False) -> Tuple[np.ndarray, CoTransductionState]:
    """
    边界与目标性标签的联合传播

    Args:
        A: 行归一化矩阵或亲和图
        boundary_labels: 边界标签 B'
        object_labels: 目标性标签 O
        cfg: 停止条件
        p1: 边界一路提名数
        p2: 目标性一路提名数
        alpha: S^B 权重
        beta: S^O 权重
        trace: 是否记录统计

    Returns:
        Tuple[np.ndarray, CoTransductionState]: (区域显著性 S^C, 最终状态)
    """
    transducer = CoTransducer(A, boundary_labels, object_labels, cfg, p1, p2, alpha, beta, trace)
    transducer.run()
    return transducer.saliency(), transducer.state


def cotransduct_oracle(A: MatrixLike, boundary_labels: Iterable[int],
                       object_labels: Iterable[int], iters: int, p1: int = 2,
                       p2: int = 150) -> Tuple[np.ndarray, np.ndarray, Set[int], Set[int]]:
    """
    稠密参考实现：固定步数执行同一联合递推（朴素循环）

    Returns:
        Tuple: (V^B, V^O, B', O)
    """
    dense = as_matrix(A).toarray()
    n = dense.shape[0]
    B, O = _prepare_sets(boundary_labels, object_labels, n, p1, p2)
    V_B = np.zeros(n)
    V_O = np.zeros(n)
    for i in B:
        V_B[i] = 1.0
    for i in O:
        V_O[i] = 1.0
    for _ in range(iters):
        new_B = np.array([float(np.dot(dense[i], V_B)) for i in range(n)])
        new_O = np.array([float(np.dot(dense[i], V_O)) for i in range(n)])
        for i in B:
            new_B[i] = 1.0
        for i in O:
            new_O[i] = 1.0
        free = [i for i in range(n) if i not in B and i not in O]
        by_B = sorted(free, key=lambda i: (new_B[i], i))[:p1]
        by_O = [i for i in sorted(free, key=lambda i: (new_O[i], i))[:p2] if i not in by_B]
        for i in by_B:
            O.add(i)
            new_O[i] = 1.0
        for i in by_O:
            B.add(i)
            new_B[i] = 1.0
        V_B, V_O = new_B, new_O
    return V_B, V_O, B, O


def save_trace(trace: List[Dict], path: str) -> str:
    """
    以 CSV 写出联合传播每次迭代的统计

    Args:
        trace: 统计记录
        path: 输出路径

    Returns:
        str: 输出路径
    """
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    pd.DataFrame(trace, columns=['t', 'n_boundary', 'n_object', 'check_B', 'check_O',
                                 'compactness']).to_csv(path, index=False)
    return path
