from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple
import logging
import math
import os

import numpy as np
import pandas as pd

from ..imaging.color import rgb_to_lab
from ..imaging.image_io import LabRaster, RgbRaster
from .base import BaseCue
from .cues import ColorContrastCue, EdgeDensityCue, SpectralResidualCue

logger = logging.getLogger(__name__)

CANDIDATE_FACTOR = 10
MIN_SIDE_FRAC = 0.1


@dataclass(frozen=True)
class Window:
    """矩形窗口，x0..x1、y0..y1 含端点"""

    x0: int
    y0: int
    x1: int
    y1: int

    def __post_init__(self):
        if self.x0 < 0 or self.y0 < 0 or self.x0 > self.x1 or self.y0 > self.y1:
            raise ValueError(f"窗口坐标无效: {self}")

    @property
    def width(self) -> int:
        return self.x1 - self.x0 + 1

    @property
    def height(self) -> int:
        return self.y1 - self.y0 + 1

    @property
    def area(self) -> int:
        return self.width * self.height

    @property
    def center(self) -> Tuple[float, float]:
        return ((self.x0 + self.x1) / 2.0, (self.y0 + self.y1) / 2.0)

    def fits(self, width: int, height: int) -> bool:
        """窗口在图像内且面积不小于图像面积的 1%"""
        return (self.x1 < width and self.y1 < height
                and self.area * 100 >= width * height)


@dataclass(frozen=True)
class WindowScore:
    """窗口及其归一化线索分数与组合概率 P_m"""

    window: Window
    ms: float
    cc: float
    ed: float
    p: float


def combine_cues(ms, cc, ed):
    """
    朴素贝叶斯式独立组合：P_m = ms·cc·ed（输入为各自在样本上归一化后的分数）

    Args:
        ms: MS 分数
        cc: CC 分数
        ed: ED 分数

    Returns:
        组合概率，标量或数组
    """
    return np.multiply(np.multiply(ms, cc), ed)


def _draw_candidates(rng: np.random.Generator, width: int, height: int, count: int) -> np.ndarray:
    min_w = min(width, max(2, math.ceil(MIN_SIDE_FRAC * width)))
    min_h = min(height, max(2, math.ceil(MIN_SIDE_FRAC * height)))
    widths = rng.integers(min_w, width + 1, size=count)
    heights = rng.integers(min_h, height + 1, size=count)
    x0 = rng.integers(0, width - widths + 1)
    y0 = rng.integers(0, height - heights + 1)
    return np.stack([x0, y0, x0 + widths - 1, y0 + heights - 1], axis=1).astype(np.int64)


def _choose(rng: np.random.Generator, ms: np.ndarray, M: int) -> np.ndarray:
    """按 MS 分数成比例无放回抽取 M 个候选；正分候选不足时以零分候选均匀补足"""
    n = ms.size
    M = min(M, n)
    positive = np.flatnonzero(ms > 0)
    if positive.size == 0:
        return rng.choice(n, size=M, replace=False)
    if positive.size >= M:
        return rng.choice(n, size=M, replace=False, p=ms / ms.sum())
    zeros = np.flatnonzero(ms <= 0)
    filler = rng.choice(zeros, size=M - positive.size, replace=False)
    return np.concatenate([positive, filler])


def sample_windows(img: RgbRaster, M: int = 1000, seed: int = 7,
                   scales: Sequence[int] = (16, 32, 64), edge_top_frac: float = 0.1,
                   lab: Optional[LabRaster] = None,
                   cues: Optional[Sequence[BaseCue]] = None) -> List[WindowScore]:
    """
    采样并打分窗口：先抽取 10·M 个均匀候选（各边不小于图像边长 10%），
    按 MS 分数成比例无放回选出 M 个，再计算 CC、ED 与组合概率

    Args:
        img: RGB 图像
        M: 窗口数
        seed: 随机种子
        scales: MS 尺度
        edge_top_frac: ED 边缘比例
        lab: LAB 图像，缺省时由 img 转换
        cues: 已准备好的 (MS, CC, ED) 线索，缺省时内部创建

    Returns:
        List[WindowScore]: 按抽取顺序排列的窗口分数
    """
    if M < 1:
        raise ValueError(f"窗口数 M 必须 >= 1: {M}")
    if lab is None:
        lab = rgb_to_lab(img)
    if cues is None:
        cues = (SpectralResidualCue({'scales': tuple(scales)}),
                ColorContrastCue(),
                EdgeDensityCue({'edge_top_frac': edge_top_frac}))
        for cue in cues:
            cue.prepare(img, lab)
    ms_cue, cc_cue, ed_cue = cues

    rng = np.random.default_rng(seed)
    candidates = _draw_candidates(rng, img.width, img.height, CANDIDATE_FACTOR * M)
    ms_raw = ms_cue.score(candidates)
    if not (ms_raw > 0).any():
        logger.warning("所有候选窗口 MS 分数为 0，改为均匀采样")
    chosen = candidates[_choose(rng, ms_raw, M)]

    ms = BaseCue._standardize(ms_cue.score(chosen))
    cc = BaseCue._standardize(cc_cue.score(chosen))
    ed = BaseCue._standardize(ed_cue.score(chosen))
    p = combine_cues(ms, cc, ed)

    scores = [
        WindowScore(window=Window(*(int(v) for v in chosen[k])),
                    ms=float(ms[k]), cc=float(cc[k]), ed=float(ed[k]), p=float(p[k]))
        for k in range(len(chosen))
    ]
    logger.debug(f"窗口采样完成 - 候选: {len(candidates)}, 选中: {len(scores)}, 最大P: {p.max():.4f}")
    return scores


def save_windows(scores: Sequence[WindowScore], path: str) -> str:
    """
    以 CSV 写出窗口列表及线索分数

    Args:
        scores: 窗口分数
        path: 输出路径

    Returns:
        str: 输出路径
    """
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    frame = pd.DataFrame([
        {'x0': s.window.x0, 'y0': s.window.y0, 'x1': s.window.x1, 'y1': s.window.y1,
         'ms': s.ms, 'cc': s.cc, 'ed': s.ed, 'p': s.p}
        for s in scores
    ], columns=['x0', 'y0', 'x1', 'y1', 'ms', 'cc', 'ed', 'p'])
    frame.to_csv(path, index=False)
    return path
