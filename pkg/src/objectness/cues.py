from typing import List, Optional, Sequence
import logging
import math

import numpy as np
from scipy.ndimage import gaussian_filter, uniform_filter
from skimage.filters import sobel
from skimage.transform import resize

from ..imaging.image_io import LabRaster, RgbRaster
from .base import BaseCue

logger = logging.getLogger(__name__)

HIST_BINS = 8
EPS = 1e-12
# 低于最大梯度该比例的 Sobel 幅值视为浮点噪声
EDGE_REL_TOL = 1e-6


def spectral_residual_map(img: RgbRaster, scales: Sequence[int] = (16, 32, 64)) -> List[np.ndarray]:
    """
    多尺度谱残差显著图

    每个尺度：灰度缩放到给定宽度，FFT，对数幅度减去其 3x3 均值（频谱按周期环绕取邻域），
    与相位重组后逆变换取模平方，高斯模糊，缩放回原尺寸并归一化。

    Args:
        img: RGB 图像
        scales: 缩放宽度列表

    Returns:
        List[np.ndarray]: 每个尺度一幅 (H, W) 的 [0, 1] 图
    """
    if len(scales) == 0:
        raise ValueError("谱残差尺度列表不能为空")
    for s in scales:
        if s > img.width:
            raise ValueError(f"谱残差尺度 {s} 大于图像宽度 {img.width}")
        if s < 1:
            raise ValueError(f"谱残差尺度必须为正: {s}")

    gray = img.gray()
    shape = (img.height, img.width)
    if np.ptp(gray) == 0:
        return [np.zeros(shape) for _ in scales]

    maps = []
    for s in scales:
        if s == img.width:
            small = gray
        else:
            h_s = max(1, int(round(s * img.height / img.width)))
            small = resize(gray, (h_s, s), order=1, anti_aliasing=True)
        spectrum = np.fft.fft2(small)
        log_amp = np.log(np.abs(spectrum) + EPS)
        residual = log_amp - uniform_filter(log_amp, size=3, mode='wrap')
        phase = np.angle(spectrum)
        sal = np.abs(np.fft.ifft2(np.exp(residual + 1j * phase))) ** 2
        sal = gaussian_filter(sal, sigma=max(1.0, s / 32.0), mode='nearest')
        if sal.shape != shape:
            sal = resize(sal, shape, order=1, anti_aliasing=False)
        maps.append(_minmax(sal))
    return maps


def _minmax(values: np.ndarray) -> np.ndarray:
    lo, hi = values.min(), values.max()
    if hi - lo <= EPS * max(1.0, abs(hi)):
        return np.zeros_like(values)
    return (values - lo) / (hi - lo)


def lab_bin_index(lab: LabRaster, bins: int = HIST_BINS) -> np.ndarray:
    """
    LAB 8x8x8 直方图的像素桶编号

    Args:
        lab: LAB 图像（原生取值）
        bins: 每通道桶数

    Returns:
        np.ndarray: (H, W) 桶编号
    """
    unit = np.empty_like(lab.data)
    unit[..., 0] = lab.data[..., 0] / 100.0
    unit[..., 1:] = (lab.data[..., 1:] + 128.0) / 256.0
    idx = np.clip(np.floor(unit * bins), 0, bins - 1).astype(np.int64)
    return idx[..., 0] * bins * bins + idx[..., 1] * bins + idx[..., 2]


def edge_raster(img: RgbRaster, top_frac: float = 0.1) -> np.ndarray:
    """
    Sobel 梯度幅值最高的 top_frac 比例像素标记为边缘；
    幅值不超过 EDGE_REL_TOL * 最大幅值的像素不算边缘（平坦区域只有浮点噪声）

    Args:
        img: RGB 图像
        top_frac: 边缘比例

    Returns:
        np.ndarray: (H, W) 布尔边缘图
    """
    magnitude = sobel(img.gray())
    strong = magnitude > EDGE_REL_TOL * magnitude.max()
    if not strong.any():
        return np.zeros(magnitude.shape, dtype=bool)
    threshold = np.quantile(magnitude, 1.0 - top_frac)
    return strong & (magnitude >= threshold)


def chi_square(p: np.ndarray, q: np.ndarray) -> float:
    """两个归一化直方图的 χ² 距离，取值 [0, 1]"""
    total = p + q
    nz = total > 0
    return float(0.5 * np.sum((p[nz] - q[nz]) ** 2 / total[nz]))


def surround_bounds(x0: int, y0: int, x1: int, y1: int, width: int, height: int):
    """窗口按轴放大 2 倍（居中）并裁剪到图像内"""
    w, h = x1 - x0 + 1, y1 - y0 + 1
    ox0 = max(0, x0 - w // 2)
    oy0 = max(0, y0 - h // 2)
    ox1 = min(width - 1, x1 + (w - w // 2))
    oy1 = min(height - 1, y1 + (h - h // 2))
    return ox0, oy0, ox1, oy1


def shrunk_bounds(x0, y0, x1, y1):
    """窗口缩小到一半面积（各边乘 1/√2，居中）"""
    w = np.asarray(x1) - np.asarray(x0) + 1
    h = np.asarray(y1) - np.asarray(y0) + 1
    sw = np.maximum(1, np.floor(w / math.sqrt(2.0)).astype(np.int64))
    sh = np.maximum(1, np.floor(h / math.sqrt(2.0)).astype(np.int64))
    ix0 = np.asarray(x0) + (w - sw) // 2
    iy0 = np.asarray(y0) + (h - sh) // 2
    return ix0, iy0, ix0 + sw - 1, iy0 + sh - 1


class SpectralResidualCue(BaseCue):
    """多尺度显著性（MS）：窗口内谱残差均值在各尺度上的最大值"""

    name = 'ms'

    def _validate_config(self) -> None:
        scales = self.config.setdefault('scales', (16, 32, 64))
        if len(scales) == 0:
            raise ValueError("缺少必需参数: scales")

    def prepare(self, img: RgbRaster, lab: Optional[LabRaster] = None) -> None:
        self.width, self.height = img.width, img.height
        scales = [s for s in self.config['scales'] if s <= img.width] or [img.width]
        self.maps = spectral_residual_map(img, scales)
        self.integrals = [self.integral(m) for m in self.maps]

    def score(self, windows: np.ndarray) -> np.ndarray:
        windows = self._validate_windows(windows)
        x0, y0, x1, y1 = windows.T
        area = (x1 - x0 + 1) * (y1 - y0 + 1)
        means = [self.window_sums(ii, x0, y0, x1, y1) / area for ii in self.integrals]
        return np.clip(np.max(means, axis=0), 0.0, 1.0)


class ColorContrastCue(BaseCue):
    """中心-环绕颜色对比（CC）：窗口与其环绕带 LAB 直方图的 χ² 距离"""

    name = 'cc'

    def _validate_config(self) -> None:
        bins = self.config.setdefault('bins', HIST_BINS)
        if bins < 1:
            raise ValueError(f"直方图桶数必须 >= 1: {bins}")

    def prepare(self, img: Optional[RgbRaster], lab: LabRaster) -> None:
        self.width, self.height = lab.width, lab.height
        self.n_bins = self.config['bins'] ** 3
        self.bin_index = lab_bin_index(lab, self.config['bins'])

    def _histogram(self, x0, y0, x1, y1) -> np.ndarray:
        patch = self.bin_index[y0:y1 + 1, x0:x1 + 1]
        return np.bincount(patch.ravel(), minlength=self.n_bins).astype(np.float64)

    def score(self, windows: np.ndarray) -> np.ndarray:
        windows = self._validate_windows(windows)
        scores = np.zeros(len(windows))
        for k, (x0, y0, x1, y1) in enumerate(windows):
            inner = self._histogram(x0, y0, x1, y1)
            outer = self._histogram(*surround_bounds(x0, y0, x1, y1, self.width, self.height))
            ring = outer - inner
            if ring.sum() <= 0:
                continue
            scores[k] = chi_square(inner / inner.sum(), ring / ring.sum())
        return scores


class EdgeDensityCue(BaseCue):
    """边缘密度（ED）：窗口与半面积内缩窗口之间环带上的边缘像素密度"""

    name = 'ed'

    def _validate_config(self) -> None:
        top_frac = self.config.setdefault('edge_top_frac', 0.1)
        if not 0 < top_frac <= 1:
            raise ValueError(f"edge_top_frac 必须属于 (0, 1]: {top_frac}")

    def prepare(self, img: RgbRaster, lab: Optional[LabRaster] = None) -> None:
        self.width, self.height = img.width, img.height
        self.set_edges(edge_raster(img, self.config['edge_top_frac']))

    def set_edges(self, edges: np.ndarray) -> None:
        """直接指定边缘图"""
        self.height, self.width = edges.shape
        self.edges = np.asarray(edges, dtype=bool)
        self.ii = self.integral(self.edges.astype(np.float64))

    def score(self, windows: np.ndarray) -> np.ndarray:
        windows = self._validate_windows(windows)
        x0, y0, x1, y1 = windows.T
        ix0, iy0, ix1, iy1 = shrunk_bounds(x0, y0, x1, y1)
        outer = self.window_sums(self.ii, x0, y0, x1, y1)
        inner = self.window_sums(self.ii, ix0, iy0, ix1, iy1)
        ring_area = (x1 - x0 + 1) * (y1 - y0 + 1) - (ix1 - ix0 + 1) * (iy1 - iy0 + 1)
        density = np.zeros(len(windows))
        positive = ring_area > 0
        density[positive] = (outer - inner)[positive] / ring_area[positive]
        return density


def _single(window) -> np.ndarray:
    return np.array([[window.x0, window.y0, window.x1, window.y1]], dtype=np.int64)


def score_ms(window, ms_maps: Sequence[np.ndarray]) -> float:
    """
    单窗口 MS 分数

    Args:
        window: 窗口
        ms_maps: spectral_residual_map 的输出

    Returns:
        float: 各尺度窗口均值的最大值
    """
    cue = SpectralResidualCue()
    cue.height, cue.width = ms_maps[0].shape
    cue.maps = list(ms_maps)
    cue.integrals = [cue.integral(m) for m in ms_maps]
    return float(cue.score(_single(window))[0])


def score_cc(window, lab: LabRaster) -> float:
    """
    单窗口 CC 分数

    Args:
        window: 窗口
        lab: LAB 图像

    Returns:
        float: 窗口与环绕带直方图的 χ² 距离，环绕带为空时为 0
    """
    cue = ColorContrastCue()
    cue.prepare(None, lab)
    return float(cue.score(_single(window))[0])


def score_ed(window, edges: np.ndarray) -> float:
    """
    单窗口 ED 原始密度（跨窗口样本的归一化在采样阶段完成）

    Args:
        window: 窗口
        edges: 布尔边缘图

    Returns:
        float: 环带边缘密度
    """
    cue = EdgeDensityCue()
    cue.set_edges(edges)
    return float(cue.score(_single(window))[0])
