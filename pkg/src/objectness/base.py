from abc import ABC, abstractmethod
from typing import Dict, Optional
import numpy as np

from ..imaging.image_io import LabRaster, RgbRaster


class BaseCue(ABC):
    """窗口线索基类"""

    name = 'base'

    def __init__(self, config: Optional[Dict] = None):
        """
        初始化线索

        Args:
            config: 配置信息
        """
        self.config = dict(config or {})
        self._validate_config()
        self.width = 0
        self.height = 0

    @abstractmethod
    def _validate_config(self) -> None:
        """验证配置信息"""
        pass

    @abstractmethod
    def prepare(self, img: RgbRaster, lab: LabRaster) -> None:
        """
        预计算整幅图像上的中间量

        Args:
            img: RGB 图像
            lab: LAB 图像
        """
        pass

    @abstractmethod
    def score(self, windows: np.ndarray) -> np.ndarray:
        """
        计算窗口的原始线索分数

        Args:
            windows: (K, 4) 窗口数组，列为 x0, y0, x1, y1（含端点）

        Returns:
            np.ndarray: (K,) 原始分数
        """
        pass

    def _validate_windows(self, windows: np.ndarray) -> np.ndarray:
        """
        验证窗口数组

        Args:
            windows: 窗口数组
        """
        windows = np.asarray(windows, dtype=np.int64).reshape(-1, 4)
        x0, y0, x1, y1 = windows.T
        if ((x0 < 0) | (y0 < 0) | (x1 >= self.width) | (y1 >= self.height)
                | (x0 > x1) | (y0 > y1)).any():
            raise ValueError("窗口超出图像范围或坐标无效")
        return windows

    @staticmethod
    def _standardize(values: np.ndarray) -> np.ndarray:
        """
        在样本上做 min-max 标准化

        Args:
            values: 输入分数

        Returns:
            np.ndarray: 标准化后的分数，常数输入返回全 0
        """
        values = np.asarray(values, dtype=np.float64)
        if values.size == 0:
            return values
        span = values.max() - values.min()
        if span <= 0:
            return np.zeros_like(values)
        return (values - values.min()) / span

    @staticmethod
    def integral(image: np.ndarray) -> np.ndarray:
        """带零填充的积分图，ii[y+1, x+1] 为 [0..y, 0..x] 的和"""
        ii = np.zeros((image.shape[0] + 1, image.shape[1] + 1), dtype=np.float64)
        ii[1:, 1:] = np.cumsum(np.cumsum(image, axis=0, dtype=np.float64), axis=1)
        return ii

    @staticmethod
    def window_sums(ii: np.ndarray, x0, y0, x1, y1) -> np.ndarray:
        """由积分图求闭区间窗口和"""
        return ii[y1 + 1, x1 + 1] - ii[y0, x1 + 1] - ii[y1 + 1, x0] + ii[y0, x0]
