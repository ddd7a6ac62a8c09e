from dataclasses import dataclass
import logging

import numpy as np

from ..imaging.image_io import load_gray

logger = logging.getLogger(__name__)

GT_THRESHOLD = 127


@dataclass(frozen=True)
class GroundTruth:
    """二值真值掩码（True 为显著）及来源路径"""

    mask: np.ndarray
    path: str = ''

    @property
    def shape(self):
        return self.mask.shape

    @property
    def positives(self) -> int:
        return int(np.count_nonzero(self.mask))


def binarize_ground_truth(gray: np.ndarray) -> np.ndarray:
    """灰度值 > 127 视为显著"""
    return np.asarray(gray) > GT_THRESHOLD


def load_ground_truth(path: str) -> GroundTruth:
    """
    读取真值图并二值化

    Args:
        path: 真值图路径

    Returns:
        GroundTruth: 真值
    """
    mask = binarize_ground_truth(load_gray(path))
    if not mask.any():
        logger.warning(f"真值不含显著像素: {path}")
    return GroundTruth(mask=mask, path=path)
