from typing import Dict, Optional, Sequence
import json
import logging
import os

import numpy as np
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure
from skimage.segmentation import mark_boundaries

from ..graph.affinity import AffinityGraph, save_triplets
from ..imaging.image_io import RgbRaster, save_png, to_uint8
from ..objectness.windows import WindowScore, save_windows
from ..segmentation.superpixel import SuperpixelMap


def regional_to_pixels(S_reg: np.ndarray, sp_map: SuperpixelMap) -> np.ndarray:
    """区域值铺回像素网格"""
    return np.asarray(S_reg, dtype=np.float64)[sp_map.labels]


class StageDumper:
    """中间结果导出器，所有文件写入 out_dir"""

    def __init__(self, out_dir: str):
        """
        初始化导出器

        Args:
            out_dir: 输出目录（按图像区分）
        """
        self.out_dir = out_dir
        self.paths: Dict[str, str] = {}
        self.logger = logging.getLogger(__name__)
        os.makedirs(out_dir, exist_ok=True)

    def _path(self, key: str, filename: str) -> str:
        path = os.path.join(self.out_dir, filename)
        self.paths[key] = path
        return path

    def smoothed(self, img: RgbRaster) -> None:
        save_png(img.data, self._path('smoothed', 'smoothed.png'))

    def superpixels(self, img: RgbRaster, sp_map: SuperpixelMap) -> None:
        """边界叠加图、16 位区域编号图与区域统计 JSON"""
        overlay = mark_boundaries(img.as_float(), sp_map.labels, color=(1.0, 0.0, 0.0))
        save_png(to_uint8(overlay), self._path('boundaries', 'superpixels.png'))
        if sp_map.n > np.iinfo(np.uint16).max:
            self.logger.warning(f"区域数超出 16 位范围，跳过编号图: {sp_map.n}")
        else:
            save_png(sp_map.labels.astype(np.uint16), self._path('region_ids', 'region_ids.png'))
        stats = [{
            'id': r.id,
            'mean_lab': [float(v) for v in r.mean_lab],
            'centroid': [r.centroid[0], r.centroid[1]],
            'pixel_count': r.pixel_count,
            'neighbors': sorted(r.neighbors_1),
        } for r in sp_map.regions]
        with open(self._path('region_stats', 'regions.json'), 'w', encoding='utf-8') as f:
            json.dump(stats, f, indent=2)

    def affinity(self, graph: AffinityGraph) -> None:
        save_triplets(graph.W, self._path('W', 'W.txt'))
        save_triplets(graph.A, self._path('A', 'A.txt'))

    def regional_map(self, key: str, S_reg: np.ndarray, sp_map: SuperpixelMap) -> None:
        save_png(to_uint8(regional_to_pixels(S_reg, sp_map)), self._path(key, f"{key}.png"))

    def objectness(self, pixel: np.ndarray, windows: Sequence[WindowScore]) -> None:
        peak = float(pixel.max()) if pixel.size else 0.0
        scaled = pixel / peak if peak > 0 else np.zeros_like(pixel)
        save_png(to_uint8(scaled), self._path('objectness', 'objectness.png'))
        save_windows(windows, self._path('windows', 'windows.csv'))

    def final(self, raster: np.ndarray) -> None:
        save_png(to_uint8(raster), self._path('final', 'final.png'))

    def montage(self, img: RgbRaster, regional: np.ndarray, coherent: np.ndarray,
                title: Optional[str] = None) -> None:
        """
        输入 | 区域图 | 像素图 三联图

        Args:
            img: 输入图像
            regional: 铺回像素的区域显著图
            coherent: 最终像素显著图
            title: 标题
        """
        try:
            fig = Figure(figsize=(12, 4))
            FigureCanvasAgg(fig)
            panels = [(img.data, 'input', None), (regional, 'regional', 'gray'),
                      (coherent, 'coherent', 'gray')]
            for k, (data, label, cmap) in enumerate(panels, start=1):
                ax = fig.add_subplot(1, 3, k)
                ax.imshow(data, cmap=cmap, vmin=0, vmax=1 if cmap else None)
                ax.set_title(label)
                ax.axis('off')
            if title:
                fig.suptitle(title)
            fig.tight_layout()
            fig.savefig(self._path('montage', 'montage.png'))
        except Exception as e:
            self.logger.error(f"绘制三联图异常: {str(e)}")
