from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple
import json
import logging
import os

import numpy as np
import pandas as pd

from ..imaging.image_io import load_gray
from .ground_truth import GroundTruth, load_ground_truth
from .metrics import (
    N_THRESHOLDS, adaptive_threshold, f_measure, mae, max_f, overlap, pr_curve,
    precision_recall,
)

logger = logging.getLogger(__name__)

IMAGE_EXTENSIONS = ('.png', '.jpg', '.jpeg', '.bmp', '.tif', '.tiff')
RUN_RECORDS_FILE = 'run_records.json'


@dataclass
class ImageMetrics:
    """单幅图像的评价指标"""

    image_id: str
    precision: np.ndarray
    recall: np.ndarray
    threshold: float
    adaptive_precision: float
    adaptive_recall: float
    f_measure: float
    overlap: float
    mae: float
    max_f: float
    route: Optional[str] = None

    def to_row(self, with_curve: bool = False) -> Dict[str, Any]:
        """
        Args:
            with_curve: 是否附带 256 点 PR 曲线（pr_precision、pr_recall，按阈值 0..255）
        """
        row = {
            'image_id': self.image_id,
            'route': self.route,
            'threshold': self.threshold,
            'precision': self.adaptive_precision,
            'recall': self.adaptive_recall,
            'f_measure': self.f_measure,
            'overlap': self.overlap,
            'mae': self.mae,
            'max_f': self.max_f,
        }
        if with_curve:
            row['pr_precision'] = [float(v) for v in self.precision]
            row['pr_recall'] = [float(v) for v in self.recall]
        return row


@dataclass
class MetricsReport:
    """数据集评价报告：逐图指标、均值与平均 PR 曲线"""

    per_image: List[ImageMetrics]
    beta2: float = 0.3
    failures: List[Dict[str, str]] = field(default_factory=list)
    config: Optional[str] = None

    def __post_init__(self):
        if not self.per_image:
            raise ValueError("评价报告至少需要一幅图像")

    @property
    def mean_precision(self) -> np.ndarray:
        return np.mean([m.precision for m in self.per_image], axis=0)

    @property
    def mean_recall(self) -> np.ndarray:
        return np.mean([m.recall for m in self.per_image], axis=0)

    @property
    def mean_f_curve(self) -> np.ndarray:
        return f_measure(self.mean_precision, self.mean_recall, self.beta2)

    @property
    def max_f(self) -> float:
        return float(np.max(self.mean_f_curve))

    def summary(self) -> Dict[str, Any]:
        """
        逐图指标的无权均值

        Returns:
            Dict[str, Any]: 汇总指标
        """
        frame = self.to_frame()
        summary = {
            'n_images': len(self.per_image),
            'n_failures': len(self.failures),
            'precision': float(frame['precision'].mean()),
            'recall': float(frame['recall'].mean()),
            'f_measure': float(frame['f_measure'].mean()),
            'overlap': float(frame['overlap'].mean()),
            'mae': float(frame['mae'].mean()),
            'max_f': self.max_f,
        }
        routes = frame['route'].dropna()
        if len(routes):
            summary['inter_fraction'] = float((routes == 'inter').mean())
        return summary

    def to_frame(self) -> pd.DataFrame:
        """逐图指标表"""
        return pd.DataFrame([m.to_row() for m in self.per_image])

    def pr_frame(self) -> pd.DataFrame:
        """256 行平均 PR 曲线表"""
        return pd.DataFrame({
            'threshold': np.arange(N_THRESHOLDS),
            'precision': self.mean_precision,
            'recall': self.mean_recall,
            'f_measure': self.mean_f_curve,
        })


def _index_images(directory: str) -> Dict[str, str]:
    """按不区分大小写的文件名主干建立索引"""
    if not os.path.isdir(directory):
        raise FileNotFoundError(f"目录不存在: {directory}")
    index: Dict[str, str] = {}
    for name in sorted(os.listdir(directory)):
        stem, ext = os.path.splitext(name)
        if ext.lower() not in IMAGE_EXTENSIONS:
            continue
        key = stem.lower()
        if key in index:
            logger.warning(f"文件名主干重复，忽略: {name}")
            continue
        index[key] = os.path.join(directory, name)
    return index


def pair_files(map_dir: str, gt_dir: str) -> List[Tuple[str, str, str]]:
    """
    按文件名主干（不区分大小写、忽略扩展名）配对显著图与真值

    Args:
        map_dir: 显著图目录
        gt_dir: 真值目录

    Returns:
        List[Tuple[str, str, str]]: (主干, 显著图路径, 真值路径)，按主干排序
    """
    maps = _index_images(map_dir)
    gts = _index_images(gt_dir)
    return [(key, maps[key], gts[key]) for key in sorted(set(maps) & set(gts))]


def load_routes(map_dir: str) -> Dict[str, str]:
    """读取显著图目录旁的 run_records.json，返回 {图像主干: 路由}"""
    path = os.path.join(map_dir, RUN_RECORDS_FILE)
    if not os.path.isfile(path):
        return {}
    with open(path, 'r', encoding='utf-8') as f:
        records = json.load(f)
    return {str(r['image_id']).lower(): r['route'] for r in records if 'route' in r}


class DatasetEvaluator:
    """数据集评价器"""

    def __init__(self, k_adaptive: float = 1.5, beta2: float = 0.3):
        """
        初始化数据集评价器

        Args:
            k_adaptive: 自适应阈值系数
            beta2: F 值中的 β²
        """
        self.k_adaptive = k_adaptive
        self.beta2 = beta2
        self.logger = logging.getLogger(__name__)

    def evaluate_image(self, image_id: str, S255: np.ndarray, gt: GroundTruth,
                       route: Optional[str] = None) -> ImageMetrics:
        """
        计算单幅图像的全部指标

        Args:
            image_id: 图像标识
            S255: [0, 255] 显著图（已与真值对齐）
            gt: 真值
            route: 路由标记

        Returns:
            ImageMetrics: 指标
        """
        precision, recall = pr_curve(S255, gt.mask)
        S = np.asarray(S255, dtype=np.float64) / 255.0
        threshold = adaptive_threshold(S, self.k_adaptive)
        pred = S >= min(threshold, 1.0)
        p, r = precision_recall(pred, gt.mask)
        return ImageMetrics(
            image_id=image_id,
            precision=precision,
            recall=recall,
            threshold=threshold,
            adaptive_precision=p,
            adaptive_recall=r,
            f_measure=f_measure(p, r, self.beta2),
            overlap=overlap(pred, gt.mask),
            mae=mae(S, gt.mask),
            max_f=max_f(precision, recall, self.beta2),
            route=route,
        )

    def evaluate(self, map_dir: str, gt_dir: str, config: Optional[str] = None) -> MetricsReport:
        """
        评价一个显著图目录

        Args:
            map_dir: 显著图目录
            gt_dir: 真值目录
            config: 回显的流水线配置文本

        Returns:
            MetricsReport: 评价报告
        """
        pairs = pair_files(map_dir, gt_dir)
        if not pairs:
            raise ValueError(f"no matched pairs: {map_dir} vs {gt_dir}")
        routes = load_routes(map_dir)

        results: List[ImageMetrics] = []
        failures: List[Dict[str, str]] = []
        for key, map_path, gt_path in pairs:
            try:
                gt = load_ground_truth(gt_path)
                S255 = load_gray(map_path, size=gt.shape)
                metrics = self.evaluate_image(key, S255, gt, routes.get(key))
                results.append(metrics)
                self.logger.debug(f"评价完成 - 图像: {key}, F值: {metrics.f_measure:.4f}, MAE: {metrics.mae:.4f}")
            except Exception as e:
                self.logger.error(f"评价图像异常 - 图像: {key}, 错误: {str(e)}")
                failures.append({'image_id': key, 'error': str(e)})

        if not results:
            raise ValueError(f"所有配对评价均失败: {len(failures)} 项")
        report = MetricsReport(per_image=results, beta2=self.beta2, failures=failures, config=config)
        summary = report.summary()
        self.logger.info(
            f"数据集评价完成 - 图像: {summary['n_images']}, F值: {summary['f_measure']:.4f}, "
            f"重叠率: {summary['overlap']:.4f}, MAE: {summary['mae']:.4f}, maxF: {summary['max_f']:.4f}"
        )
        return report


def evaluate_dataset(map_dir: str, gt_dir: str, k_adaptive: float = 1.5, beta2: float = 0.3,
                     config: Optional[str] = None) -> MetricsReport:
    """
    评价显著图目录

    Args:
        map_dir: 显著图目录
        gt_dir: 真值目录
        k_adaptive: 自适应阈值系数
        beta2: β²
        config: 回显的配置文本

    Returns:
        MetricsReport: 评价报告
    """
    return DatasetEvaluator(k_adaptive, beta2).evaluate(map_dir, gt_dir, config)


def save_report(report: MetricsReport, out_dir: str) -> Dict[str, str]:
    """
    写出 report.json（逐图行附带 PR 曲线）、per_image.csv 与 pr_curve.csv

    Args:
        report: 评价报告
        out_dir: 输出目录

    Returns:
        Dict[str, str]: 各文件路径
    """
    os.makedirs(out_dir, exist_ok=True)
    paths = {
        'report': os.path.join(out_dir, 'report.json'),
        'per_image': os.path.join(out_dir, 'per_image.csv'),
        'pr_curve': os.path.join(out_dir, 'pr_curve.csv'),
    }
    payload = {
        'config': report.config,
        'aggregate': report.summary(),
        'per_image': [m.to_row(with_curve=True) for m in report.per_image],
        'failures': report.failures,
    }
    with open(paths['report'], 'w', encoding='utf-8') as f:
        json.dump(payload, f, indent=2, ensure_ascii=False)
    report.to_frame().to_csv(paths['per_image'], index=False)
    report.pr_frame().to_csv(paths['pr_curve'], index=False)
    logger.info(f"保存评价报告: {out_dir}")
    return paths
