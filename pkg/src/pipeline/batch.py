from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple
import json
import logging
import multiprocessing
import os

import numpy as np

from ..config.pipeline_config import PipelineConfig, save_config
from ..evaluation.evaluator import IMAGE_EXTENSIONS, RUN_RECORDS_FILE
from .detector import STAGES, RunRecord, SaliencyDetector

logger = logging.getLogger(__name__)

FAILURES_FILE = 'failures.json'
CONFIG_FILE = 'config.txt'
# 耗时单独存放，run_records.json 只含确定性字段
TIMINGS_FILE = 'run_timings.json'


@dataclass
class BatchResult:
    """批处理结果"""

    records: List[RunRecord]
    summary: Dict[str, Any]
    failures: List[Dict[str, str]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures


def list_images(image_dir: str) -> List[str]:
    """
    列出目录中的图像文件（按文件名排序）

    Args:
        image_dir: 图像目录

    Returns:
        List[str]: 图像路径
    """
    if not os.path.isdir(image_dir):
        raise FileNotFoundError(f"目录不存在: {image_dir}")
    return [os.path.join(image_dir, name) for name in sorted(os.listdir(image_dir))
            if os.path.splitext(name)[1].lower() in IMAGE_EXTENSIONS]


def _process(job: Tuple[str, PipelineConfig, str, bool]) -> Tuple[str, Any]:
    """单幅图像任务，返回 ('ok', RunRecord) 或 ('error', 失败信息)"""
    image_path, config, output_dir, dump_stages = job
    try:
        _, record = SaliencyDetector(config, output_dir, dump_stages).run(image_path)
        return 'ok', record
    except Exception as e:
        stage = getattr(e, 'stage', 'unknown')
        logging.getLogger(__name__).error(f"图像处理异常 - 图像: {image_path}, 阶段: {stage}, 错误: {str(e)}")
        return 'error', {'image': os.path.basename(image_path), 'stage': stage, 'error': str(e)}


def write_run_records(output_dir: str, records: List[RunRecord]) -> Tuple[str, str]:
    """
    写出运行记录（不含耗时）与各阶段耗时两个文件

    Args:
        output_dir: 输出目录
        records: 运行记录

    Returns:
        Tuple[str, str]: (运行记录路径, 耗时路径)
    """
    records_path = os.path.join(output_dir, RUN_RECORDS_FILE)
    timings_path = os.path.join(output_dir, TIMINGS_FILE)
    with open(records_path, 'w', encoding='utf-8') as f:
        json.dump([r.to_dict(with_timings=False) for r in records], f, indent=2, ensure_ascii=False)
    with open(timings_path, 'w', encoding='utf-8') as f:
        json.dump([r.timing_row() for r in records], f, indent=2, ensure_ascii=False)
    return records_path, timings_path


def summarize(records: List[RunRecord], n_failures: int = 0) -> Dict[str, Any]:
    """
    汇总运行记录：联合传播占比与各阶段平均耗时

    Args:
        records: 运行记录
        n_failures: 失败数

    Returns:
        Dict[str, Any]: 汇总
    """
    n = len(records)
    summary: Dict[str, Any] = {
        'n_images': n,
        'n_failures': n_failures,
        'inter_fraction': (sum(r.route == 'inter' for r in records) / n) if n else 0.0,
    }
    if n:
        summary['mean_seconds'] = {
            stage: float(np.mean([r.timings.get(stage, 0.0) for r in records])) for stage in STAGES
        }
        summary['mean_total_seconds'] = float(np.mean([r.total_seconds for r in records]))
    return summary


def run_batch(image_dir: str, output_dir: str, config: Optional[PipelineConfig] = None,
              workers: int = 1, dump_stages: bool = False) -> BatchResult:
    """
    批量处理目录中的图像；多进程仅在图像之间并行，输出与进程数无关

    Args:
        image_dir: 输入目录
        output_dir: 输出目录
        config: 流水线配置
        workers: 进程数
        dump_stages: 是否导出中间结果

    Returns:
        BatchResult: 批处理结果
    """
    config = config or PipelineConfig()
    if workers < 1:
        raise ValueError(f"workers 必须 >= 1: {workers}")
    images = list_images(image_dir)
    if not images:
        raise ValueError(f"输入目录中没有图像: {image_dir}")
    os.makedirs(output_dir, exist_ok=True)
    save_config(config, os.path.join(output_dir, CONFIG_FILE))

    jobs = [(path, config, output_dir, dump_stages) for path in images]
    logger.info(f"开始批处理 - 图像: {len(jobs)}, 进程数: {workers}")
    if workers == 1:
        outcomes = [_process(job) for job in jobs]
    else:
        with multiprocessing.Pool(min(workers, len(jobs))) as pool:
            outcomes = pool.map(_process, jobs)

    records = sorted((r for status, r in outcomes if status == 'ok'), key=lambda r: r.image_id)
    failures = [info for status, info in outcomes if status == 'error']

    write_run_records(output_dir, records)
    failures_path = os.path.join(output_dir, FAILURES_FILE)
    if failures:
        with open(failures_path, 'w', encoding='utf-8') as f:
            json.dump(failures, f, indent=2, ensure_ascii=False)
    elif os.path.exists(failures_path):
        os.remove(failures_path)

    summary = summarize(records, len(failures))
    logger.info(
        f"批处理完成 - 成功: {summary['n_images']}, 失败: {summary['n_failures']}, "
        f"联合传播占比: {summary['inter_fraction']:.2%}"
    )
    return BatchResult(records=records, summary=summary, failures=failures)
