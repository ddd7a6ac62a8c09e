import logging
import os
from datetime import datetime
from typing import Any, Dict, List, Optional

DEFAULT_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'


def _log_handlers(log_file: str) -> List[logging.Handler]:
    return [logging.FileHandler(log_file, encoding='utf-8'), logging.StreamHandler()]


class Logger:
    """
    运行日志：按天写入 lps_YYYYMMDD.log 并同时输出到终端。

    各模块仍通过 logging.getLogger(__name__) 记录，这里只负责配置根记录器
    并提供路由、指标等结构化记录。
    """

    def __init__(self, log_dir: str = 'logs', log_level: int = logging.INFO,
                 log_format: Optional[str] = None):
        """
        Args:
            log_dir: 日志目录，不存在时创建
            log_level: 根记录器级别
            log_format: 日志格式，缺省为 DEFAULT_FORMAT
        """
        os.makedirs(log_dir, exist_ok=True)
        self.log_file = os.path.join(log_dir, f"lps_{datetime.now():%Y%m%d}.log")
        # force=True：同一进程内多次运行命令行时替换旧的处理器
        logging.basicConfig(level=log_level, format=log_format or DEFAULT_FORMAT,
                            handlers=_log_handlers(self.log_file), force=True)
        self.logger = logging.getLogger('lps')

    @classmethod
    def from_settings(cls, settings: Dict[str, Any]) -> 'Logger':
        """
        由 config.yaml 的 logging 段（level、dir、format）创建

        Raises:
            ValueError: 日志级别无法识别
        """
        level_name = str(settings.get('level', 'INFO')).upper()
        level = logging.getLevelName(level_name)
        if not isinstance(level, int):
            raise ValueError(f"不支持的日志级别: {level_name}")
        return cls(settings.get('dir', 'logs'), level, settings.get('format'))

    def set_level(self, level: int) -> None:
        for target in (logging.getLogger(), self.logger):
            target.setLevel(level)

    def log_stage(self, image_id: str, stage: str, seconds: float) -> None:
        self.logger.info(f"阶段完成 - 图像: {image_id}, 阶段: {stage}, 耗时: {seconds:.3f}s")

    def log_route(self, record: Dict[str, Any]) -> None:
        """
        记录单幅图像的路由决策

        Args:
            record: RunRecord.to_dict() 的结果
        """
        self.logger.info(
            f"路由决策 - 图像: {record['image_id']}, 路由: {record['route']}, "
            f"紧凑度: {record['compactness']:.4f}, 目标标签数: {record['n_object_labels']}"
        )
        for stage, seconds in record.get('timings', {}).items():
            self.log_stage(record['image_id'], stage, seconds)

    def log_metrics(self, name: str, metrics: Dict[str, float]) -> None:
        """
        记录评价指标

        Args:
            name: 图像或数据集名称
            metrics: 至少包含 f_measure、overlap、mae
        """
        self.logger.info(
            f"评价指标 - 对象: {name}, F值: {metrics['f_measure']:.4f}, "
            f"重叠率: {metrics['overlap']:.4f}, MAE: {metrics['mae']:.4f}"
        )

    def log_error(self, error: Exception, context: str = '') -> None:
        """记录异常及其堆栈，需在 except 块内调用"""
        self.logger.exception(f"错误信息 - 上下文: {context}, 错误: {error}")
