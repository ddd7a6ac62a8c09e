import argparse
import json
import logging
import os
import sys
from typing import List, Optional

from ..config.pipeline_config import (
    PipelineConfig, load_settings, parse_config, parse_grid_flags, parse_override_flags,
    save_config,
)
from ..evaluation.evaluator import evaluate_dataset, save_report
from ..pipeline.batch import CONFIG_FILE, FAILURES_FILE, run_batch, write_run_records
from ..pipeline.detector import SaliencyDetector
from ..pipeline.sweep import TARGET_METRICS, sweep
from ..utils.logger import Logger

EXIT_OK = 0
EXIT_FAILURES = 1
EXIT_USAGE = 2

logger = logging.getLogger(__name__)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='lps', description='标签传播显著目标检测')
    parser.add_argument('--settings', default=os.path.join('config', 'config.yaml'),
                        help='系统配置文件（日志、输出、批处理）')
    sub = parser.add_subparsers(dest='command', required=True)

    run = sub.add_parser('run', help='计算显著图')
    run.add_argument('input', help='图像文件或图像目录')
    run.add_argument('-o', '--output', default=None, help='输出目录')
    run.add_argument('--config', default=None, help='流水线配置文件（key=value 或 YAML）')
    run.add_argument('--set', dest='overrides', action='append', default=[], metavar='KEY=VALUE',
                     help='覆盖配置项，可重复')
    run.add_argument('--dump-stages', action='store_true', help='导出中间结果')
    run.add_argument('--eval', dest='gt_dir', default=None, help='真值目录，运行后立即评价')
    run.add_argument('--workers', type=int, default=None, help='进程数')
    run.add_argument('--resize', type=int, default=None, help='最长边缩放到给定像素数')

    ev = sub.add_parser('eval', help='评价显著图目录')
    ev.add_argument('maps', help='显著图目录')
    ev.add_argument('gt', help='真值目录')
    ev.add_argument('-o', '--output', default=None, help='报告目录，缺省为显著图目录下的 eval/')
    ev.add_argument('--config', default=None, help='流水线配置文件（读取 k_adaptive、beta2）')
    ev.add_argument('--set', dest='overrides', action='append', default=[], metavar='KEY=VALUE')

    sw = sub.add_parser('sweep', help='参数网格扫描')
    sw.add_argument('images', help='图像目录')
    sw.add_argument('gt', help='真值目录')
    sw.add_argument('-o', '--output', default=None, help='扫描输出根目录')
    sw.add_argument('--grid', action='append', default=[], metavar='KEY=V1,V2',
                    help='参数网格，可重复')
    sw.add_argument('--target', default='f_measure', choices=sorted(TARGET_METRICS))
    sw.add_argument('--config', default=None)
    sw.add_argument('--set', dest='overrides', action='append', default=[], metavar='KEY=VALUE')
    sw.add_argument('--workers', type=int, default=None)
    return parser


def _load_config(args, settings) -> PipelineConfig:
    overrides = parse_override_flags(args.overrides)
    if getattr(args, 'resize', None) is not None:
        overrides['resize_max'] = args.resize
    return parse_config(args.config, overrides, base=settings.get('pipeline'))


def _write_single_outputs(output_dir: str, config: PipelineConfig, record) -> None:
    save_config(config, os.path.join(output_dir, CONFIG_FILE))
    write_run_records(output_dir, [record])


def _evaluate(map_dir: str, gt_dir: str, report_dir: str, config: PipelineConfig,
              log: Logger) -> None:
    report = evaluate_dataset(map_dir, gt_dir, config.k_adaptive, config.beta2, config.to_text())
    save_report(report, report_dir)
    log.log_metrics(map_dir, report.summary())


def cmd_run(args, settings, log: Logger) -> int:
    config = _load_config(args, settings)
    output_dir = args.output or settings.get('output', {}).get('dir', 'output')
    workers = args.workers or settings.get('batch', {}).get('workers', 1)
    os.makedirs(output_dir, exist_ok=True)

    if os.path.isdir(args.input):
        result = run_batch(args.input, output_dir, config, workers, args.dump_stages)
        for record in result.records:
            log.log_route(record.to_dict())
        failed = not result.ok
    else:
        try:
            _, record = SaliencyDetector(config, output_dir, args.dump_stages).run(args.input)
        except Exception as e:
            log.log_error(e, f"处理图像 {args.input}")
            with open(os.path.join(output_dir, FAILURES_FILE), 'w', encoding='utf-8') as f:
                json.dump([{'image': os.path.basename(args.input),
                            'stage': getattr(e, 'stage', 'unknown'), 'error': str(e)}],
                          f, indent=2, ensure_ascii=False)
            return EXIT_FAILURES
        _write_single_outputs(output_dir, config, record)
        log.log_route(record.to_dict())
        failed = False

    if args.gt_dir:
        _evaluate(output_dir, args.gt_dir, os.path.join(output_dir, 'eval'), config, log)
    return EXIT_FAILURES if failed else EXIT_OK


def cmd_eval(args, settings, log: Logger) -> int:
    config = _load_config(args, settings)
    report_dir = args.output or os.path.join(args.maps, 'eval')
    _evaluate(args.maps, args.gt, report_dir, config, log)
    return EXIT_OK


def cmd_sweep(args, settings, log: Logger) -> int:
    if not args.grid:
        raise ValueError("至少需要一个 --grid 参数")
    config = _load_config(args, settings)
    work_dir = args.output or os.path.join(settings.get('output', {}).get('dir', 'output'), 'sweep')
    workers = args.workers or settings.get('batch', {}).get('workers', 1)
    best, results = sweep(args.images, args.gt, work_dir, parse_grid_flags(args.grid), config,
                          args.target, workers)
    log.logger.info(f"最优参数 - {best}, {args.target}: {results.iloc[0][args.target]:.4f}")
    print(results.drop(columns=['output_dir']).to_string(index=False))
    return EXIT_OK


COMMANDS = {'run': cmd_run, 'eval': cmd_eval, 'sweep': cmd_sweep}


def main(argv: Optional[List[str]] = None) -> int:
    """
    命令行入口

    Args:
        argv: 命令行参数，缺省为 sys.argv[1:]

    Returns:
        int: 退出码，0 为全部成功
    """
    args = build_parser().parse_args(argv)
    settings = load_settings(args.settings)
    log = Logger.from_settings(settings.get('logging', {}))
    try:
        return COMMANDS[args.command](args, settings, log)
    except (ValueError, FileNotFoundError) as e:
        log.log_error(e, f"命令 {args.command}")
        return EXIT_USAGE


if __name__ == '__main__':
    sys.exit(main())
