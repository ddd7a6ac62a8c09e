from contextlib import contextmanager
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, Optional, Tuple
import logging
import os
import time

from ..coherence.pixel_coherence import PixelSaliencyMap, pixel_coherence, render
from ..config.pipeline_config import PipelineConfig
from ..fusion.compactness import compactness, needs_refinement
from ..fusion.cotransduction import cotransduct, save_trace
from ..graph.affinity import build_affinity, select_boundary_labels
from ..graph.propagation import (
    PropagationConfig, background_to_saliency, normalize, propagate, save_trajectory,
)
from ..imaging.color import rgb_to_lab
from ..imaging.image_io import load_image, resize_to_max
from ..imaging.smoothing import create_smoother
from ..objectness.objectness_map import ObjectnessEstimator
from ..segmentation.adjacency import boundary_nodes, compute_adjacency
from ..segmentation.superpixel import slic_segment
from ..utils.exceptions import PipelineStageError
from ..visualization.stages import StageDumper, regional_to_pixels

STAGES = ('load', 'smooth', 'color', 'segment', 'adjacency', 'affinity', 'inner',
          'gate', 'objectness', 'inter', 'coherence', 'render')


@dataclass
class RunRecord:
    """单幅图像的运行记录"""

    image_id: str
    route: str
    route_mode: str
    compactness: float
    n_object_labels: int
    n_regions: int
    n_boundary_labels: int
    iterations_inner: int
    iterations_inter: int = 0
    timings: Dict[str, float] = field(default_factory=dict)
    outputs: Dict[str, str] = field(default_factory=dict)

    @property
    def total_seconds(self) -> float:
        return float(sum(self.timings.values()))

    def to_dict(self, with_timings: bool = True) -> Dict[str, Any]:
        """
        Args:
            with_timings: 是否包含耗时字段（timings、total_seconds）；
                不含耗时的结果在重复运行间逐字节一致
        """
        data = asdict(self)
        if with_timings:
            data['total_seconds'] = self.total_seconds
        else:
            del data['timings']
        return data

    def timing_row(self) -> Dict[str, Any]:
        return {'image_id': self.image_id, 'timings': dict(self.timings),
                'total_seconds': self.total_seconds}


class SaliencyDetector:
    """显著性检测流水线：平滑、分割、亲和图、内部传播、紧凑度门控、联合传播、像素一致性"""

    def __init__(self, config: Optional[PipelineConfig] = None,
                 output_dir: Optional[str] = None, dump_stages: bool = False):
        """
        初始化检测器

        Args:
            config: 流水线配置
            output_dir: 输出目录，None 时不写文件
            dump_stages: 是否导出中间结果
        """
        self.config = config or PipelineConfig()
        self.output_dir = output_dir
        self.dump_stages = dump_stages and output_dir is not None
        self.logger = logging.getLogger(__name__)
        self.prop_cfg = PropagationConfig(self.config.thres, self.config.const, self.config.max_iters)
        self.smoother = create_smoother(self.config.smoother, self.config.l0_lambda, self.config.l0_kappa)
        self.objectness = ObjectnessEstimator({
            'M': self.config.M,
            'seed': self.config.seed,
            'ms_scales': self.config.ms_scales,
            'edge_top_frac': self.config.edge_top_frac,
            'gamma1': self.config.gamma1,
        })

    @contextmanager
    def _stage(self, name: str, image_id: str, timings: Dict[str, float]):
        """计时并将异常归属到阶段"""
        start = time.perf_counter()
        try:
            yield
        except PipelineStageError:
            raise
        except Exception as e:
            raise PipelineStageError(name, image_id, e) from e
        finally:
            timings[name] = time.perf_counter() - start
        self.logger.debug(f"阶段完成 - 图像: {image_id}, 阶段: {name}, 耗时: {timings[name]:.3f}s")

    def _wants_inter(self, score) -> bool:
        mode = self.config.route_mode
        if mode == 'gated':
            return needs_refinement(score, self.config.gamma2, self.config.gate_orientation)
        return mode in ('inter', 'objectness')

    def run(self, image_path: str) -> Tuple[PixelSaliencyMap, RunRecord]:
        """
        处理单幅图像

        Args:
            image_path: 图像路径

        Returns:
            Tuple[PixelSaliencyMap, RunRecord]: (像素显著图, 运行记录)
        """
        cfg = self.config
        image_id = os.path.splitext(os.path.basename(image_path))[0]
        timings: Dict[str, float] = {}
        dumper = None
        if self.dump_stages:
            dumper = StageDumper(os.path.join(self.output_dir, 'stages', image_id))
        trace_dir = os.path.join(self.output_dir, 'trace') if cfg.trace and self.output_dir else None

        with self._stage('load', image_id, timings):
            img = resize_to_max(load_image(image_path), cfg.resize_max)

        with self._stage('smooth', image_id, timings):
            smoothed = self.smoother(img)
            if dumper:
                dumper.smoothed(smoothed)

        with self._stage('color', image_id, timings):
            lab = rgb_to_lab(smoothed)

        with self._stage('segment', image_id, timings):
            sp_map = slic_segment(lab, cfg.n_target, cfg.slic_compactness)

        with self._stage('adjacency', image_id, timings):
            sp_map = compute_adjacency(sp_map)
            boundary = boundary_nodes(sp_map)
            if dumper:
                dumper.superpixels(smoothed, sp_map)

        with self._stage('affinity', image_id, timings):
            graph = build_affinity(sp_map, boundary, cfg.sigma_c2, cfg.neighborhood, cfg.geodesic)
            labels_B = select_boundary_labels(boundary, sp_map, cfg.drop_frac)
            if dumper:
                dumper.affinity(graph)

        with self._stage('inner', image_id, timings):
            inner = propagate(graph, labels_B, self.prop_cfg, trace=cfg.trace)
            S_reg = background_to_saliency(inner.V)
            if trace_dir:
                save_trajectory(inner.trajectory, os.path.join(trace_dir, f"{image_id}_inner.csv"))
            if dumper:
                dumper.regional_map('inner', S_reg, sp_map)

        with self._stage('gate', image_id, timings):
            score = compactness(S_reg)
            wants_inter = self._wants_inter(score)

        route = 'inner'
        object_labels: Tuple[int, ...] = ()
        iterations_inter = 0
        if wants_inter:
            with self._stage('objectness', image_id, timings):
                maps, object_labels = self.objectness.estimate(smoothed, lab, sp_map)
                if dumper:
                    dumper.objectness(maps.pixel, maps.windows)
            if object_labels and cfg.route_mode != 'objectness' and set(labels_B) <= set(object_labels):
                self.logger.warning(f"边界标签全部被目标性标签覆盖，保留内部传播结果 - 图像: {image_id}")
                object_labels = ()

            if object_labels:
                with self._stage('inter', image_id, timings):
                    if cfg.route_mode == 'objectness':
                        state = propagate(graph, object_labels, self.prop_cfg)
                        S_reg = normalize(state.V)
                        iterations_inter = state.t
                        route = 'objectness'
                    else:
                        S_reg, co_state = cotransduct(graph, labels_B, object_labels, self.prop_cfg,
                                                      cfg.p1, cfg.p2, cfg.alpha, cfg.beta,
                                                      trace=cfg.trace)
                        iterations_inter = co_state.t
                        route = 'inter'
                        if trace_dir:
                            save_trace(co_state.trace, os.path.join(trace_dir, f"{image_id}_inter.csv"))
                    if dumper:
                        dumper.regional_map('inter', S_reg, sp_map)

        with self._stage('coherence', image_id, timings):
            saliency = pixel_coherence(S_reg, sp_map, lab, cfg.k1, cfg.k2, provenance=route)

        outputs: Dict[str, str] = {}
        with self._stage('render', image_id, timings):
            if self.output_dir is not None:
                outputs['map'] = render(saliency, os.path.join(self.output_dir, f"{image_id}.png"))
            if dumper:
                dumper.final(saliency.raster)
                dumper.montage(smoothed, regional_to_pixels(S_reg, sp_map), saliency.raster, image_id)
                outputs.update(dumper.paths)

        record = RunRecord(
            image_id=image_id,
            route=route,
            route_mode=cfg.route_mode,
            compactness=score.value,
            n_object_labels=len(object_labels),
            n_regions=sp_map.n,
            n_boundary_labels=len(labels_B),
            iterations_inner=inner.t,
            iterations_inter=iterations_inter,
            timings=timings,
            outputs=outputs,
        )
        self.logger.info(
            f"图像处理完成 - 图像: {image_id}, 路由: {route}, 紧凑度: {score.value:.4f}, "
            f"区域数: {sp_map.n}, 耗时: {record.total_seconds:.2f}s"
        )
        return saliency, record


def run_single(image_path: str, config: Optional[PipelineConfig] = None,
               output_dir: Optional[str] = None,
               dump_stages: bool = False) -> Tuple[PixelSaliencyMap, RunRecord]:
    """
    处理单幅图像

    Args:
        image_path: 图像路径
        config: 流水线配置
        output_dir: 输出目录
        dump_stages: 是否导出中间结果

    Returns:
        Tuple[PixelSaliencyMap, RunRecord]: (像素显著图, 运行记录)
    """
    return SaliencyDetector(config, output_dir, dump_stages).run(image_path)
