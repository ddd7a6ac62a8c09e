from dataclasses import dataclass, fields, replace
from typing import Any, Dict, List, Optional, Tuple
import logging
import math
import os

import yaml

logger = logging.getLogger(__name__)

SMOOTHERS = ('l0', 'none')
NEIGHBORHOODS = ('two_layer', 'one_layer', 'full')
ROUTE_MODES = ('gated', 'inner', 'inter', 'objectness')
GATE_ORIENTATIONS = ('high', 'low')


@dataclass(frozen=True)
class PipelineConfig:
    """流水线配置，所有可调参数及默认值"""

    sigma_c2: float = 0.1
    drop_frac: float = 0.3
    n_target: int = 200
    slic_compactness: float = 20.0
    l0_lambda: float = 0.02
    l0_kappa: float = 2.0
    thres: float = 1e-4
    const: int = 49
    max_iters: int = 2000
    M: int = 1000
    gamma1: float = 0.8
    gamma2: float = 1.6
    p1: int = 2
    p2: int = 150
    alpha: float = 1.0
    beta: float = 1.0
    k_adaptive: float = 1.5
    beta2: float = 0.3
    k1: float = 0.2
    k2: float = 0.01
    seed: int = 7
    smoother: str = 'l0'
    neighborhood: str = 'two_layer'
    geodesic: bool = True
    route_mode: str = 'gated'
    gate_orientation: str = 'high'
    resize_max: int = 0
    ms_scales: Tuple[int, ...] = (16, 32, 64)
    edge_top_frac: float = 0.1
    trace: bool = False

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        """验证各参数是否在取值范围内，错误信息包含参数名"""
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, float) and not math.isfinite(value):
                raise ValueError(f"配置项 {f.name} 必须为有限数值: {value}")

        checks = [
            ('sigma_c2', self.sigma_c2 > 0, '> 0'),
            ('drop_frac', 0 <= self.drop_frac < 1, '属于 [0, 1)'),
            ('n_target', self.n_target >= 4, '>= 4'),
            ('slic_compactness', self.slic_compactness > 0, '> 0'),
            ('l0_lambda', self.l0_lambda >= 0, '>= 0'),
            ('l0_kappa', self.l0_kappa > 1, '> 1'),
            ('thres', self.thres > 0, '> 0'),
            ('const', self.const >= 1, '>= 1'),
            ('max_iters', self.max_iters > self.const, '> const'),
            ('M', self.M >= 1, '>= 1'),
            ('gamma1', 0 <= self.gamma1 <= 1, '属于 [0, 1]'),
            ('gamma2', self.gamma2 >= 0, '>= 0'),
            ('p1', self.p1 >= 1, '>= 1'),
            ('p2', self.p2 >= self.p1, '>= p1'),
            ('alpha', self.alpha >= 0, '>= 0'),
            ('beta', self.beta >= 0, '>= 0'),
            ('k_adaptive', self.k_adaptive > 0, '> 0'),
            ('beta2', self.beta2 > 0, '> 0'),
            ('k1', self.k1 >= 0, '>= 0'),
            ('k2', self.k2 >= 0, '>= 0'),
            ('seed', self.seed >= 0, '>= 0'),
            ('smoother', self.smoother in SMOOTHERS, f'属于 {SMOOTHERS}'),
            ('neighborhood', self.neighborhood in NEIGHBORHOODS, f'属于 {NEIGHBORHOODS}'),
            ('route_mode', self.route_mode in ROUTE_MODES, f'属于 {ROUTE_MODES}'),
            ('gate_orientation', self.gate_orientation in GATE_ORIENTATIONS,
             f'属于 {GATE_ORIENTATIONS}'),
            ('resize_max', self.resize_max >= 0, '>= 0'),
            ('ms_scales', len(self.ms_scales) > 0 and all(s >= 4 for s in self.ms_scales),
             '非空且每个尺度 >= 4'),
            ('edge_top_frac', 0 < self.edge_top_frac <= 1, '属于 (0, 1]'),
        ]
        for key, ok, rule in checks:
            if not ok:
                raise ValueError(f"配置项 {key} 超出取值范围: {getattr(self, key)!r}，要求 {rule}")
        if self.alpha + self.beta <= 0:
            raise ValueError("配置项 alpha 与 beta 不能同时为 0")

    def to_dict(self) -> Dict[str, Any]:
        """
        转换为字典

        Returns:
            Dict[str, Any]: 配置字典
        """
        result = {}
        for f in fields(self):
            value = getattr(self, f.name)
            result[f.name] = list(value) if isinstance(value, tuple) else value
        return result

    def to_text(self) -> str:
        """
        以 key=value 文本回显配置

        Returns:
            str: 配置文本，可被 parse_config 原样读回
        """
        return '\n'.join(f"{name}={_format_value(value)}"
                         for name, value in self.to_dict().items()) + '\n'

    def with_overrides(self, overrides: Dict[str, Any]) -> 'PipelineConfig':
        """
        以覆盖项生成新配置

        Args:
            overrides: 覆盖项，值可以是字符串或已转换的值

        Returns:
            PipelineConfig: 新配置
        """
        converted = {key: _convert_value(key, value) for key, value in overrides.items()}
        return replace(self, **converted)


FIELD_TYPES = {f.name: f.type for f in fields(PipelineConfig)}


def _format_value(value: Any) -> str:
    if isinstance(value, bool):
        return 'true' if value else 'false'
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (list, tuple)):
        return ','.join(str(v) for v in value)
    return str(value)


def _convert_value(key: str, raw: Any) -> Any:
    """将原始值转换为字段类型，失败时抛出包含参数名的 ValueError"""
    if key not in FIELD_TYPES:
        raise ValueError(f"未知配置项: {key}")
    default = getattr(PipelineConfig(), key)
    try:
        if isinstance(default, bool):
            if isinstance(raw, bool):
                return raw
            text = str(raw).strip().lower()
            if text in ('true', '1', 'yes', 'on'):
                return True
            if text in ('false', '0', 'no', 'off'):
                return False
            raise ValueError(text)
        if isinstance(default, int):
            if isinstance(raw, float) and not raw.is_integer():
                raise ValueError(raw)
            return int(str(raw).strip()) if isinstance(raw, str) else int(raw)
        if isinstance(default, float):
            return float(raw)
        if isinstance(default, tuple):
            if isinstance(raw, (list, tuple)):
                return tuple(int(v) for v in raw)
            return tuple(int(v) for v in str(raw).split(',') if v.strip())
        return str(raw).strip()
    except (TypeError, ValueError):
        raise ValueError(f"配置项 {key} 的取值无法解析: {raw!r}") from None


def _read_key_value_text(text: str) -> Dict[str, str]:
    """解析 key=value 文本，忽略空行与 # 注释"""
    values: Dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split('#', 1)[0].strip()
        if not line:
            continue
        if '=' not in line:
            raise ValueError(f"配置第 {lineno} 行格式错误，应为 key=value: {line}")
        key, value = line.split('=', 1)
        values[key.strip()] = value.strip()
    return values


def _read_config_file(path: str) -> Dict[str, Any]:
    if not os.path.exists(path):
        raise FileNotFoundError(f"配置文件不存在: {path}")
    with open(path, 'r', encoding='utf-8') as f:
        text = f.read()
    if path.endswith(('.yaml', '.yml')):
        data = yaml.safe_load(text) or {}
        if not isinstance(data, dict):
            raise ValueError(f"YAML 配置必须为映射: {path}")
        if 'pipeline' in data and isinstance(data['pipeline'], dict):
            data = data['pipeline']
        return data
    return _read_key_value_text(text)


def parse_config(path: Optional[str] = None,
                 overrides: Optional[Dict[str, Any]] = None,
                 base: Optional[Dict[str, Any]] = None) -> PipelineConfig:
    """
    解析配置：默认值 < 系统配置 pipeline 段 < 配置文件 < 命令行覆盖项

    Args:
        path: key=value 文本或 YAML 配置文件路径
        overrides: 命令行覆盖项
        base: 系统配置中的 pipeline 段

    Returns:
        PipelineConfig: 已验证的配置
    """
    values: Dict[str, Any] = dict(base or {})
    if path:
        values.update(_read_config_file(path))
        logger.info(f"加载流水线配置: {path}")
    if overrides:
        values.update(overrides)
    for key in values:
        if key not in FIELD_TYPES:
            raise ValueError(f"未知配置项: {key}")
    return PipelineConfig().with_overrides(values)


def parse_override_flags(flags: List[str]) -> Dict[str, str]:
    """
    解析命令行 --set key=value 覆盖项

    Args:
        flags: 形如 key=value 的字符串列表

    Returns:
        Dict[str, str]: 覆盖项
    """
    overrides: Dict[str, str] = {}
    for flag in flags or []:
        if '=' not in flag:
            raise ValueError(f"覆盖项格式错误，应为 key=value: {flag}")
        key, value = flag.split('=', 1)
        overrides[key.strip()] = value.strip()
    return overrides


def parse_grid_flags(flags: List[str]) -> Dict[str, List[Any]]:
    """
    解析参数网格 key=v1,v2,...，值按字段类型转换

    Args:
        flags: 网格字符串列表

    Returns:
        Dict[str, List[Any]]: 参数网格
    """
    grid: Dict[str, List[Any]] = {}
    for key, raw in parse_override_flags(flags).items():
        if FIELD_TYPES.get(key) == Tuple[int, ...]:
            # 尺度列表本身以逗号分隔，网格取值之间用分号
            values = [v for v in raw.split(';') if v.strip()]
        else:
            values = [v for v in raw.split(',') if v.strip()]
        if not values:
            raise ValueError(f"参数网格 {key} 没有取值")
        grid[key] = [_convert_value(key, v) for v in values]
    return grid


def save_config(config: PipelineConfig, path: str) -> None:
    """
    保存配置为 key=value 文本

    Args:
        config: 流水线配置
        path: 保存路径
    """
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, 'w', encoding='utf-8') as f:
        f.write(config.to_text())
    logger.info(f"保存流水线配置: {path}")


def load_settings(path: str = os.path.join('config', 'config.yaml')) -> Dict[str, Any]:
    """
    加载系统设置（日志、输出、批处理）

    Args:
        path: 系统配置文件路径

    Returns:
        Dict[str, Any]: 系统设置，文件不存在时返回空字典
    """
    if not os.path.exists(path):
        logger.warning(f"系统配置文件不存在: {path}")
        return {}
    with open(path, 'r', encoding='utf-8') as f:
        return yaml.safe_load(f) or {}
