import logging
import os

import pytest

from src.utils.exceptions import PipelineStageError
from src.utils.logger import Logger


pytestmark = pytest.mark.usefixtures('restore_logging')


@pytest.fixture
def log(tmp_path):
    return Logger.from_settings({'dir': str(tmp_path / 'logs'), 'level': 'info'})


def test_from_settings_creates_log_file(tmp_path, log):
    assert os.path.dirname(log.log_file) == str(tmp_path / 'logs')
    assert os.path.basename(log.log_file).startswith('lps_')
    assert os.path.isfile(log.log_file)
    assert logging.getLogger().level == logging.INFO


def test_unknown_level_rejected(tmp_path):
    with pytest.raises(ValueError, match='不支持的日志级别: LOUD'):
        Logger.from_settings({'dir': str(tmp_path), 'level': 'loud'})


def test_route_and_metrics_messages(log, caplog):
    record = {'image_id': 'blob', 'route': 'inter', 'compactness': 1.75, 'n_object_labels': 4,
              'timings': {'segment': 0.5}}
    with caplog.at_level(logging.INFO, logger='lps'):
        log.log_route(record)
        log.log_metrics('suite', {'f_measure': 0.91, 'overlap': 0.8, 'mae': 0.05})
        log.log_stage('blob', 'inner', 0.25)
    assert '路由决策 - 图像: blob, 路由: inter, 紧凑度: 1.7500, 目标标签数: 4' in caplog.text
    assert 'F值: 0.9100' in caplog.text and 'MAE: 0.0500' in caplog.text
    assert '阶段: inner, 耗时: 0.250s' in caplog.text
    assert '阶段: segment, 耗时: 0.500s' in caplog.text


def test_log_error_includes_stage(log, caplog):
    error = PipelineStageError('superpixels', 'img01', ValueError('n_target 必须 >= 4'))
    with caplog.at_level(logging.ERROR, logger='lps'):
        try:
            raise error
        except PipelineStageError as e:
            log.log_error(e, '处理图像 img01')
    assert '上下文: 处理图像 img01' in caplog.text
    assert 'superpixels' in caplog.text
    assert error.cause.args[0] == 'n_target 必须 >= 4'


def test_set_level(log):
    log.set_level(logging.WARNING)
    assert logging.getLogger('lps').level == logging.WARNING
    assert logging.getLogger().level == logging.WARNING
