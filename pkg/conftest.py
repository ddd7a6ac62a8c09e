import logging
import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from src.fixtures.synthetic import (  # noqa: E402
    blob, checkerboard, object_suite, red_square_on_gray, two_color,
)


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


@pytest.fixture
def blob_fixture():
    return blob()


@pytest.fixture
def two_color_fixture():
    return two_color()


@pytest.fixture
def checkerboard_fixture():
    return checkerboard()


@pytest.fixture
def red_square_fixture():
    return red_square_on_gray()


@pytest.fixture(scope='session')
def suite_fixtures():
    return object_suite()


@pytest.fixture
def settings_file(tmp_path):
    """指向临时日志目录的系统配置"""
    path = tmp_path / 'settings.yaml'
    path.write_text(
        "logging:\n"
        f"  dir: {tmp_path / 'logs'}\n"
        "  level: WARNING\n",
        encoding='utf-8',
    )
    return str(path)


@pytest.fixture
def restore_logging():
    """命令行会重设根记录器，测试结束后恢复"""
    root = logging.getLogger()
    handlers, level = root.handlers[:], root.level
    yield
    for handler in root.handlers:
        if handler not in handlers:
            handler.close()
    root.handlers[:] = handlers
    root.setLevel(level)
    logging.getLogger('lps').setLevel(logging.NOTSET)
