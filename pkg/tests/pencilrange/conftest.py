from unittest.mock import patch

import numpy as np
import pytest

from pencilrange import matkernel


@pytest.fixture(autouse=True)
def metrics_tmp_dir(tmp_path):
    """Write metrics to tmpdir instead of cwd during unittests"""
    with patch(
        "pencilrange.utils.metrics.get_default_filename",
        new=lambda: tmp_path,
    ):
        yield


@pytest.fixture(autouse=True)
def default_backend():
    """Leave no process-wide backend behind"""
    yield
    matkernel.set_default_backend(None)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
