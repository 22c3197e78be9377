from pathlib import Path

import numpy as np
import pytest

from fixpoint import _kernels_py

ROOT = Path(__file__).resolve().parents[1]
SCENARIOS = ROOT / "scenarios"

try:
    from fixpoint import _kernels as _kernels_c
except ImportError:  # extension not built
    _kernels_c = None

BACKENDS = [pytest.param(_kernels_py, id="python")]
BACKENDS.append(
    pytest.param(_kernels_c, id="cython", marks=pytest.mark.skipif(_kernels_c is None, reason="extension not built"))
)


@pytest.fixture(params=BACKENDS)
def backend(request):
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def scenario_dir():
    return SCENARIOS
