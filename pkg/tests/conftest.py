import sys

import numpy as np
import pytest

from qsatsim import kernels
from qsatsim.sat import EnsembleParams, generate_instance

BACKENDS = ["numpy"] + (["numba"] if kernels.HAVE_NUMBA else [])


@pytest.fixture(params=BACKENDS)
def backend(request, monkeypatch):
    """Route every public kernel through one backend for the test."""
    idx = 0 if request.param == "numba" else 1
    for name, pair in kernels.KERNELS.items():
        monkeypatch.setattr(kernels, name, pair[idx])
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def small_instance(n=8, mu=4.25, seed=0, k=3):
    return generate_instance(EnsembleParams.from_mu(n, k, mu), seed)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
