import numpy as np
import pytest

from lat import _backend
from lat.model import Model, ModelConfig

BACKENDS = ["python"] + (["cython"] if _backend.NAME == "cython" else [])


@pytest.fixture(params=BACKENDS)
def backend(request):
    return request.param


@pytest.fixture
def tiny_model():
    """Small random model with weights large enough to give varied outputs."""
    cfg = ModelConfig(vocab_size=14, d_model=8, heads=2, ffn_dim=12, max_len=12, K=3, seed=3)
    m = Model(cfg)
    rng = np.random.default_rng(7)
    for v in m.params.values():
        v += rng.normal(0.0, 0.3, v.shape)
    return m


ACCEPTANCE_LINES: list[str] = []


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance: acceptance criterion check")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
