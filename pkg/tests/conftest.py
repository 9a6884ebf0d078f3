import numpy as np
import pytest

from stackppc.sampler import SamplerConfig

# small but well-mixed settings for tests that need many fits
QUICK = SamplerConfig(chains=2, warmup=300, draws=500)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def quick_config():
    return QUICK


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for num in sorted(results):
            terminalreporter.write_line(results[num])
