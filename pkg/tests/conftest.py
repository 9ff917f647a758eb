import numpy as np
import pytest

from edgeclust import kernels


@pytest.fixture(params=kernels.available_backends())
def backend(request):
    with kernels.using(request.param):
        yield request.param


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_undirected(rng, n, p):
    """Erdős–Rényi G(n, p) edge arrays with src < dst."""
    iu, ju = np.triu_indices(n, k=1)
    keep = rng.random(len(iu)) < p
    return iu[keep], ju[keep]


# acceptance results, one line per criterion, shown after the run
ACCEPTANCE = {}


def record(number, ok, detail):
    line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE[number] = line
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[n])
