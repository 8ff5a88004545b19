import numpy as np
import pytest

from maxwell_ddm_nn.geometry import build_mesh, partition_two
from maxwell_ddm_nn.nedelec import BasisOrder
from maxwell_ddm_nn.system import MaterialParams

# acceptance outcomes, printed once at the end of the session
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for k in range(1, 11):
        if k in ACCEPTANCE:
            ok, detail = ACCEPTANCE[k]
            tr.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
        else:
            tr.write_line(f"criterion {k:2d}: NOT RUN")


@pytest.fixture
def record():
    def _record(k, ok, detail=""):
        ACCEPTANCE[k] = (bool(ok), detail)
        print(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}")
        return ok

    return _record


@pytest.fixture(scope="session")
def order():
    return BasisOrder()


@pytest.fixture(scope="session")
def params():
    return MaterialParams()


@pytest.fixture(scope="session")
def small_split():
    return partition_two(build_mesh(4))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
