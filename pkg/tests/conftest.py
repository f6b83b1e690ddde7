import os

import numpy as np
import pytest

from cubecover.permcore import build_generators
from cubecover.search import default_index, make_setv
from cubecover.symmetry import build_m

@pytest.fixture(scope="session")
def gens():
    return build_generators()

@pytest.fixture(scope="session")
def M():
    return build_m()

@pytest.fixture(scope="session")
def index():
    return default_index(cache_dir=os.environ.get("QTM_CACHE_DIR") or None)

@pytest.fixture(scope="session")
def edge_bfs5():
    return make_setv("edge", 5)

@pytest.fixture(scope="session")
def cube_bfs4():
    return make_setv("cube", 4)

@pytest.fixture
def rng():
    return np.random.default_rng(20261016)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, status, detail in sorted(RESULTS):
        line = f"criterion {number:2d}  {status}  {title}"
        terminalreporter.write_line(line + (f"  [{detail}]" if status != "PASS" and detail else ""))
