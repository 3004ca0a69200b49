import numpy as np
import pytest
from hypothesis import strategies as st

from rdbia.chain import validate_chain
from rdbia.distortion import make_distortion

DEMO_P = [[0.9, 0.1], [0.3, 0.7]]
SKEWED_D = [[0.0, 2.0], [0.5, 0.0]]

# criterion number -> (passed, detail); filled by test_acceptance
ACCEPTANCE: dict = {}


@pytest.fixture
def demo():
    return validate_chain(DEMO_P, [1.0, 0.0])


@st.composite
def distributions(draw, m, min_value=0.0):
    w = draw(st.lists(st.floats(min_value, 1.0), min_size=m, max_size=m).filter(lambda v: sum(v) > 1e-3))
    w = np.asarray(w)
    return w / w.sum()


@st.composite
def positive_matrices(draw, m, low=0.02):
    rows = [draw(distributions(m)) for _ in range(m)]
    P = np.asarray(rows) * (1 - m * low) + low
    return P / P.sum(axis=1, keepdims=True)


@st.composite
def chains(draw, m=None):
    m = m or draw(st.integers(2, 3))
    return validate_chain(draw(positive_matrices(m)), draw(distributions(m)))


@st.composite
def distortions(draw, m):
    off = draw(st.lists(st.floats(0.1, 5.0), min_size=m * m, max_size=m * m))
    d = np.asarray(off).reshape(m, m)
    np.fill_diagonal(d, 0.0)
    return make_distortion(d)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
