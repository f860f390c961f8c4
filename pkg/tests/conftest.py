import numpy as np
import pytest
from hypothesis import strategies as st

from overbook.matrix import from_coo

# criterion number -> (passed, detail); filled by test_acceptance
ACCEPTANCE: dict = {}


@st.composite
def sparse_matrices(draw, max_dim=24, min_dim=1):
    rows = draw(st.integers(min_dim, max_dim))
    cols = draw(st.integers(min_dim, max_dim))
    cells = draw(st.sets(st.tuples(st.integers(0, rows - 1), st.integers(0, cols - 1)),
                         max_size=rows * cols))
    r = [c[0] for c in cells]
    c = [c[1] for c in cells]
    return from_coo(rows, cols, r, c)


def random_matrix(rng, rows, cols, density):
    mask = rng.random((rows, cols)) < density
    r, c = np.nonzero(mask)
    return from_coo(rows, cols, r, c)


@pytest.fixture
def six():
    coords = [(0, 0), (0, 5), (2, 2), (3, 3), (5, 1), (5, 5)]
    return from_coo(6, 6, [a for a, _ in coords], [b for _, b in coords])


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
