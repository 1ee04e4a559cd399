import numpy as np
import pytest

from mbat.core import Codebook

# Ten-dimensional word vectors, listed column by column.
WORD_VECTORS = {
    "smart":    [-1, 1, 1, -1, -1, -1, 1, -1, -1, 1],
    "girl":     [1, 1, 1, -1, -1, 1, -1, -1, -1, -1],
    "saw":      [-1, -1, 1, 1, 1, -1, 1, 1, 1, -1],
    "gray":     [1, -1, -1, -1, -1, -1, -1, 1, 1, -1],
    "elephant": [1, -1, 1, -1, -1, 1, -1, 1, -1, -1],
}
PAIR_SUM = [0, 2, 2, -2, -2, 0, 0, -2, -2, 0]
PAIR_DOTS = {"smart": 12, "girl": 12, "saw": -8, "gray": -4, "elephant": 4}

SENTENCE = "@actor the smart girl | @verb saw | @object the gray elephant"


@pytest.fixture
def ten_dim():
    return Codebook.from_vectors(WORD_VECTORS)


@pytest.fixture
def rs():
    return np.random.default_rng(12345)


def random_bipolar(rs, *shape):
    return rs.choice([-1.0, 1.0], size=shape)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        terminalreporter.write_line(results[n])
