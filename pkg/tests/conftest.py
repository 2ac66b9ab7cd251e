import numpy as np
import pytest

from margshift import CountTable, ProbTable

# Sleep-latency trial: pre-intervention categories in rows, post in columns
# (<20, 20-30, 30-60, >60 minutes).
ACTIVE_COUNTS = [
    [7, 4, 1, 0],
    [11, 5, 2, 2],
    [13, 23, 3, 1],
    [9, 17, 13, 8],
]
PLACEBO_COUNTS = [
    [7, 4, 2, 1],
    [14, 5, 1, 0],
    [6, 9, 18, 2],
    [4, 11, 14, 22],
]

# Extreme 3x3 probability tables: all mass drifts to the last row category
# (left) or to the last column category (right).
LEFT_EXTREME = [
    [0.0, 0.0, 0.0],
    [0.0, 0.0, 0.0],
    [0.4, 0.6, 0.0],
]
RIGHT_EXTREME = [
    [0.0, 0.0, 0.4],
    [0.0, 0.0, 0.6],
    [0.0, 0.0, 0.0],
]


@pytest.fixture
def active_table() -> CountTable:
    return CountTable(ACTIVE_COUNTS)


@pytest.fixture
def placebo_table() -> CountTable:
    return CountTable(PLACEBO_COUNTS)


@pytest.fixture
def left_extreme() -> ProbTable:
    return ProbTable(LEFT_EXTREME)


@pytest.fixture
def right_extreme() -> ProbTable:
    return ProbTable(RIGHT_EXTREME)


def random_positive_table(rng: np.random.Generator, r: int, high: int = 40) -> CountTable:
    """Strictly positive random counts: comfortably interior tables."""
    return CountTable(rng.integers(1, high, size=(r, r)))


def random_equal_marginal_table(rng: np.random.Generator, r: int, high: int = 20) -> CountTable:
    """Random table with forced equal marginals (symmetrized counts)."""
    m = rng.integers(1, high, size=(r, r))
    return CountTable(m + m.T)
