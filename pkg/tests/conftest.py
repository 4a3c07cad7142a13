import pytest

from krobust_mapf.mapio import GridMap
from krobust_mapf.plans import Path
from tests.helpers import path


@pytest.fixture
def open_grid() -> GridMap:
    return GridMap.open(8, 8)


@pytest.fixture
def crossing_paths() -> tuple[Path, Path]:
    """Two paths through (2, 2): agent 0 at t=3, agent 1 at t=4."""
    return (
        path((2, 0), (2, 0), (2, 1), (2, 2), (2, 3)),
        path((0, 2), (0, 2), (0, 2), (1, 2), (2, 2), (3, 2)),
    )
