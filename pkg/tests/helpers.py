"""Builders for maps, paths and instances used across the test modules."""

from krobust_mapf.mapio import AgentTask, Cell, GridMap, Instance, build_instance
from krobust_mapf.plans import Path


def grid_from_rows(*rows: str) -> GridMap:
    """A map from rows of ``.`` (free) and ``@`` (blocked) characters."""
    blocked = [
        (x, y) for y, row in enumerate(rows) for x, char in enumerate(row) if char == "@"
    ]
    return GridMap.open(len(rows[0]), len(rows), blocked)


def make_instance(grid: GridMap, endpoints: list[tuple[Cell, Cell]], k: int) -> Instance:
    tasks = [AgentTask(i, start, goal) for i, (start, goal) in enumerate(endpoints)]
    return build_instance(grid, tasks, k, name="test")


def path(*cells: Cell) -> Path:
    return Path(tuple(cells))
