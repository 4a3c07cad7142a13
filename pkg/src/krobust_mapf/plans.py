"""Timestep-indexed agent paths and plans."""

from collections.abc import Iterable, Sequence
from dataclasses import dataclass

from krobust_mapf.mapio import Cell, GridMap


@dataclass(frozen=True)
class Path:
    """Cells occupied at timesteps ``0..cost``; the agent stays at the last cell forever."""

    cells: tuple[Cell, ...]

    def __post_init__(self) -> None:
        if not self.cells:
            raise ValueError("a path needs at least one cell")

    @classmethod
    def from_cells(cls, cells: Iterable[Cell]) -> "Path":
        """Build a path, dropping goal waits after the final arrival."""
        cells = [tuple(cell) for cell in cells]
        while len(cells) > 1 and cells[-1] == cells[-2]:
            cells.pop()
        return cls(tuple((int(x), int(y)) for x, y in cells))

    @property
    def cost(self) -> int:
        return len(self.cells) - 1

    @property
    def start(self) -> Cell:
        return self.cells[0]

    @property
    def goal(self) -> Cell:
        return self.cells[-1]

    def at(self, t: int) -> Cell:
        """Cell occupied at ``t``, with goal occupancy after completion."""
        if t < len(self.cells):
            return self.cells[t]
        return self.cells[-1]

    def visits(self, cell: Cell) -> list[int]:
        """Timesteps ``<= cost`` at which the path occupies ``cell``."""
        return [t for t, c in enumerate(self.cells) if c == cell]

    def is_valid_on(self, grid: GridMap) -> bool:
        """True when every cell is passable and every step is a wait or a 4-move."""
        if not all(grid.is_passable(cell) for cell in self.cells):
            return False
        return all(
            abs(a[0] - b[0]) + abs(a[1] - b[1]) <= 1
            for a, b in zip(self.cells, self.cells[1:])
        )


Plan = Sequence[Path]


def sum_of_costs(plan: Plan) -> int:
    return sum(path.cost for path in plan)


def makespan(plan: Plan) -> int:
    return max((path.cost for path in plan), default=0)
