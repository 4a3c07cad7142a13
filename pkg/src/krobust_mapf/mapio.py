"""Grid maps, scenarios and solver instances in the movingai text formats."""

from collections import deque
from collections.abc import Iterable, Iterator
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from krobust_mapf.errors import InstanceError, MapFormatError, ScenarioError

Cell = tuple[int, int]

PASSABLE_CHARS = ".G"
BLOCKED_CHARS = "@TO"

# Up, Right, Down, Left: the fixed successor order of every search.
MOVES: tuple[Cell, ...] = ((0, -1), (1, 0), (0, 1), (-1, 0))


def manhattan(a: Cell, b: Cell) -> int:
    return abs(a[0] - b[0]) + abs(a[1] - b[1])


@dataclass(frozen=True, eq=False)
class GridMap:
    """A 4-neighbour grid; ``passable[y, x]`` is true for free cells."""

    width: int
    height: int
    passable: np.ndarray

    def __post_init__(self) -> None:
        if self.width <= 0 or self.height <= 0:
            raise ValueError(f"invalid grid size {self.width}x{self.height}")
        if self.passable.shape != (self.height, self.width):
            raise ValueError(
                f"passable grid has shape {self.passable.shape}, "
                f"expected {(self.height, self.width)}"
            )

    @classmethod
    def open(cls, width: int, height: int, blocked: Iterable[Cell] = ()) -> "GridMap":
        """Create a map with every cell passable except ``blocked``."""
        passable = np.ones((height, width), dtype=bool)
        for x, y in blocked:
            passable[y, x] = False
        return cls(width, height, passable)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, GridMap):
            return NotImplemented
        return (self.width, self.height) == (other.width, other.height) and bool(
            np.array_equal(self.passable, other.passable)
        )

    def __hash__(self) -> int:
        return hash((self.width, self.height, self.passable.tobytes()))

    def in_bounds(self, cell: Cell) -> bool:
        x, y = cell
        return 0 <= x < self.width and 0 <= y < self.height

    def is_passable(self, cell: Cell) -> bool:
        return self.in_bounds(cell) and bool(self.passable[cell[1], cell[0]])

    def cells(self) -> Iterator[Cell]:
        """Iterate over passable cells in row-major order."""
        for y, x in zip(*np.nonzero(self.passable)):
            yield int(x), int(y)

    @property
    def size(self) -> int:
        return self.width * self.height

    @cached_property
    def adjacency(self) -> dict[Cell, tuple[Cell, ...]]:
        """Passable neighbours of every passable cell, in Up, Right, Down, Left order."""
        adjacency = {}
        for x, y in self.cells():
            adjacency[(x, y)] = tuple(
                (x + dx, y + dy)
                for dx, dy in MOVES
                if self.is_passable((x + dx, y + dy))
            )
        return adjacency

    def degree(self, cell: Cell) -> int:
        return len(self.adjacency.get(cell, ()))


@dataclass(frozen=True)
class AgentTask:
    id: int
    start: Cell
    goal: Cell


@dataclass(frozen=True)
class Instance:
    """A solver input: map, ordered agent tasks and the robustness radius k."""

    grid: GridMap
    tasks: tuple[AgentTask, ...]
    k: int
    name: str = field(default="", compare=False)

    @property
    def n_agents(self) -> int:
        return len(self.tasks)


def neighbors(grid: GridMap, cell: Cell) -> set[Cell]:
    """Passable 4-neighbours of ``cell``; the cell itself is never included."""
    x, y = cell
    return {
        (x + dx, y + dy) for dx, dy in MOVES if grid.is_passable((x + dx, y + dy))
    }


def bfs_distances(grid: GridMap, source: Cell) -> dict[Cell, int]:
    """Shortest move counts from ``source`` to every reachable passable cell."""
    distances = {source: 0}
    queue = deque([source])
    adjacency = grid.adjacency
    while queue:
        cell = queue.popleft()
        for nxt in adjacency[cell]:
            if nxt not in distances:
                distances[nxt] = distances[cell] + 1
                queue.append(nxt)
    return distances


def _parse_header_value(line: str, key: str, line_no: int) -> int:
    parts = line.split()
    if len(parts) != 2 or parts[0] != key:
        raise MapFormatError(line_no, f"expected '{key} <value>', got {line!r}")
    try:
        value = int(parts[1])
    except ValueError:
        raise MapFormatError(line_no, f"invalid {key} {parts[1]!r}") from None
    if value <= 0:
        raise MapFormatError(line_no, f"{key} must be positive, got {value}")
    return value


def parse_map(text: str) -> GridMap:
    """Parse a movingai ``.map`` file.

    Examples:
        "type octile\\nheight 1\\nwidth 2\\nmap\\n.@\\n" -> 2x1 map, (1, 0) blocked
    """
    lines = text.splitlines()
    while lines and not lines[-1].strip():
        lines.pop()
    if len(lines) < 4:
        raise MapFormatError(len(lines) + 1, "truncated header")

    type_parts = lines[0].split()
    if len(type_parts) != 2 or type_parts[0] != "type":
        raise MapFormatError(1, f"expected 'type <name>', got {lines[0]!r}")
    height = _parse_header_value(lines[1], "height", 2)
    width = _parse_header_value(lines[2], "width", 3)
    if lines[3].strip() != "map":
        raise MapFormatError(4, f"expected 'map', got {lines[3]!r}")

    rows = lines[4:]
    if len(rows) != height:
        raise MapFormatError(
            4 + min(len(rows), height) + 1,
            f"expected {height} map rows, found {len(rows)}",
        )

    passable = np.zeros((height, width), dtype=bool)
    for y, row in enumerate(rows):
        line_no = 5 + y
        if len(row) != width:
            raise MapFormatError(
                line_no, f"row has {len(row)} cells, expected {width}"
            )
        for x, char in enumerate(row):
            if char in PASSABLE_CHARS:
                passable[y, x] = True
            elif char not in BLOCKED_CHARS:
                raise MapFormatError(line_no, f"unknown cell character {char!r}")
    return GridMap(width, height, passable)


def render_map(grid: GridMap) -> str:
    """Render a map in movingai format using ``.`` and ``@``."""
    rows = [
        "".join("." if cell else "@" for cell in grid.passable[y])
        for y in range(grid.height)
    ]
    header = ["type octile", f"height {grid.height}", f"width {grid.width}", "map"]
    return "\n".join(header + rows) + "\n"


def _check_cell(grid: GridMap, cell: Cell, what: str, row: int) -> None:
    if not grid.in_bounds(cell):
        raise ScenarioError(row, f"{what} {cell} is outside the map")
    if not grid.is_passable(cell):
        raise ScenarioError(row, f"{what} {cell} is a blocked cell")


def parse_scen(text: str, grid: GridMap) -> list[AgentTask]:
    """Parse a movingai ``.scen`` file against ``grid``.

    The optimal-length column is read but not used: it assumes octile moves.
    """
    lines = text.splitlines()
    if not lines or not lines[0].startswith("version"):
        raise ScenarioError(0, "missing 'version' line")

    tasks: list[AgentTask] = []
    for row, line in enumerate(lines[1:], start=1):
        if not line.strip():
            continue
        fields = line.split("\t") if "\t" in line else line.split()
        if len(fields) != 9:
            raise ScenarioError(row, f"expected 9 fields, got {len(fields)}")
        try:
            width, height, sx, sy, gx, gy = (int(value) for value in fields[2:8])
            float(fields[8])
        except ValueError as exc:
            raise ScenarioError(row, f"invalid number: {exc}") from None
        if (width, height) != (grid.width, grid.height):
            raise ScenarioError(
                row,
                f"map size {width}x{height} does not match {grid.width}x{grid.height}",
            )
        start, goal = (sx, sy), (gx, gy)
        _check_cell(grid, start, "start", row)
        _check_cell(grid, goal, "goal", row)
        tasks.append(AgentTask(len(tasks), start, goal))
    return tasks


def render_scen(tasks: Iterable[AgentTask], grid: GridMap, map_name: str) -> str:
    """Render tasks as a movingai scenario; the length column holds 4-connected distances."""
    lines = ["version 1"]
    for task in tasks:
        distance = bfs_distances(grid, task.start).get(task.goal, 0)
        fields = [
            "0",
            map_name,
            str(grid.width),
            str(grid.height),
            str(task.start[0]),
            str(task.start[1]),
            str(task.goal[0]),
            str(task.goal[1]),
            f"{float(distance):.8f}",
        ]
        lines.append("\t".join(fields))
    return "\n".join(lines) + "\n"


def build_instance(
    grid: GridMap, tasks: Iterable[AgentTask], k: int, name: str = ""
) -> Instance:
    """Assemble an instance, enforcing distinct cells and reachable goals."""
    if k < 0:
        raise InstanceError(f"k must be non-negative, got {k}")
    tasks = tuple(tasks)
    starts = [task.start for task in tasks]
    goals = [task.goal for task in tasks]
    if len(set(starts)) != len(starts):
        raise InstanceError("start cells are not pairwise distinct")
    if len(set(goals)) != len(goals):
        raise InstanceError("goal cells are not pairwise distinct")
    for task in tasks:
        if not grid.is_passable(task.start) or not grid.is_passable(task.goal):
            raise InstanceError(f"agent {task.id} has a blocked start or goal")
        if task.goal not in bfs_distances(grid, task.start):
            raise InstanceError(
                f"agent {task.id} cannot reach goal {task.goal} from {task.start}"
            )
    return Instance(grid, tasks, k, name)


def load_instance(
    map_path: Path, scen_path: Path, n_agents: int, k: int
) -> Instance:
    """Load the first ``n_agents`` tasks of a scenario as an instance."""
    grid = parse_map(map_path.read_text(encoding="utf-8"))
    tasks = parse_scen(scen_path.read_text(encoding="utf-8"), grid)
    if n_agents > len(tasks):
        raise InstanceError(
            f"{scen_path.name} has {len(tasks)} tasks, {n_agents} requested"
        )
    return build_instance(grid, tasks[:n_agents], k, name=scen_path.stem)
