"""Deterministic instances exhibiting rectangle, corridor and target symmetries,
plus seeded random instances."""

import numpy as np

from krobust_mapf.errors import InstanceError
from krobust_mapf.mapio import AgentTask, Cell, GridMap, Instance, bfs_distances, build_instance

ARCHETYPES = ("rectangle", "corridor", "corridor-bypass", "target", "random")
RANDOM_SIZE = 6
RANDOM_OBSTACLES = 0.1


def rectangle_instance(side: int, k: int) -> Instance:
    """Two agents crossing an open ``side`` x ``side`` region orthogonally.

    Starts and goals lie ``k // 2 + 1`` cells outside the region so sides
    shifted for a k-delay rectangle stay between them.

    Examples:
        side=2, k=1 -> 4x4 map, (1, 0) -> (2, 3) and (0, 1) -> (3, 2)
        side=2, k=2 -> 6x6 map, (2, 0) -> (3, 5) and (0, 2) -> (5, 3)
    """
    if side < 1:
        raise InstanceError(f"rectangle side must be positive, got {side}")
    margin = k // 2 + 1
    size = side + 2 * margin
    near, far = margin, margin + side - 1
    tasks = (
        AgentTask(0, (near, 0), (far, size - 1)),
        AgentTask(1, (0, near), (size - 1, far)),
    )
    return build_instance(GridMap.open(size, size), tasks, k, name=f"rectangle-{side}")


def corridor_instance(length: int, k: int, bypass: bool = False) -> Instance:
    """Two agents crossing a width-1 corridor of ``length`` moves in opposite directions.

    The corridor runs along the middle row between two open end columns.
    Each agent starts in the top cell of one end column and ends in the
    bottom cell of the other, so the corridor is the only place they meet.
    With ``bypass`` a bottom row two cells below the corridor links both
    end columns around it.
    """
    if length < 2:
        raise InstanceError(f"corridor length must be at least 2, got {length}")
    width = length + 1
    height = 5 if bypass else 3
    blocked: list[Cell] = [
        (x, y)
        for x in range(1, length)
        for y in range(height)
        if y != 1 and not (bypass and y == height - 1)
    ]
    tasks = (
        AgentTask(0, (0, 0), (length, 2)),
        AgentTask(1, (length, 0), (0, 2)),
    )
    name = f"corridor{'-bypass' if bypass else ''}-{length}"
    return build_instance(GridMap.open(width, height, blocked), tasks, k, name=name)


def target_instance(separation: int, k: int) -> Instance:
    """One agent's goal lies on the other's only short route.

    Agent 0 runs along the middle row; agent 1 steps down onto its goal in
    that row after ``separation`` cells. A three-cell detour row passes
    below the goal.
    """
    if separation < 1:
        raise InstanceError(f"target separation must be positive, got {separation}")
    d = separation
    width = 2 * d + 1
    blocked = [(x, 0) for x in range(width) if x != d]
    blocked += [(x, 2) for x in range(width) if abs(x - d) > 1]
    tasks = (
        AgentTask(0, (0, 1), (width - 1, 1)),
        AgentTask(1, (d, 0), (d, 1)),
    )
    return build_instance(GridMap.open(width, 3, blocked), tasks, k, name=f"target-{d}")


def largest_component(grid: GridMap) -> set[Cell]:
    best: set[Cell] = set()
    seen: set[Cell] = set()
    for cell in grid.cells():
        if cell in seen:
            continue
        component = set(bfs_distances(grid, cell))
        seen |= component
        if len(component) > len(best):
            best = component
    return best


def generate_random_map(
    width: int, height: int, obstacle_ratio: float, seed: int
) -> GridMap:
    """A grid with ``obstacle_ratio`` of its cells blocked at random."""
    if not 0 <= obstacle_ratio < 1:
        raise ValueError(f"obstacle ratio must be in [0, 1), got {obstacle_ratio}")
    rng = np.random.default_rng(seed)
    n_blocked = int(round(width * height * obstacle_ratio))
    flat = np.ones(width * height, dtype=bool)
    flat[rng.choice(width * height, size=n_blocked, replace=False)] = False
    return GridMap(width, height, flat.reshape(height, width))


def random_tasks(grid: GridMap, n_agents: int, seed: int) -> list[AgentTask]:
    """Distinct starts and distinct goals drawn from the largest component."""
    cells = sorted(largest_component(grid))
    if n_agents > len(cells):
        raise InstanceError(f"{n_agents} agents do not fit in {len(cells)} connected cells")
    rng = np.random.default_rng(seed)
    starts = rng.choice(len(cells), size=n_agents, replace=False)
    goals = rng.choice(len(cells), size=n_agents, replace=False)
    return [
        AgentTask(i, cells[int(s)], cells[int(g)])
        for i, (s, g) in enumerate(zip(starts, goals))
    ]


def generate_random_instance(
    n_agents: int,
    k: int,
    seed: int,
    width: int = RANDOM_SIZE,
    height: int = RANDOM_SIZE,
    obstacle_ratio: float = RANDOM_OBSTACLES,
) -> Instance:
    grid = generate_random_map(width, height, obstacle_ratio, seed)
    tasks = random_tasks(grid, n_agents, seed)
    name = f"random-{width}-{height}-{n_agents}-s{seed}"
    return build_instance(grid, tasks, k, name=name)


def parse_archetype(value: str) -> tuple[str, int]:
    """Split ``kind:param`` as given on the command line.

    Examples:
        "rectangle:3" -> ("rectangle", 3)
        "random:2" -> ("random", 2)
    """
    kind, sep, param = value.partition(":")
    if not sep or kind not in ARCHETYPES:
        raise ValueError(
            f"invalid archetype {value!r}, expected kind:param with kind in "
            f"{', '.join(ARCHETYPES)}"
        )
    try:
        return kind, int(param)
    except ValueError:
        raise ValueError(f"archetype parameter must be an integer, got {param!r}") from None


def generate_archetype(kind: str, param: int, k: int, seed: int = 0) -> Instance:
    """Build an archetype instance; ``random`` takes the agent count as param."""
    if kind == "rectangle":
        return rectangle_instance(param, k)
    if kind == "corridor":
        return corridor_instance(param, k)
    if kind == "corridor-bypass":
        return corridor_instance(param, k, bypass=True)
    if kind == "target":
        return target_instance(param, k)
    if kind == "random":
        return generate_random_instance(param, k, seed)
    raise ValueError(f"unknown archetype {kind!r}")
