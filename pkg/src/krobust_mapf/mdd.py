"""Layered space-time graphs of an agent's paths (MDDs and k-MDDs).

Levels hold the cells an agent may occupy at each timestep on some walk of
length ``cost + slack`` that starts at its start cell, honors its constraints
and ends with a final arrival at its goal followed by goal waits. Edges join
consecutive levels.
"""

from collections.abc import Callable, Iterable, Iterator
from dataclasses import dataclass

from krobust_mapf.constraints import (
    Constraint,
    ConstraintTable,
    MaxLength,
    MinLength,
    RangeVertex,
    VertexFromOn,
)
from krobust_mapf.errors import InfeasiblePathError
from krobust_mapf.lowlevel import DistanceTable, distance_table, plan_path
from krobust_mapf.mapio import AgentTask, Cell, GridMap

Node = tuple[Cell, int]


@dataclass(frozen=True)
class MDD:
    agent: int
    goal: Cell
    cost: int
    slack: int
    levels: tuple[frozenset[Cell], ...]
    edges: dict[Node, tuple[Cell, ...]]
    # Reachability graphs keep every constraint-consistent prefix and do not
    # require the walk to end at the goal.
    goal_bounded: bool = True

    @property
    def depth(self) -> int:
        return len(self.levels) - 1

    def contains(self, cell: Cell, t: int) -> bool:
        if t <= self.depth:
            return cell in self.levels[t]
        return self.goal_bounded and cell == self.goal

    def is_singleton(self, cell: Cell, t: int) -> bool:
        """Whether every walk occupies ``cell`` at ``t``."""
        if t <= self.depth:
            return self.levels[t] == {cell}
        return self.goal_bounded and cell == self.goal

    def nodes(self) -> Iterator[Node]:
        for t, level in enumerate(self.levels):
            for cell in sorted(level):
                yield cell, t

    def __len__(self) -> int:
        return sum(len(level) for level in self.levels)

    def reachable(self, removed: Callable[[Cell, int], bool]) -> list[set[Cell]]:
        """Per-level cells reachable from the root without touching removed nodes."""
        reached: list[set[Cell]] = [set() for _ in self.levels]
        for cell in self.levels[0]:
            if not removed(cell, 0):
                reached[0].add(cell)
        for t in range(self.depth):
            for cell in reached[t]:
                for nxt in self.edges.get((cell, t), ()):
                    if not removed(nxt, t + 1):
                        reached[t + 1].add(nxt)
        return reached


def build_mdd(
    grid: GridMap,
    task: AgentTask,
    constraints: Iterable[Constraint] | ConstraintTable,
    slack: int,
    *,
    cost: int | None = None,
    heuristic: DistanceTable | None = None,
) -> MDD:
    """Build the MDD of all paths of cost at most optimal + ``slack``.

    Raises:
        InfeasiblePathError: when the agent has no path under its constraints.
    """
    table = (
        constraints
        if isinstance(constraints, ConstraintTable)
        else ConstraintTable.for_agent(constraints, task.id)
    )
    h = heuristic if heuristic is not None else distance_table(grid, task.goal)
    if cost is None:
        path = plan_path(grid, task, table, heuristic=h)
        if path is None:
            raise InfeasiblePathError(f"agent {task.id} has no path")
        cost = path.cost
    depth = cost + slack
    start, goal = task.start, task.goal
    adjacency = grid.adjacency

    def arrival_ok(prev: Cell, cell: Cell, t: int) -> bool:
        return cell == goal and prev != cell and table.can_finish(goal, t)

    # Forward pass over not-yet-settled walks, pruned by distance to goal.
    forward: list[set[Cell]] = [set() for _ in range(depth + 1)]
    settle_at = [False] * (depth + 1)
    if not table.blocked(start, 0):
        forward[0].add(start)
        settle_at[0] = start == goal and table.can_finish(goal, 0)
    for t in range(1, depth + 1):
        for cell in forward[t - 1]:
            for nxt in adjacency[cell] + (cell,):
                if table.blocked(nxt, t) or table.edge_blocked(cell, nxt, t):
                    continue
                if arrival_ok(cell, nxt, t):
                    settle_at[t] = True
                if nxt in h and h[nxt] + t <= depth:
                    forward[t].add(nxt)

    settled = [False] * (depth + 1)
    for t in range(depth + 1):
        settled[t] = settle_at[t] or (t > 0 and settled[t - 1])
    if not settled[depth]:
        raise InfeasiblePathError(
            f"agent {task.id} has no path of length {depth}"
        )

    # Backward pass: keep unsettled nodes that can still settle by the last level.
    good: list[set[Cell]] = [set() for _ in range(depth + 1)]
    edges: dict[Node, tuple[Cell, ...]] = {}
    for t in range(depth - 1, -1, -1):
        for cell in forward[t]:
            children = [
                nxt
                for nxt in adjacency[cell] + (cell,)
                if not table.blocked(nxt, t + 1)
                and not table.edge_blocked(cell, nxt, t + 1)
                and (nxt in good[t + 1] or arrival_ok(cell, nxt, t + 1))
            ]
            if children:
                good[t].add(cell)
                edges[(cell, t)] = tuple(children)

    levels = []
    for t in range(depth + 1):
        level = set(good[t])
        if settled[t]:
            level.add(goal)
            if t < depth:
                children = set(edges.get((goal, t), ())) | {goal}
                edges[(goal, t)] = tuple(sorted(children))
        levels.append(frozenset(level))
    return MDD(task.id, goal, cost, slack, tuple(levels), edges)


def build_reach_graph(
    grid: GridMap,
    task: AgentTask,
    constraints: Iterable[Constraint] | ConstraintTable,
    depth: int,
) -> MDD:
    """All constraint-consistent walk prefixes of length ``depth`` from the start."""
    table = (
        constraints
        if isinstance(constraints, ConstraintTable)
        else ConstraintTable.for_agent(constraints, task.id)
    )
    adjacency = grid.adjacency
    levels: list[frozenset[Cell]] = []
    edges: dict[Node, tuple[Cell, ...]] = {}
    current = {task.start} if not table.blocked(task.start, 0) else set()
    levels.append(frozenset(current))
    for t in range(1, depth + 1):
        following: set[Cell] = set()
        for cell in current:
            children = tuple(
                nxt
                for nxt in adjacency[cell] + (cell,)
                if not table.blocked(nxt, t) and not table.edge_blocked(cell, nxt, t)
            )
            edges[(cell, t - 1)] = children
            following.update(children)
        current = following
        levels.append(frozenset(current))
    return MDD(task.id, task.goal, 0, depth, tuple(levels), edges, goal_bounded=False)


def violates_all_paths(mdd: MDD, constraints: Iterable[Constraint]) -> bool:
    """Whether every MDD path breaks at least one of ``constraints``.

    Only constraints applying to the MDD's agent are considered; for an MDD
    of slack 0 this means the agent's cost must rise under the constraints.
    """
    ranges: dict[Cell, list[tuple[int, float]]] = {}
    for c in constraints:
        if isinstance(c, VertexFromOn):
            if c.all_except == (c.agent == mdd.agent):
                continue
            ranges.setdefault(c.cell, []).append((c.t_lo, float("inf")))
        elif c.agent != mdd.agent:
            continue
        elif isinstance(c, RangeVertex):
            ranges.setdefault(c.cell, []).append((c.t_lo, c.t_hi))
        elif isinstance(c, MinLength) and mdd.slack == 0 and mdd.cost < c.T:
            return True
        elif isinstance(c, MaxLength) and mdd.slack == 0 and mdd.cost > c.T:
            return True

    def removed(cell: Cell, t: int) -> bool:
        return any(lo <= t <= hi for lo, hi in ranges.get(cell, ()))

    reached = mdd.reachable(removed)
    if mdd.goal in reached[mdd.depth]:
        # Goal waits after the last level must stay clear as well.
        return any(hi > mdd.depth for _, hi in ranges.get(mdd.goal, ()))
    return True
