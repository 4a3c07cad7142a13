"""Single-agent space-time search under constraint-tree constraints."""

import heapq
import logging
import math
from collections import deque
from collections.abc import Iterable
from dataclasses import dataclass, field

from krobust_mapf.constraints import Constraint, ConstraintTable
from krobust_mapf.mapio import AgentTask, Cell, GridMap, bfs_distances
from krobust_mapf.plans import Path

logger = logging.getLogger(__name__)

DistanceTable = dict[Cell, int]


@dataclass
class SearchCounter:
    """Work counters shared by all low-level searches of one solver run."""

    expansions: int = 0
    horizon_hits: int = 0


@dataclass
class AvoidanceTable:
    """Cells other agents occupy, used to break ties between equal-cost paths.

    A state counts one soft conflict per visit of its cell within ``k``
    timesteps, and one per path already parked there at its goal.
    """

    k: int = 0
    visits: dict[Cell, list[int]] = field(default_factory=dict)
    parked: dict[Cell, list[int]] = field(default_factory=dict)

    @classmethod
    def from_paths(cls, paths: Iterable[Path], k: int) -> "AvoidanceTable":
        table = cls(k)
        for path in paths:
            for t, cell in enumerate(path.cells):
                table.visits.setdefault(cell, []).append(t)
            table.parked.setdefault(path.goal, []).append(path.cost)
        return table

    def count(self, cell: Cell, t: int) -> int:
        k = self.k
        near = sum(1 for s in self.visits.get(cell, ()) if abs(s - t) <= k)
        return near + sum(1 for s in self.parked.get(cell, ()) if t > s + k)


def distance_table(grid: GridMap, goal: Cell) -> DistanceTable:
    """Exact distance-to-goal for every cell that can reach ``goal``."""
    return bfs_distances(grid, goal)


def _as_table(
    constraints: Iterable[Constraint] | ConstraintTable, agent: int
) -> ConstraintTable:
    if isinstance(constraints, ConstraintTable):
        return constraints
    return ConstraintTable.for_agent(constraints, agent)


def search_horizon(
    grid: GridMap, table: ConstraintTable, lower_bound: int, k: int
) -> int:
    """Timestep beyond which no state is expanded."""
    return max(lower_bound, table.stable_time) + grid.size + k


def plan_path(
    grid: GridMap,
    task: AgentTask,
    constraints: Iterable[Constraint] | ConstraintTable,
    horizon_hint: int = 0,
    *,
    k: int = 0,
    heuristic: DistanceTable | None = None,
    counter: SearchCounter | None = None,
    avoid: AvoidanceTable | None = None,
) -> Path | None:
    """Find a minimum-cost path for ``task`` honoring every applicable constraint.

    A path is accepted only on a move into the goal (or at t=0 when the agent
    starts there) whose arrival time satisfies the length bounds and lets the
    agent hold its goal forever. Returns None when no path exists within the
    search horizon. Among equal f, states with fewer soft conflicts against
    ``avoid`` are preferred, then deeper states.

    Args:
        grid: The map.
        task: The agent's start and goal.
        constraints: Constraints of the CT node, or a prebuilt table.
        horizon_hint: A known lower bound on the useful horizon.
        k: Robustness radius, widening the horizon.
        heuristic: Distance-to-goal table; computed when omitted.
        counter: Optional work counters to update.
        avoid: Other agents' paths to steer around without raising the cost.

    Returns:
        The path, or None when the agent is infeasible.
    """
    table = _as_table(constraints, task.id)
    h = heuristic if heuristic is not None else distance_table(grid, task.goal)
    start, goal = task.start, task.goal
    if start not in h or table.blocked(start, 0):
        return None
    if table.settle_time(goal) is None:
        return None
    max_length = table.max_length
    if max_length is not None and h[start] > max_length:
        return None

    horizon = search_horizon(grid, table, max(h[start], horizon_hint), k)
    if max_length is not None:
        horizon = min(horizon, max_length)
    stable = table.stable_time
    adjacency = grid.adjacency

    seq = 0
    # (f, soft conflicts, -g, seq, cell, t, is_terminal)
    open_list: list[tuple[int, int, int, int, Cell, int, bool]] = []
    parents: dict[tuple[Cell, int], tuple[Cell, int] | None] = {(start, 0): None}
    soft: dict[tuple[Cell, int], int] = {}
    # Final arrivals into the goal, keyed apart from ordinary states.
    arrivals: dict[tuple[Cell, int], tuple[tuple[Cell, int] | None, int]] = {}
    closed: set[tuple[Cell, int]] = set()

    def penalty(cell: Cell, t: int) -> int:
        return avoid.count(cell, t) if avoid is not None else 0

    soft[(start, 0)] = penalty(start, 0)
    heapq.heappush(open_list, (h[start], soft[(start, 0)], 0, seq, start, 0, False))
    if start == goal and table.can_finish(goal, 0):
        arrivals[(goal, 0)] = (None, soft[(start, 0)])
        seq += 1
        heapq.heappush(open_list, (0, soft[(start, 0)], 0, seq, goal, 0, True))

    hit_horizon = False
    while open_list:
        _, n_soft, _, _, cell, t, terminal = heapq.heappop(open_list)
        if terminal:
            node, best = arrivals[(cell, t)]
            if n_soft != best:
                continue
            cells = [cell]
            while node is not None:
                cells.append(node[0])
                node = parents[node]
            return Path(tuple(reversed(cells)))
        if n_soft != soft[(cell, t)]:
            continue
        key = (cell, min(t, stable))
        if key in closed:
            continue
        closed.add(key)
        if counter is not None:
            counter.expansions += 1

        nt = t + 1
        if nt > horizon:
            hit_horizon = True
            continue
        for nxt in adjacency[cell] + (cell,):
            if nxt not in h or nt + h[nxt] > horizon:
                continue
            if table.blocked(nxt, nt) or table.edge_blocked(cell, nxt, nt):
                continue
            n_next = n_soft + penalty(nxt, nt)
            if nxt == goal and nxt != cell and table.can_finish(goal, nt):
                known = arrivals.get((goal, nt))
                if known is None or n_next < known[1]:
                    arrivals[(goal, nt)] = ((cell, t), n_next)
                    seq += 1
                    heapq.heappush(open_list, (nt, n_next, -nt, seq, goal, nt, True))
            if (nxt, min(nt, stable)) in closed:
                continue
            known_soft = soft.get((nxt, nt))
            if known_soft is not None and known_soft <= n_next:
                continue
            parents[(nxt, nt)] = (cell, t)
            soft[(nxt, nt)] = n_next
            seq += 1
            heapq.heappush(
                open_list, (nt + h[nxt], n_next, -nt, seq, nxt, nt, False)
            )

    if hit_horizon:
        if counter is not None:
            counter.horizon_hits += 1
        logger.debug("Agent %d: search horizon %d reached", task.id, horizon)
    return None


def earliest_arrival(
    grid: GridMap,
    position: tuple[Cell, int],
    target: Cell,
    constraints: ConstraintTable | None = None,
    blocked: Iterable[Cell] = (),
) -> float:
    """Minimum t >= t0 at which ``target`` can be occupied, or ``math.inf``.

    Only vertex constraints of ``constraints`` are honored; ``blocked`` cells
    are never entered.

    Examples:
        open 8x8, ((0, 0), 0) -> (3, 0): 3
    """
    start, t0 = position
    blocked = frozenset(blocked)
    if start == target:
        return t0
    if target in blocked or not grid.is_passable(target):
        return math.inf
    stable = max(constraints.stable_time, t0) if constraints is not None else t0
    horizon = stable + grid.size + 1
    adjacency = grid.adjacency

    seen = {(start, min(t0, stable))}
    queue = deque([(start, t0)])
    while queue:
        cell, t = queue.popleft()
        nt = t + 1
        if nt > horizon:
            break
        for nxt in adjacency[cell] + (cell,):
            if nxt in blocked:
                continue
            if constraints is not None and constraints.blocked(nxt, nt):
                continue
            if nxt == target:
                return nt
            key = (nxt, min(nt, stable))
            if key not in seen:
                seen.add(key)
                queue.append((nxt, nt))
    return math.inf
