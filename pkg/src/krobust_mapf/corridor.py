"""k-delay corridor reasoning for opposite-direction conflicts in degree-2 chains."""

import logging
import math
from collections.abc import Mapping
from dataclasses import dataclass

from krobust_mapf.conflicts import Cardinality, Conflict
from krobust_mapf.constraints import ConstraintTable, RangeVertex, is_violated_by
from krobust_mapf.lowlevel import earliest_arrival
from krobust_mapf.mapio import AgentTask, Cell, GridMap
from krobust_mapf.plans import Path

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CorridorFinding:
    """Agents ``a1`` (travelling B -> E) and ``a2`` (E -> B) meet in a corridor.

    Arrival times are ``math.inf`` when unreachable.
    """

    conflict: Conflict
    a1: int
    a2: int
    B: Cell
    E: Cell
    length: int
    k: int
    t1: float
    t2: float
    t1_bypass: float
    t2_bypass: float
    t_b: float
    t_e: float
    cardinality: Cardinality = Cardinality.NON_CARDINAL

    kind = "corridor"

    @property
    def agents(self) -> tuple[int, int]:
        return self.a1, self.a2

    @property
    def ub1(self) -> float:
        return min(max(self.t_e + self.k, self.t1_bypass - 1), self.t2 + self.length + self.k)

    @property
    def ub2(self) -> float:
        return min(max(self.t_b + self.k, self.t2_bypass - 1), self.t1 + self.length + self.k)

    @property
    def branch_bounds(self) -> tuple[int, int]:
        """Upper ends of the two branch ranges.

        When both bypass windows are open the second bound is lowered below
        ``t2_bypass`` so a plan bypassing on both sides is kept by the first
        child.
        """
        ub1, ub2 = self.ub1, self.ub2
        if ub1 >= self.t1_bypass and ub2 >= self.t2_bypass:
            ub2 = min(ub2, self.t2_bypass - 1)
        return int(ub1), int(ub2)


def _chain(grid: GridMap, v: Cell) -> list[Cell] | None:
    """The maximal degree-2 chain through ``v`` with its two endpoints, or None."""
    ends = []
    for first in grid.adjacency[v]:
        prev, cur = v, first
        cells = []
        while grid.degree(cur) == 2:
            if cur == v:
                return None
            cells.append(cur)
            prev, cur = cur, next(c for c in grid.adjacency[cur] if c != prev)
        ends.append(cells + [cur])
    left, right = ends
    return list(reversed(left)) + [v] + right


def _direction(path: Path, t: int, index: Mapping[Cell, int]) -> int:
    """+1 when the path moves towards the chain's last cell at ``t``, -1 away, 0 unknown."""
    cell = path.at(t)
    here = index[cell]
    s = min(t, path.cost)
    while s > 0 and path.at(s - 1) == cell:
        s -= 1
    if s > 0 and path.at(s - 1) in index:
        return 1 if index[path.at(s - 1)] < here else -1
    s = min(t, path.cost)
    while s < path.cost and path.at(s + 1) == cell:
        s += 1
    if s < path.cost and path.at(s + 1) in index:
        return 1 if index[path.at(s + 1)] > here else -1
    return 0


def detect_corridor(
    conflict: Conflict,
    grid: GridMap,
    tasks: Mapping[int, AgentTask],
    paths: Mapping[int, Path],
    tables: Mapping[int, ConstraintTable],
    k: int,
) -> CorridorFinding | None:
    """Find a corridor finding for a conflict inside a degree-2 chain.

    ``t1``/``t2`` and the bypass times honor each agent's constraints; the
    bypass times also block the corridor interior; ``t_b``/``t_e`` are
    unconstrained earliest arrivals.
    """
    cells = [conflict.cell] if conflict.to_cell is None else [conflict.cell, conflict.to_cell]
    v = next((cell for cell in cells if grid.degree(cell) == 2), None)
    if v is None:
        return None
    chain = _chain(grid, v)
    if chain is None:
        return None
    index = {cell: i for i, cell in enumerate(chain)}
    interior = frozenset(chain[1:-1])

    times = {conflict.a_i: conflict.t, conflict.a_j: conflict.t_j}
    if conflict.kind == "edge":
        times = {conflict.a_i: conflict.t - 1, conflict.a_j: conflict.t}
    directions = {
        agent: _direction(paths[agent], min(t, paths[agent].cost), index)
        if paths[agent].at(t) in index
        else 0
        for agent, t in times.items()
    }
    d_i, d_j = directions[conflict.a_i], directions[conflict.a_j]
    if d_i == 0 or d_i != -d_j:
        return None
    a1, a2 = (conflict.a_i, conflict.a_j) if d_i > 0 else (conflict.a_j, conflict.a_i)
    B, E = chain[0], chain[-1]
    for agent in (a1, a2):
        if tasks[agent].start in interior or tasks[agent].goal in interior:
            return None

    s1, s2 = (tasks[a1].start, 0), (tasks[a2].start, 0)
    finding = CorridorFinding(
        conflict=conflict,
        a1=a1,
        a2=a2,
        B=B,
        E=E,
        length=len(chain) - 1,
        k=k,
        t1=earliest_arrival(grid, s1, E, tables[a1]),
        t2=earliest_arrival(grid, s2, B, tables[a2]),
        t1_bypass=earliest_arrival(grid, s1, E, tables[a1], blocked=interior),
        t2_bypass=earliest_arrival(grid, s2, B, tables[a2], blocked=interior),
        t_b=earliest_arrival(grid, s1, B),
        t_e=earliest_arrival(grid, s2, E),
    )
    if math.isinf(finding.ub1) or math.isinf(finding.ub2):
        return None
    c1, c2 = corridor_branches(finding)
    if not is_violated_by(c1, paths[a1]) or not is_violated_by(c2, paths[a2]):
        return None
    logger.debug(
        "Corridor B=%s E=%s l=%d bounds=%s for %s",
        B,
        E,
        finding.length,
        finding.branch_bounds,
        conflict,
    )
    return finding


def corridor_branches(finding: CorridorFinding) -> tuple[RangeVertex, RangeVertex]:
    """``a1`` kept off E up to its bound, or ``a2`` kept off B up to its bound."""
    ub1, ub2 = finding.branch_bounds
    return (
        RangeVertex(finding.a1, finding.E, 0, max(ub1, 0)),
        RangeVertex(finding.a2, finding.B, 0, max(ub2, 0)),
    )
