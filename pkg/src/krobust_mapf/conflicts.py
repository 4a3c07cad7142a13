"""k-delay conflict detection and MDD-based cardinality classification."""

from collections import defaultdict
from dataclasses import dataclass
from enum import Enum

from krobust_mapf.mapio import Cell
from krobust_mapf.mdd import MDD
from krobust_mapf.plans import Path, Plan


class Cardinality(str, Enum):
    CARDINAL = "cardinal"
    SEMI_CARDINAL = "semi-cardinal"
    NON_CARDINAL = "non-cardinal"

    @property
    def rank(self) -> int:
        """0 for cardinal, 1 for semi-cardinal, 2 for non-cardinal."""
        return list(Cardinality).index(self)

    @classmethod
    def from_sides(cls, first: bool, second: bool) -> "Cardinality":
        if first and second:
            return cls.CARDINAL
        if first or second:
            return cls.SEMI_CARDINAL
        return cls.NON_CARDINAL


@dataclass(frozen=True)
class Conflict:
    """``a_i`` occupies ``cell`` at ``t`` and ``a_j`` at ``t + delta``.

    Edge conflicts (k = 0 only) swap ``cell`` and ``to_cell``: ``a_i`` moves
    ``cell -> to_cell`` and ``a_j`` moves back, both arriving at ``t``.
    """

    a_i: int
    a_j: int
    cell: Cell
    t: int
    delta: int = 0
    kind: str = "vertex"
    to_cell: Cell | None = None

    @property
    def t_j(self) -> int:
        return self.t + self.delta

    @property
    def agents(self) -> tuple[int, int]:
        return min(self.a_i, self.a_j), max(self.a_i, self.a_j)

    def sort_key(self) -> tuple:
        return (self.t, self.agents, self.cell, self.kind, self.delta)


def _runs(times: list[int]) -> list[tuple[int, int]]:
    """Group sorted timesteps into maximal runs of consecutive values."""
    runs: list[tuple[int, int]] = []
    for t in times:
        if runs and runs[-1][1] == t - 1:
            runs[-1] = (runs[-1][0], t)
        else:
            runs.append((t, t))
    return runs


def _first_conflict(
    first: tuple[int, int], second: tuple[int, int], k: int
) -> tuple[int, int] | None:
    """Earliest (t, delta) with the first run at t and the second at t + delta."""
    a1, b1 = first
    a2, b2 = second
    t = max(a1, a2 - k)
    if t > b1 or t > b2:
        return None
    return t, max(t, a2) - t


def _run_pair_conflict(
    p: int, run_p: tuple[int, int], q: int, run_q: tuple[int, int], k: int, cell: Cell
) -> Conflict | None:
    candidates = []
    hit = _first_conflict(run_p, run_q, k)
    if hit is not None:
        candidates.append(Conflict(p, q, cell, hit[0], hit[1]))
    hit = _first_conflict(run_q, run_p, k)
    if hit is not None:
        candidates.append(Conflict(q, p, cell, hit[0], hit[1]))
    if not candidates:
        return None
    return min(candidates, key=lambda c: (c.t, c.delta, c.a_i))


def detect_conflicts(plan: Plan, k: int) -> list[Conflict]:
    """All pairwise k-delay conflicts of a plan, earliest first.

    Paths are goal-extended up to ``max cost + k``. A run of consecutive
    timesteps one agent spends in a cell counts as a single visit, so an agent
    sitting on a cell is reported once. For k = 0 opposite-direction swaps are
    reported as edge conflicts.

    Examples:
        paths crossing (2, 2) at t=3 and t=4, k=1 -> [Conflict(0, 1, (2, 2), 3, 1)]
    """
    if not plan:
        return []
    horizon = max(path.cost for path in plan) + k
    visits: dict[Cell, dict[int, list[int]]] = defaultdict(lambda: defaultdict(list))
    for agent, path in enumerate(plan):
        for t in range(horizon + 1):
            visits[path.at(t)][agent].append(t)

    conflicts: list[Conflict] = []
    for cell, by_agent in visits.items():
        if len(by_agent) < 2:
            continue
        agents = sorted(by_agent)
        runs = {agent: _runs(by_agent[agent]) for agent in agents}
        for i, p in enumerate(agents):
            for q in agents[i + 1 :]:
                for run_p in runs[p]:
                    for run_q in runs[q]:
                        conflict = _run_pair_conflict(p, run_p, q, run_q, k, cell)
                        if conflict is not None:
                            conflicts.append(conflict)

    if k == 0:
        conflicts.extend(_edge_conflicts(plan, horizon))
    conflicts.sort(key=Conflict.sort_key)
    return conflicts


def _edge_conflicts(plan: Plan, horizon: int) -> list[Conflict]:
    moves: dict[tuple[Cell, Cell, int], int] = {}
    for agent, path in enumerate(plan):
        for t in range(1, path.cost + 1):
            u, v = path.at(t - 1), path.at(t)
            if u != v:
                moves[(u, v, t)] = agent
    conflicts = []
    for (u, v, t), agent in moves.items():
        other = moves.get((v, u, t))
        if other is not None and agent < other:
            conflicts.append(Conflict(agent, other, u, t, 0, "edge", v))
    return conflicts


def path_conflicts_with(path_i: Path, path_j: Path, k: int) -> bool:
    """Whether two paths have any k-delay conflict (or a swap for k = 0)."""
    return bool(detect_conflicts([path_i, path_j], k))


def classify_conflict(conflict: Conflict, mdd_i: MDD, mdd_j: MDD) -> Cardinality:
    """Cardinality from the singleton levels of the agents' optimal-path MDDs."""
    if conflict.kind == "edge":
        assert conflict.to_cell is not None
        side_i = mdd_i.is_singleton(conflict.cell, conflict.t - 1) and mdd_i.is_singleton(
            conflict.to_cell, conflict.t
        )
        side_j = mdd_j.is_singleton(
            conflict.to_cell, conflict.t - 1
        ) and mdd_j.is_singleton(conflict.cell, conflict.t)
    else:
        side_i = mdd_i.is_singleton(conflict.cell, conflict.t)
        side_j = mdd_j.is_singleton(conflict.cell, conflict.t_j)
    return Cardinality.from_sides(side_i, side_j)
