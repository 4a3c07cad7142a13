"""Ground-truth checks for small instances.

Everything here is written independently of the solver's conflict detection:
plans are checked by brute force over goal-extended paths, delays are
simulated by re-timing paths, and optimal costs come from exhaustive path
enumeration. Suitable only at desk scale.
"""

import itertools
import logging
from collections import Counter, defaultdict
from collections.abc import Iterable, Iterator, Mapping, Sequence
from dataclasses import dataclass

import numpy as np

from krobust_mapf.constraints import Constraint, applies_to, is_violated_by
from krobust_mapf.errors import OracleBudgetExceeded
from krobust_mapf.mapio import AgentTask, Cell, GridMap, Instance, bfs_distances
from krobust_mapf.plans import Path, Plan, sum_of_costs
from krobust_mapf.rectangle import Barrier

logger = logging.getLogger(__name__)

COMBINATION_BUDGET = 10**7
# Exhaustive delay enumeration is used up to these sizes.
EXHAUSTIVE_MAX_COST = 10
EXHAUSTIVE_MAX_AGENTS = 3
DEFAULT_DELAY_SAMPLES = 200

Delays = Sequence[tuple[int, int]]


@dataclass(frozen=True)
class Violation:
    """``a_i`` is at ``cell`` at ``t`` and ``a_j`` at ``t + delta``."""

    a_i: int
    a_j: int
    cell: Cell
    t: int
    delta: int
    kind: str = "vertex"

    def __str__(self) -> str:
        return (
            f"{self.kind} conflict: agents {self.a_i} and {self.a_j} "
            f"at {self.cell}, t={self.t}, delta={self.delta}"
        )


@dataclass(frozen=True)
class Collision:
    """Two re-timed agents share ``cell`` at ``t`` (or swap across it)."""

    a_i: int
    a_j: int
    cell: Cell
    t: int
    kind: str = "vertex"

    def __str__(self) -> str:
        return f"{self.kind} collision: agents {self.a_i} and {self.a_j} at {self.cell}, t={self.t}"


def _pair_violation(
    i: int, path_i: Sequence[Cell], j: int, path_j: Sequence[Cell], k: int, horizon: int
) -> Violation | None:
    def at(cells: Sequence[Cell], t: int) -> Cell:
        return cells[min(t, len(cells) - 1)]

    times_j: dict[Cell, list[int]] = defaultdict(list)
    for t in range(horizon + 1):
        times_j[at(path_j, t)].append(t)
    hits = []
    for t in range(horizon + 1):
        cell = at(path_i, t)
        for t_j in times_j.get(cell, ()):
            if t <= t_j <= t + k:
                hits.append(Violation(i, j, cell, t, t_j - t))
            elif t_j < t <= t_j + k:
                hits.append(Violation(j, i, cell, t_j, t - t_j))
    if k == 0:
        for t in range(1, horizon + 1):
            u, v = at(path_i, t - 1), at(path_i, t)
            if u != v and at(path_j, t - 1) == v and at(path_j, t) == u:
                hits.append(Violation(i, j, u, t, 0, "edge"))
    if not hits:
        return None
    return min(hits, key=lambda v: (v.t, v.delta, v.kind))


def pair_is_robust(path_i: Path, path_j: Path, k: int) -> bool:
    horizon = max(path_i.cost, path_j.cost) + k
    return _pair_violation(0, path_i.cells, 1, path_j.cells, k, horizon) is None


def validate_k_robust(
    plan: Plan, k: int, instance: Instance | None = None
) -> Violation | None:
    """The earliest k-delay conflict of ``plan``, or None when it is k-robust.

    Paths are extended at their goals up to the makespan plus k. For k = 0
    swaps along an edge are reported as well. With ``instance`` given, each
    path must also start and end at its task's cells and move legally; a
    path failing that is reported as an ``invalid-path`` violation.
    """
    if instance is not None:
        if len(plan) != instance.n_agents:
            raise ValueError(f"plan has {len(plan)} paths for {instance.n_agents} agents")
        for task, path in zip(instance.tasks, plan):
            if (
                path.start != task.start
                or path.goal != task.goal
                or not path.is_valid_on(instance.grid)
            ):
                return Violation(task.id, task.id, path.start, 0, 0, "invalid-path")
    if not plan:
        return None
    horizon = max(path.cost for path in plan) + k
    violations = []
    for i, j in itertools.combinations(range(len(plan)), 2):
        hit = _pair_violation(i, plan[i].cells, j, plan[j].cells, k, horizon)
        if hit is not None:
            violations.append(hit)
    if not violations:
        return None
    return min(violations, key=lambda v: (v.t, min(v.a_i, v.a_j), v.delta))


def retime(path: Path, delays: Delays) -> list[Cell]:
    """Cells of ``path`` with ``count`` extra waits inserted at each ``(t, count)``."""
    extra: Counter[int] = Counter()
    for t, count in delays:
        if count < 0 or t < 0:
            raise ValueError(f"invalid delay ({t}, {count})")
        extra[t] += count
    cells = []
    for t, cell in enumerate(path.cells):
        cells.extend([cell] * (1 + extra.get(t, 0)))
    return cells


def simulate_delays(
    plan: Plan, k: int, delays: Mapping[int, Delays] | None = None
) -> Collision | None:
    """Execute ``plan`` with injected waits and report the first collision.

    Args:
        plan: One path per agent.
        k: Maximum total delay allowed per agent.
        delays: Agent -> list of ``(timestep, count)`` wait insertions.

    Returns:
        The earliest same-cell-same-time collision or swap, or None.

    Raises:
        ValueError: If an agent's total delay exceeds k.
    """
    delays = delays or {}
    timed = []
    for agent, path in enumerate(plan):
        agent_delays = delays.get(agent, ())
        total = sum(count for _, count in agent_delays)
        if total > k:
            raise ValueError(f"agent {agent} delayed {total} > k={k} steps")
        timed.append(retime(path, agent_delays))
    if not timed:
        return None
    horizon = max(len(cells) for cells in timed)

    def at(cells: list[Cell], t: int) -> Cell:
        return cells[min(t, len(cells) - 1)]

    for t in range(horizon + 1):
        seen: dict[Cell, int] = {}
        for agent, cells in enumerate(timed):
            cell = at(cells, t)
            if cell in seen:
                return Collision(seen[cell], agent, cell, t)
            seen[cell] = agent
        if t == 0:
            continue
        for i, j in itertools.combinations(range(len(timed)), 2):
            u, v = at(timed[i], t - 1), at(timed[i], t)
            if u != v and at(timed[j], t - 1) == v and at(timed[j], t) == u:
                return Collision(i, j, u, t, "edge")
    return None


def delay_vectors(path: Path, k: int) -> Iterator[tuple[tuple[int, int], ...]]:
    """Every placement of at most k waits along the path's moves."""
    positions = range(path.cost)
    for total in range(k + 1):
        for chosen in itertools.combinations_with_replacement(positions, total):
            yield tuple(sorted(Counter(chosen).items()))


def check_delays_exhaustive(plan: Plan, k: int) -> Collision | None:
    """Try every admissible delay placement for every pair of agents."""
    for i, j in itertools.combinations(range(len(plan)), 2):
        for d_i in delay_vectors(plan[i], k):
            for d_j in delay_vectors(plan[j], k):
                collision = simulate_delays(plan, k, {i: d_i, j: d_j})
                if collision is not None:
                    logger.debug("Delays %s / %s collide: %s", d_i, d_j, collision)
                    return collision
    return None


def check_delays_sampled(
    plan: Plan, k: int, samples: int = DEFAULT_DELAY_SAMPLES, seed: int = 0
) -> Collision | None:
    """Simulate ``samples`` random delay vectors drawn with a seeded generator."""
    rng = np.random.default_rng(seed)
    for _ in range(samples):
        delays = {}
        for agent, path in enumerate(plan):
            if path.cost == 0 or k == 0:
                continue
            total = int(rng.integers(0, k + 1))
            points = rng.integers(0, path.cost, size=total)
            delays[agent] = tuple(sorted(Counter(int(p) for p in points).items()))
        collision = simulate_delays(plan, k, delays)
        if collision is not None:
            return collision
    return None


def check_delays(plan: Plan, k: int, seed: int = 0) -> Collision | None:
    """Exhaustive delay check on small plans, sampled otherwise."""
    small = len(plan) <= EXHAUSTIVE_MAX_AGENTS and all(
        path.cost <= EXHAUSTIVE_MAX_COST for path in plan
    )
    if small:
        return check_delays_exhaustive(plan, k)
    return check_delays_sampled(plan, k, seed=seed)


def enumerate_paths(
    grid: GridMap,
    task: AgentTask,
    max_cost: int,
    min_cost: int = 0,
    constraints: Iterable[Constraint] = (),
) -> list[Path]:
    """All paths of ``task`` with cost in ``[min_cost, max_cost]``, cheapest first.

    A path of cost c is a walk of length c ending with a move into the goal
    (or the single cell when the agent starts there). Paths violating an
    applicable constraint are left out.
    """
    distances = bfs_distances(grid, task.goal)
    applicable = [c for c in constraints if applies_to(c, task.id)]
    if task.start not in distances:
        return []
    found: list[Path] = []
    walk = [task.start]

    def extend() -> None:
        cell, t = walk[-1], len(walk) - 1
        arrived = cell == task.goal and (t == 0 or walk[-2] != cell)
        if arrived and t >= min_cost:
            path = Path(tuple(walk))
            if not any(is_violated_by(c, path) for c in applicable):
                found.append(path)
        if t == max_cost:
            return
        for nxt in grid.adjacency[cell] + (cell,):
            if t + 1 + distances.get(nxt, max_cost + 1) > max_cost:
                continue
            walk.append(nxt)
            extend()
            walk.pop()

    extend()
    found.sort(key=lambda path: (path.cost, path.cells))
    return found


class _Budget:
    def __init__(self, limit: int):
        self.limit = limit
        self.used = 0

    def spend(self) -> None:
        self.used += 1
        if self.used > self.limit:
            raise OracleBudgetExceeded(self.limit)


def _search_plan(
    candidates: list[list[Path]], k: int, bound: int, budget: _Budget
) -> list[Path] | None:
    n = len(candidates)
    cheapest = [paths[0].cost if paths else 0 for paths in candidates]
    chosen: list[Path] = []

    def place(agent: int, spent: int) -> bool:
        if agent == n:
            return True
        remaining = bound - spent - sum(cheapest[agent + 1 :])
        for path in candidates[agent]:
            if path.cost > remaining:
                break
            budget.spend()
            if all(pair_is_robust(other, path, k) for other in chosen):
                chosen.append(path)
                if place(agent + 1, spent + path.cost):
                    return True
                chosen.pop()
        return False

    return list(chosen) if place(0, 0) else None


def brute_force_plan(
    instance: Instance,
    k: int | None = None,
    budget: int = COMBINATION_BUDGET,
    max_sic: int | None = None,
) -> list[Path] | None:
    """A minimum-SIC k-robust plan by iterative deepening over the SIC bound.

    Returns None when no plan exists up to ``max_sic``.

    Raises:
        OracleBudgetExceeded: After ``budget`` path combinations were tested.
    """
    k = instance.k if k is None else k
    distances = [bfs_distances(instance.grid, t.goal) for t in instance.tasks]
    optima = [d.get(t.start) for d, t in zip(distances, instance.tasks)]
    if any(opt is None for opt in optima):
        return None
    lower = sum(o for o in optima if o is not None)
    tracker = _Budget(budget)
    bound = lower
    while max_sic is None or bound <= max_sic:
        slack = bound - lower
        candidates = [
            enumerate_paths(instance.grid, task, opt + slack)
            for task, opt in zip(instance.tasks, optima)
            if opt is not None
        ]
        plan = _search_plan(candidates, k, bound, tracker)
        if plan is not None:
            logger.debug("Oracle: SIC %d after %d combinations", bound, tracker.used)
            return plan
        bound += 1
    return None


def brute_force_optimal(
    instance: Instance,
    k: int | None = None,
    budget: int = COMBINATION_BUDGET,
    max_sic: int | None = None,
) -> int | None:
    """Optimal SIC of ``instance``, or None when infeasible up to ``max_sic``."""
    try:
        plan = brute_force_plan(instance, k, budget, max_sic)
    except OracleBudgetExceeded:
        logger.warning("Oracle combination budget of %d exhausted", budget)
        raise
    return sum_of_costs(plan) if plan is not None else None


def _satisfies(constraints: Iterable[Constraint], plan: Plan) -> bool:
    return not any(
        applies_to(c, agent) and is_violated_by(c, path)
        for c in constraints
        for agent, path in enumerate(plan)
    )


def check_branch_completeness(
    instance: Instance,
    parent: Sequence[Constraint],
    branches: Sequence[Sequence[Constraint]],
    max_sic: int,
    k: int | None = None,
    budget: int = COMBINATION_BUDGET,
) -> list[tuple[Path, Path]]:
    """Plans allowed at the parent but by none of the children.

    Enumerates every k-robust plan of a two-agent instance with SIC at most
    ``max_sic`` that satisfies ``parent``; an empty result means the split
    loses no plan.
    """
    if instance.n_agents != 2:
        raise ValueError("branch completeness is checked on two-agent instances")
    k = instance.k if k is None else k
    first, second = instance.tasks
    distances = [bfs_distances(instance.grid, t.goal) for t in instance.tasks]
    opt_first, opt_second = (d[t.start] for d, t in zip(distances, instance.tasks))
    paths_first = enumerate_paths(
        instance.grid, first, max_sic - opt_second, constraints=parent
    )
    paths_second = enumerate_paths(
        instance.grid, second, max_sic - opt_first, constraints=parent
    )
    tracker = _Budget(budget)
    lost = []
    for p in paths_first:
        for q in paths_second:
            if p.cost + q.cost > max_sic:
                break
            tracker.spend()
            plan = (p, q)
            if not pair_is_robust(p, q, k):
                continue
            if not any(_satisfies(branch, plan) for branch in branches):
                lost.append(plan)
    return lost


def _crosses(barrier: Barrier, path: Path) -> bool:
    return any(is_violated_by(c, path) for c in barrier)


def find_barrier_counterexample(
    grid: GridMap,
    tasks: Mapping[int, AgentTask],
    k: int,
    barriers: Mapping[str, Barrier],
    a1: int,
    a2: int,
    budget: int = COMBINATION_BUDGET,
) -> tuple[Path, Path] | None:
    """A path pair crossing all four barriers without a k-delay conflict.

    Paths of each agent range over costs from optimal to optimal + k.
    """
    pools = {}
    for agent, role in ((a1, "a1"), (a2, "a2")):
        task = tasks[agent]
        optimal = bfs_distances(grid, task.goal)[task.start]
        pools[agent] = [
            path
            for path in enumerate_paths(grid, task, optimal + k, min_cost=optimal)
            if _crosses(barriers[f"{role}_entrance"], path)
            and _crosses(barriers[f"{role}_exit"], path)
        ]
    tracker = _Budget(budget)
    for p in pools[a1]:
        for q in pools[a2]:
            tracker.spend()
            if pair_is_robust(p, q, k):
                return p, q
    return None
