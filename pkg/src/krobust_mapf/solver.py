"""k-robust conflict-based search with CBSH heuristic and symmetry reasoning.

The constraint tree is searched best-first on f = g + h. A node's conflicts
are classified lazily when it is first popped: plain cardinality from the
agents' optimal MDDs, plus rectangle, corridor and target findings when the
corresponding reasoning is enabled. The node is re-queued if its classified
heuristic raises f. Replanned agents steer around the other agents' current
paths whenever that costs nothing.
"""

import heapq
import logging
import time
from collections.abc import Sequence
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Union

from krobust_mapf.conflicts import Cardinality, Conflict, classify_conflict, detect_conflicts
from krobust_mapf.constraints import (
    Constraint,
    ConstraintTable,
    Edge,
    RangeVertex,
    applies_to,
    is_violated_by,
)
from krobust_mapf.corridor import CorridorFinding, corridor_branches, detect_corridor
from krobust_mapf.heuristic import cardinal_graph_heuristic
from krobust_mapf.lowlevel import (
    AvoidanceTable,
    DistanceTable,
    SearchCounter,
    distance_table,
    plan_path,
)
from krobust_mapf.mapio import Instance
from krobust_mapf.mdd import MDD, build_mdd, build_reach_graph, violates_all_paths
from krobust_mapf.plans import Path, sum_of_costs
from krobust_mapf.rectangle import RectangleFinding, detect_rectangle, rectangle_branches
from krobust_mapf.target import TargetFinding, detect_target, target_branches
from krobust_mapf.variants import SolverConfig

logger = logging.getLogger(__name__)

Finding = Union[RectangleFinding, CorridorFinding, TargetFinding]

CONFLICT_KINDS = ("rectangle", "corridor", "target", "vertex", "edge")
# Precedence among findings of the same cardinality class.
FINDING_RANK = {"rectangle": 0, "corridor": 1, "target": 2}


class Outcome(str, Enum):
    SOLVED = "solved"
    TIMEOUT = "timeout"
    INFEASIBLE = "infeasible"
    ERROR = "error"


@dataclass
class SolverStats:
    """Search counters reported with every solution."""

    ct_expanded: int = 0
    ct_generated: int = 0
    lowlevel_expansions: int = 0
    pruned_children: int = 0
    horizon_hits: int = 0
    conflicts_by_type: dict[str, int] = field(
        default_factory=lambda: {kind: 0 for kind in CONFLICT_KINDS}
    )
    wall_time: float = 0.0

    @property
    def resolved_conflicts(self) -> int:
        return sum(self.conflicts_by_type.values())

    @property
    def rectangle_conflict_ratio(self) -> float:
        """Share of resolved conflicts that were split as rectangles."""
        total = self.resolved_conflicts
        return self.conflicts_by_type["rectangle"] / total if total else 0.0

    def as_dict(self) -> dict:
        return {
            "ct_expanded": self.ct_expanded,
            "ct_generated": self.ct_generated,
            "lowlevel_expansions": self.lowlevel_expansions,
            "pruned_children": self.pruned_children,
            "horizon_hits": self.horizon_hits,
            "conflicts_by_type": dict(self.conflicts_by_type),
            "rectangle_conflict_ratio": self.rectangle_conflict_ratio,
            "wall_time": self.wall_time,
        }


@dataclass
class Solution:
    outcome: Outcome
    plan: tuple[Path, ...]
    sic: int | None
    stats: SolverStats
    k: int
    instance: str = ""

    @property
    def solved(self) -> bool:
        return self.outcome is Outcome.SOLVED


@dataclass(frozen=True)
class Candidate:
    """A conflict ready to be split, plainly or through a symmetry finding."""

    conflict: Conflict
    cardinality: Cardinality
    finding: Finding | None = None

    @property
    def kind(self) -> str:
        return self.finding.kind if self.finding is not None else self.conflict.kind

    @property
    def agents(self) -> tuple[int, int]:
        if self.finding is not None:
            a, b = self.finding.agents
            return min(a, b), max(a, b)
        return self.conflict.agents

    def priority(self) -> tuple:
        """Cardinal first, findings before plain conflicts, then earliest time."""
        return (
            self.cardinality.rank,
            0 if self.finding is not None else 1,
            FINDING_RANK.get(self.kind, 0),
            self.conflict.t,
            self.agents,
            self.conflict.sort_key(),
        )


@dataclass(eq=False)
class CTNode:
    constraints: tuple[Constraint, ...]
    paths: tuple[Path, ...]
    g: int
    h: int
    conflicts: tuple[Conflict, ...]
    parent: "CTNode | None" = None
    resolved: str | None = None
    seq: int = 0
    candidates: list[Candidate] | None = None
    tables: dict[int, ConstraintTable] = field(default_factory=dict, repr=False)

    @property
    def f(self) -> int:
        return self.g + self.h

    def table(self, agent: int) -> ConstraintTable:
        if agent not in self.tables:
            self.tables[agent] = ConstraintTable.for_agent(self.constraints, agent)
        return self.tables[agent]


class _Timeout(Exception):
    pass


class ConstraintTreeSearch:
    """One solver run: owns the open list, MDD caches and statistics."""

    def __init__(self, instance: Instance, config: SolverConfig):
        self.instance = instance
        self.config = config
        self.k = config.k if config.k is not None else instance.k
        self.grid = instance.grid
        self.tasks = instance.tasks
        self.stats = SolverStats()
        self.counter = SearchCounter()
        self.distances: list[DistanceTable] = [
            distance_table(self.grid, task.goal) for task in self.tasks
        ]
        self._mdds: dict[tuple, MDD] = {}
        self._open: list[tuple[int, int, int, int, CTNode]] = []
        self._seq = 0
        self._started = 0.0

    # MDD cache keyed by the agent's applicable constraints.

    def mdd(self, node: CTNode, agent: int, slack: int = 0) -> MDD:
        table = node.table(agent)
        cost = node.paths[agent].cost
        key = ("mdd", agent, table.signature, cost, slack)
        if key not in self._mdds:
            self._mdds[key] = build_mdd(
                self.grid,
                self.tasks[agent],
                table,
                slack,
                cost=cost,
                heuristic=self.distances[agent],
            )
        return self._mdds[key]

    def reach(self, node: CTNode, agent: int, depth: int) -> MDD:
        table = node.table(agent)
        key = ("reach", agent, table.signature, depth)
        if key not in self._mdds:
            self._mdds[key] = build_reach_graph(self.grid, self.tasks[agent], table, depth)
        return self._mdds[key]

    def _check_time(self) -> None:
        if time.perf_counter() - self._started >= self.config.time_limit:
            raise _Timeout

    def _push(self, node: CTNode) -> None:
        heapq.heappush(
            self._open, (node.f, node.h, len(node.conflicts), node.seq, node)
        )

    def _next_seq(self) -> int:
        self._seq += 1
        return self._seq

    def _plan(
        self,
        constraints: tuple[Constraint, ...],
        agent: int,
        hint: int,
        others: Sequence[Path] = (),
    ) -> Path | None:
        table = ConstraintTable.for_agent(constraints, agent)
        return plan_path(
            self.grid,
            self.tasks[agent],
            table,
            hint,
            k=self.k,
            heuristic=self.distances[agent],
            counter=self.counter,
            avoid=AvoidanceTable.from_paths(others, self.k),
        )

    def root(self) -> CTNode | None:
        paths = []
        for task in self.tasks:
            path = self._plan((), task.id, 0, paths)
            if path is None:
                logger.info("Agent %d has no path at the root", task.id)
                return None
            paths.append(path)
        return CTNode(
            constraints=(),
            paths=tuple(paths),
            g=sum_of_costs(paths),
            h=0,
            conflicts=tuple(detect_conflicts(paths, self.k)),
            seq=self._next_seq(),
        )

    def _finding_cardinality(
        self,
        node: CTNode,
        sides: Sequence[tuple[int, Sequence[Constraint]]],
    ) -> Cardinality:
        first, second = (
            violates_all_paths(self.mdd(node, agent, 0), constraints)
            for agent, constraints in sides
        )
        return Cardinality.from_sides(first, second)

    def _findings(self, node: CTNode, conflict: Conflict) -> list[Finding]:
        i, j = conflict.a_i, conflict.a_j
        paths = node.paths
        findings: list[Finding] = []
        if self.config.rectangle:
            rectangle = detect_rectangle(
                conflict,
                paths[i],
                paths[j],
                self.k,
                self.grid,
                kmdd=lambda agent: self.mdd(node, agent, self.k),
                reach=lambda agent, depth: self.reach(node, agent, depth),
                mdd=lambda agent: self.mdd(node, agent, 0),
            )
            if rectangle is not None:
                findings.append(rectangle)
        if self.config.corridor:
            corridor = detect_corridor(
                conflict,
                self.grid,
                {i: self.tasks[i], j: self.tasks[j]},
                {i: paths[i], j: paths[j]},
                {i: node.table(i), j: node.table(j)},
                self.k,
            )
            if corridor is not None:
                c1, c2 = corridor_branches(corridor)
                cardinality = self._finding_cardinality(
                    node, ((corridor.a1, (c1,)), (corridor.a2, (c2,)))
                )
                findings.append(_with_cardinality(corridor, cardinality))
        if self.config.target:
            target = detect_target(conflict, paths, self.k)
            if target is not None:
                late, early = target_branches(target)
                cardinality = self._finding_cardinality(
                    node, ((target.blocker, late), (target.other, early))
                )
                findings.append(_with_cardinality(target, cardinality))
        return findings

    def classify(self, node: CTNode) -> list[Candidate]:
        """Classify every conflict of ``node`` into a split candidate."""
        if node.candidates is not None:
            return node.candidates
        candidates = []
        for conflict in node.conflicts:
            self._check_time()
            cardinality = classify_conflict(
                conflict,
                self.mdd(node, conflict.a_i, 0),
                self.mdd(node, conflict.a_j, 0),
            )
            options = [Candidate(conflict, cardinality)]
            options += [
                Candidate(conflict, finding.cardinality, finding)
                for finding in self._findings(node, conflict)
            ]
            candidates.append(min(options, key=Candidate.priority))
        node.candidates = candidates
        return candidates

    def heuristic(self, node: CTNode) -> int:
        """Minimum vertex cover of the node's cardinal conflict graph, or 0."""
        if self.config.heuristic == "none" or not node.conflicts:
            return 0
        edges = [
            candidate.agents
            for candidate in self.classify(node)
            if candidate.cardinality is Cardinality.CARDINAL
        ]
        return cardinal_graph_heuristic(edges)

    def select_conflict(self, node: CTNode) -> Candidate:
        """The candidate to split: best class, findings first, earliest, lowest agents."""
        candidates = self.classify(node)
        if not candidates:
            raise ValueError("select_conflict called on a conflict-free node")
        return min(candidates, key=Candidate.priority)

    def split(self, candidate: Candidate) -> tuple[tuple[Constraint, ...], ...]:
        finding = candidate.finding
        if isinstance(finding, RectangleFinding):
            return rectangle_branches(finding)
        if isinstance(finding, CorridorFinding):
            return tuple((c,) for c in corridor_branches(finding))
        if isinstance(finding, TargetFinding):
            return target_branches(finding)
        c = candidate.conflict
        if c.kind == "edge":
            assert c.to_cell is not None
            return (
                (Edge(c.a_i, c.cell, c.to_cell, c.t),),
                (Edge(c.a_j, c.to_cell, c.cell, c.t),),
            )
        return (
            (RangeVertex(c.a_i, c.cell, c.t, c.t + self.k),),
            (RangeVertex(c.a_j, c.cell, c.t, c.t + self.k),),
        )

    def branch(self, node: CTNode, candidate: Candidate) -> list[CTNode]:
        """Children of ``node`` for ``candidate``; infeasible children are dropped."""
        children = []
        for added in self.split(candidate):
            child = self._child(node, added, candidate.kind)
            if child is None:
                self.stats.pruned_children += 1
            else:
                children.append(child)
        return children

    def _child(
        self, node: CTNode, added: Sequence[Constraint], kind: str
    ) -> CTNode | None:
        constraints = node.constraints + tuple(added)
        paths = list(node.paths)
        affected = [
            agent
            for agent in range(len(paths))
            if any(applies_to(c, agent) and is_violated_by(c, paths[agent]) for c in added)
        ]
        for agent in affected:
            others = [p for other, p in enumerate(paths) if other != agent]
            path = self._plan(constraints, agent, paths[agent].cost, others)
            if path is None:
                return None
            paths[agent] = path
        g = sum_of_costs(paths)
        child = CTNode(
            constraints=constraints,
            paths=tuple(paths),
            g=g,
            h=max(0, node.f - g),
            conflicts=tuple(detect_conflicts(paths, self.k)),
            parent=node,
            resolved=kind,
            seq=self._next_seq(),
        )
        if logger.isEnabledFor(logging.DEBUG):
            self._validate(child)
        return child

    def _validate(self, node: CTNode) -> None:
        for agent, path in enumerate(node.paths):
            for c in node.constraints:
                assert not (
                    applies_to(c, agent) and is_violated_by(c, path)
                ), f"agent {agent} path violates {c}"
        assert node.g == sum_of_costs(node.paths)

    def _solution(self, outcome: Outcome, node: CTNode | None = None) -> Solution:
        self.stats.lowlevel_expansions = self.counter.expansions
        self.stats.horizon_hits = self.counter.horizon_hits
        self.stats.wall_time = time.perf_counter() - self._started
        if self.counter.horizon_hits:
            logger.warning(
                "Low-level search horizon reached %d time(s)", self.counter.horizon_hits
            )
        plan = node.paths if node is not None else ()
        return Solution(
            outcome=outcome,
            plan=plan,
            sic=node.g if node is not None else None,
            stats=self.stats,
            k=self.k,
            instance=self.instance.name,
        )

    def run(self) -> Solution:
        self._started = time.perf_counter()
        try:
            root = self.root()
            if root is None:
                return self._solution(Outcome.INFEASIBLE)
            self.stats.ct_generated += 1
            self._push(root)
            while self._open:
                self._check_time()
                *_, node = heapq.heappop(self._open)
                if node.conflicts and node.candidates is None:
                    self.classify(node)
                    h = self.heuristic(node)
                    if h > node.h:
                        node.h = h
                        self._push(node)
                        continue
                self.stats.ct_expanded += 1
                if not node.conflicts:
                    logger.info(
                        "Solved %s with SIC %d after %d expansions",
                        self.instance.name or "instance",
                        node.g,
                        self.stats.ct_expanded,
                    )
                    return self._solution(Outcome.SOLVED, node)
                candidate = self.select_conflict(node)
                self.stats.conflicts_by_type[candidate.kind] += 1
                logger.debug(
                    "Expand node %d (f=%d, %d conflicts): %s %s",
                    node.seq,
                    node.f,
                    len(node.conflicts),
                    candidate.cardinality.value,
                    candidate.kind,
                )
                for child in self.branch(node, candidate):
                    self.stats.ct_generated += 1
                    self._push(child)
        except _Timeout:
            logger.info("Time limit of %gs reached", self.config.time_limit)
            return self._solution(Outcome.TIMEOUT)
        return self._solution(Outcome.INFEASIBLE)


def _with_cardinality(finding: Finding, cardinality: Cardinality) -> Finding:
    return replace(finding, cardinality=cardinality)


def solve(instance: Instance, config: SolverConfig | None = None) -> Solution:
    """Find a minimum-SIC k-robust plan for ``instance``.

    Args:
        instance: The problem; ``instance.k`` is used unless ``config.k`` is set.
        config: Heuristic, reasoning toggles and time limit.

    Returns:
        A Solution whose outcome is solved, timeout or infeasible.
    """
    return ConstraintTreeSearch(instance, config or SolverConfig()).run()
