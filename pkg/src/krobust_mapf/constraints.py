"""Constraint kinds imposed by the constraint tree and per-agent lookup tables."""

from collections import defaultdict
from collections.abc import Iterable
from dataclasses import dataclass, field
from typing import Union

from krobust_mapf.mapio import Cell
from krobust_mapf.plans import Path


@dataclass(frozen=True, order=True)
class RangeVertex:
    """``agent`` may not occupy ``cell`` at any t in ``[t_lo, t_hi]``."""

    agent: int
    cell: Cell
    t_lo: int
    t_hi: int

    def __post_init__(self) -> None:
        if not 0 <= self.t_lo <= self.t_hi:
            raise ValueError(f"invalid range [{self.t_lo}, {self.t_hi}]")


@dataclass(frozen=True, order=True)
class VertexFromOn:
    """Affected agents may not occupy ``cell`` at any t >= ``t_lo``.

    With ``all_except`` set the constraint binds every agent except ``agent``.
    """

    agent: int
    cell: Cell
    t_lo: int
    all_except: bool = False


@dataclass(frozen=True, order=True)
class MaxLength:
    """The completion time of ``agent`` must not exceed ``T``."""

    agent: int
    T: int


@dataclass(frozen=True, order=True)
class MinLength:
    """The completion time of ``agent`` must be at least ``T``."""

    agent: int
    T: int


@dataclass(frozen=True, order=True)
class Edge:
    """``agent`` may not move ``u -> v`` arriving at ``t``; only used when k = 0."""

    agent: int
    u: Cell
    v: Cell
    t: int


Constraint = Union[RangeVertex, VertexFromOn, MaxLength, MinLength, Edge]


def applies_to(constraint: Constraint, agent: int) -> bool:
    if isinstance(constraint, VertexFromOn) and constraint.all_except:
        return constraint.agent != agent
    return constraint.agent == agent


def is_violated_by(constraint: Constraint, path: Path) -> bool:
    """True when ``path`` breaks ``constraint`` (applicability is not checked)."""
    if isinstance(constraint, RangeVertex):
        return any(
            path.at(t) == constraint.cell
            for t in range(constraint.t_lo, constraint.t_hi + 1)
        )
    if isinstance(constraint, VertexFromOn):
        last = max(constraint.t_lo, path.cost)
        return any(
            path.at(t) == constraint.cell for t in range(constraint.t_lo, last + 1)
        )
    if isinstance(constraint, MaxLength):
        return path.cost > constraint.T
    if isinstance(constraint, MinLength):
        return path.cost < constraint.T
    return (
        constraint.t >= 1
        and path.at(constraint.t - 1) == constraint.u
        and path.at(constraint.t) == constraint.v
    )


def violated_constraints(
    constraints: Iterable[Constraint], agent: int, path: Path
) -> list[Constraint]:
    return [
        c for c in constraints if applies_to(c, agent) and is_violated_by(c, path)
    ]


@dataclass
class ConstraintTable:
    """All constraints binding one agent, indexed for the low-level searches."""

    agent: int
    ranges: dict[Cell, list[tuple[int, int]]] = field(
        default_factory=lambda: defaultdict(list)
    )
    from_on: dict[Cell, int] = field(default_factory=dict)
    edges: set[tuple[Cell, Cell, int]] = field(default_factory=set)
    min_length: int = 0
    max_length: int | None = None
    last_time: int = 0
    signature: frozenset[Constraint] = frozenset()

    @classmethod
    def for_agent(
        cls, constraints: Iterable[Constraint], agent: int
    ) -> "ConstraintTable":
        table = cls(agent)
        applicable = frozenset(c for c in constraints if applies_to(c, agent))
        table.signature = applicable
        for c in applicable:
            if isinstance(c, RangeVertex):
                table.ranges[c.cell].append((c.t_lo, c.t_hi))
                table.last_time = max(table.last_time, c.t_hi)
            elif isinstance(c, VertexFromOn):
                table.from_on[c.cell] = min(c.t_lo, table.from_on.get(c.cell, c.t_lo))
                table.last_time = max(table.last_time, c.t_lo)
            elif isinstance(c, MinLength):
                table.min_length = max(table.min_length, c.T)
                table.last_time = max(table.last_time, c.T)
            elif isinstance(c, MaxLength):
                if table.max_length is None or c.T < table.max_length:
                    table.max_length = c.T
            else:
                table.edges.add((c.u, c.v, c.t))
                table.last_time = max(table.last_time, c.t)
        return table

    def blocked(self, cell: Cell, t: int) -> bool:
        from_t = self.from_on.get(cell)
        if from_t is not None and t >= from_t:
            return True
        return any(lo <= t <= hi for lo, hi in self.ranges.get(cell, ()))

    def edge_blocked(self, u: Cell, v: Cell, t: int) -> bool:
        return bool(self.edges) and (u, v, t) in self.edges

    def settle_time(self, goal: Cell) -> int | None:
        """Earliest t from which the agent may hold ``goal`` forever, or None."""
        if goal in self.from_on:
            return None
        return max((hi + 1 for _, hi in self.ranges.get(goal, ())), default=0)

    def can_finish(self, goal: Cell, t: int) -> bool:
        """Whether arriving at ``goal`` at ``t`` can be the final arrival."""
        if t < self.min_length:
            return False
        if self.max_length is not None and t > self.max_length:
            return False
        settle = self.settle_time(goal)
        return settle is not None and t >= settle

    @property
    def stable_time(self) -> int:
        """From this timestep on, the table no longer depends on time."""
        return max(self.last_time + 1, self.min_length)
