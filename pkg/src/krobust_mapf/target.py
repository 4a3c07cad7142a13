"""k-delay target reasoning: conflicts at an agent's goal after it has finished."""

from dataclasses import dataclass

from krobust_mapf.conflicts import Cardinality, Conflict
from krobust_mapf.constraints import Constraint, MaxLength, MinLength, VertexFromOn
from krobust_mapf.mapio import Cell
from krobust_mapf.plans import Path


@dataclass(frozen=True)
class TargetFinding:
    """``blocker`` holds ``goal`` from ``l``; ``other`` visits it at ``t >= l``."""

    conflict: Conflict
    blocker: int
    other: int
    goal: Cell
    l: int
    t: int
    k: int
    cardinality: Cardinality = Cardinality.NON_CARDINAL

    kind = "target"

    @property
    def threshold(self) -> int:
        return self.t + self.k

    @property
    def agents(self) -> tuple[int, int]:
        return self.blocker, self.other


def detect_target(
    conflict: Conflict, paths: dict[int, Path] | list[Path], k: int
) -> TargetFinding | None:
    """A finding when the conflict cell is a finished agent's goal.

    Examples:
        blocker at goal (4, 2) since t=1, other visits at t=3 -> l=1, t=3
    """
    if conflict.kind != "vertex":
        return None
    sides = (
        (conflict.a_i, conflict.a_j, conflict.t_j),
        (conflict.a_j, conflict.a_i, conflict.t),
    )
    for blocker, other, t in sides:
        path = paths[blocker]
        if conflict.cell == path.goal and path.cost <= t:
            return TargetFinding(conflict, blocker, other, path.goal, path.cost, t, k)
    return None


def target_branches(
    finding: TargetFinding,
) -> tuple[tuple[Constraint, ...], tuple[Constraint, ...]]:
    """Branch on the blocker finishing after ``t + k`` or by ``t + k``.

    The early-finish branch also keeps every other agent off the goal from
    ``t`` on: such a visit would fall within k of the blocker's arrival or
    after it.
    """
    late = (MinLength(finding.blocker, finding.threshold + 1),)
    early = (
        MaxLength(finding.blocker, finding.threshold),
        VertexFromOn(finding.blocker, finding.goal, finding.t, all_except=True),
    )
    return late, early
