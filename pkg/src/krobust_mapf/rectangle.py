"""k-delay rectangle reasoning with step temporal barriers.

Two agents moving monotonically through a rooted rectangle R (corners D and
E) in orthogonal directions must meet inside R. One agent crosses the rows of
R (entrance row S1, exit row S4), the other crosses its columns (entrance
column S2, exit column S3). Each side is guarded by a step temporal barrier:
range constraints anchored at the Manhattan-optimal arrival time from a
shifted root. A pair of paths violating all four barriers conflicts, so when
every path through an agent's exit barrier also crosses its entrance barrier
the conflict is resolved by two-way branching on the exit barriers.
"""

import logging
from collections.abc import Callable, Iterable, Sequence
from dataclasses import dataclass, field
from enum import Enum

from krobust_mapf.conflicts import Cardinality, Conflict
from krobust_mapf.constraints import RangeVertex, is_violated_by
from krobust_mapf.mapio import Cell, GridMap, manhattan
from krobust_mapf.mdd import MDD, violates_all_paths
from krobust_mapf.plans import Path

logger = logging.getLogger(__name__)

Barrier = tuple[RangeVertex, ...]
VertexTime = tuple[Cell, int]


class Side(str, Enum):
    S1 = "S1"  # entrance row
    S2 = "S2"  # entrance column
    S3 = "S3"  # exit column
    S4 = "S4"  # exit row


@dataclass(frozen=True)
class Rectangle:
    """Cells between root corner ``D`` and far corner ``E``.

    ``hx`` and ``vy`` (each +1 or -1) point from ``D`` towards ``E``.
    """

    D: Cell
    E: Cell
    hx: int
    vy: int

    @property
    def area(self) -> int:
        return (abs(self.E[0] - self.D[0]) + 1) * (abs(self.E[1] - self.D[1]) + 1)

    @property
    def row_axis(self) -> Cell:
        return (self.hx, 0)

    @property
    def column_axis(self) -> Cell:
        return (0, self.vy)


def optimal_time(p: VertexTime, v: Cell) -> int:
    """Earliest arrival at ``v`` for an agent at ``p[0]`` at time ``p[1]``.

    Examples:
        optimal_time(((2, 3), 5), (4, 7)) -> 11
    """
    return p[1] + manhattan(p[0], v)


def temporal_barrier(agent: int, cells: Iterable[Cell], p: VertexTime, w: int) -> Barrier:
    """Forbid each cell from its optimal time up to ``w`` timesteps later."""
    if w < 0:
        raise ValueError(f"barrier width must be non-negative, got {w}")
    return tuple(
        RangeVertex(agent, cell, optimal_time(p, cell), optimal_time(p, cell) + w)
        for cell in cells
    )


def _mdd_keeps(kmdd: MDD | None, cell: Cell, lo: int, hi: int) -> bool:
    if kmdd is None:
        return True
    return any(kmdd.contains(cell, t) for t in range(lo, hi + 1))


def step_temporal_barrier(
    agent: int,
    side: Sequence[Cell],
    p: VertexTime,
    width: int,
    axis: Cell,
    kmdd: MDD | None = None,
) -> Barrier:
    """A temporal barrier of ``width`` extended beyond both ends of ``side``.

    The cell ``d`` steps past an end along ``axis`` is forbidden over
    ``[ot, ot + width - 2d]`` for ``d`` in ``1..width // 2``. With ``kmdd``
    given, extension cells the agent never occupies in those windows are
    left out.

    Args:
        agent: The constrained agent.
        side: The line cells, ordered along ``axis``.
        p: Root vertex-time pair of the barrier.
        width: Temporal width at the line itself.
        axis: Unit step along the line.
        kmdd: Optional k-MDD used to drop vacuous extension cells.
    """
    constraints = list(temporal_barrier(agent, side, p, width))
    first, last = side[0], side[-1]
    dx, dy = axis
    for d in range(1, width // 2 + 1):
        for cell in (
            (first[0] - dx * d, first[1] - dy * d),
            (last[0] + dx * d, last[1] + dy * d),
        ):
            lo = optimal_time(p, cell)
            hi = lo + width - 2 * d
            if _mdd_keeps(kmdd, cell, lo, hi):
                constraints.append(RangeVertex(agent, cell, lo, hi))
    return tuple(constraints)


def _span(a: int, b: int, step: int) -> range:
    return range(a, b + step, step)


def shifted_side(rect: Rectangle, side: Side, shift: int) -> tuple[Cell, ...]:
    """A side of ``rect`` moved ``shift`` cells away from its centre."""
    (dx, dy), (ex, ey) = rect.D, rect.E
    if side is Side.S1:
        y = dy - rect.vy * shift
        return tuple((x, y) for x in _span(dx, ex, rect.hx))
    if side is Side.S4:
        y = ey + rect.vy * shift
        return tuple((x, y) for x in _span(dx, ex, rect.hx))
    if side is Side.S2:
        x = dx - rect.hx * shift
        return tuple((x, y) for y in _span(dy, ey, rect.vy))
    x = ex + rect.hx * shift
    return tuple((x, y) for y in _span(dy, ey, rect.vy))


@dataclass(frozen=True)
class RectangleFinding:
    """A resolved rectangle: ``a1`` crosses the rows of R, ``a2`` its columns."""

    conflict: Conflict
    a1: int
    a2: int
    rect: Rectangle
    rt: int
    k1: int
    k2: int
    a1_entrance: Barrier
    a1_exit: Barrier
    a2_entrance: Barrier
    a2_exit: Barrier
    cardinality: Cardinality = Cardinality.NON_CARDINAL

    kind = "rectangle"

    @property
    def D(self) -> Cell:
        return self.rect.D

    @property
    def E(self) -> Cell:
        return self.rect.E

    @property
    def l1(self) -> int:
        return self.k1 // 2

    @property
    def l2(self) -> int:
        return self.k2 // 2

    @property
    def p1(self) -> VertexTime:
        return (self.D[0], self.D[1] - self.rect.vy * self.l1), self.rt - self.l1

    @property
    def p2(self) -> VertexTime:
        return (self.D[0] - self.rect.hx * self.l2, self.D[1]), self.rt - self.l2

    @property
    def agents(self) -> tuple[int, int]:
        return self.a1, self.a2


def rectangle_barriers(
    rect: Rectangle,
    rt: int,
    a1: int,
    a2: int,
    k1: int,
    k2: int,
    kmdds: dict[int, MDD] | None = None,
) -> dict[str, Barrier]:
    """The four step barriers of a candidate; exits are filtered by ``kmdds``."""
    l1, l2 = k1 // 2, k2 // 2
    p1 = ((rect.D[0], rect.D[1] - rect.vy * l1), rt - l1)
    p2 = ((rect.D[0] - rect.hx * l2, rect.D[1]), rt - l2)
    kmdds = kmdds or {}
    return {
        "a1_entrance": step_temporal_barrier(
            a1, shifted_side(rect, Side.S1, l1), p1, k2, rect.row_axis
        ),
        "a1_exit": step_temporal_barrier(
            a1, shifted_side(rect, Side.S4, l1), p1, k2, rect.row_axis, kmdds.get(a1)
        ),
        "a2_entrance": step_temporal_barrier(
            a2, shifted_side(rect, Side.S2, l2), p2, k1, rect.column_axis
        ),
        "a2_exit": step_temporal_barrier(
            a2, shifted_side(rect, Side.S3, l2), p2, k1, rect.column_axis, kmdds.get(a2)
        ),
    }


def _index(constraints: Iterable[RangeVertex]) -> dict[Cell, list[tuple[int, int]]]:
    index: dict[Cell, list[tuple[int, int]]] = {}
    for c in constraints:
        index.setdefault(c.cell, []).append((c.t_lo, c.t_hi))
    return index


def _hits(index: dict[Cell, list[tuple[int, int]]], cell: Cell, t: int) -> bool:
    return any(lo <= t <= hi for lo, hi in index.get(cell, ()))


def check_condition1(
    graph: MDD, entrance: Iterable[RangeVertex], exit: Iterable[RangeVertex]
) -> bool:
    """Whether every walk of ``graph`` violating ``exit`` also violates ``entrance``.

    Nodes violating the entrance are deleted; the check fails as soon as a
    node violating the exit stays reachable from the root.
    """
    entrance_index = _index(entrance)
    exit_index = _index(exit)
    if not exit_index:
        return True
    reached = graph.reachable(lambda cell, t: _hits(entrance_index, cell, t))
    for t, level in enumerate(reached):
        if any(_hits(exit_index, cell, t) for cell in level):
            return False
    if graph.goal_bounded and graph.goal in reached[graph.depth]:

        def after_last_level(index: dict[Cell, list[tuple[int, int]]]) -> bool:
            return any(hi > graph.depth for _, hi in index.get(graph.goal, ()))

        # Goal waits beyond the last level.
        if after_last_level(exit_index) and not after_last_level(entrance_index):
            return False
    return True


def rectangle_branches(finding: RectangleFinding) -> tuple[Barrier, Barrier]:
    """Child constraint sets: ``a1`` blocked at its exit, ``a2`` at its exit."""
    return finding.a1_exit, finding.a2_exit


def classify_rectangle(
    finding: RectangleFinding, mdd_i: MDD, mdd_j: MDD
) -> Cardinality:
    """Cardinality from whether every MDD path of each agent crosses its exit barrier.

    With optimal MDDs a crossing side means that agent's cost must rise; MDDs
    with slack k only report sides that cost more than k extra steps.
    """
    mdds = {mdd_i.agent: mdd_i, mdd_j.agent: mdd_j}
    return Cardinality.from_sides(
        violates_all_paths(mdds[finding.a1], finding.a1_exit),
        violates_all_paths(mdds[finding.a2], finding.a2_exit),
    )


@dataclass
class DetectionTrace:
    """Candidate pairs examined by :func:`detect_rectangle`, for inspection."""

    tested: list[tuple[int, int, int]] = field(default_factory=list)
    accepted: list[tuple[int, int, int]] = field(default_factory=list)


def _step(a: Cell, b: Cell) -> Cell:
    return b[0] - a[0], b[1] - a[1]


def _entry_move(path: Path, t: int) -> Cell | None:
    s = min(t, path.cost)
    cell = path.at(s)
    while s > 0 and path.at(s - 1) == cell:
        s -= 1
    if s == 0:
        return None
    return _step(path.at(s - 1), cell)


def _anchor_before(path: Path, t: int, moves: set[Cell]) -> tuple[Cell, int]:
    s = min(t, path.cost)
    while s > 0:
        step = _step(path.at(s - 1), path.at(s))
        if step != (0, 0) and step not in moves:
            break
        s -= 1
    return path.at(s), s


def _anchor_after(path: Path, t: int, moves: set[Cell]) -> Cell:
    s = min(t, path.cost)
    while s < path.cost:
        step = _step(path.at(s), path.at(s + 1))
        if step != (0, 0) and step not in moves:
            break
        s += 1
    return path.at(s)


def _closer(v: int, a: int, b: int) -> int:
    return a if abs(a - v) <= abs(b - v) else b


def _decreasing_pairs(k: int) -> list[tuple[int, int]]:
    pairs = [(k1, k2) for k1 in range(k + 1) for k2 in range(k + 1)]
    return sorted(pairs, key=lambda pair: (-(pair[0] + pair[1]), -pair[0]))


@dataclass(frozen=True)
class _Geometry:
    rect: Rectangle
    rt: int
    before: dict[int, Cell]
    after: dict[int, Cell]


def _measure(conflict: Conflict, paths: dict[int, Path]) -> _Geometry | None:
    times = {conflict.a_i: conflict.t, conflict.a_j: conflict.t_j}
    entries = {agent: _entry_move(paths[agent], times[agent]) for agent in times}
    d1, d2 = entries[conflict.a_i], entries[conflict.a_j]
    if d1 is None or d2 is None:
        return None
    if d1 == d2 or d1 == (-d2[0], -d2[1]):
        return None
    moves = {d1, d2}
    hx = d1[0] or d2[0]
    vy = d1[1] or d2[1]

    before, after, rts = {}, {}, {}
    anchor_times = {}
    for agent, t in times.items():
        before[agent], anchor_times[agent] = _anchor_before(paths[agent], t, moves)
        after[agent] = _anchor_after(paths[agent], t, moves)
    v = conflict.cell
    b_i, b_j = before[conflict.a_i], before[conflict.a_j]
    a_i, a_j = after[conflict.a_i], after[conflict.a_j]
    D = (_closer(v[0], b_i[0], b_j[0]), _closer(v[1], b_i[1], b_j[1]))
    E = (_closer(v[0], a_i[0], a_j[0]), _closer(v[1], a_i[1], a_j[1]))
    for agent in times:
        rts[agent] = anchor_times[agent] + manhattan(before[agent], D)
    rt = min(rts.values())
    return _Geometry(Rectangle(D, E, hx, vy), rt, before, after)


def _line_ok(grid: GridMap, cells: Sequence[Cell]) -> bool:
    return all(grid.is_passable(cell) for cell in cells)


def _shifts_legal(
    grid: GridMap, geometry: _Geometry, a1: int, a2: int, k1: int, k2: int
) -> bool:
    rect = geometry.rect
    l1, l2 = k1 // 2, k2 // 2
    if geometry.rt - l1 < 0 or geometry.rt - l2 < 0:
        return False
    row_in = shifted_side(rect, Side.S1, l1)
    row_out = shifted_side(rect, Side.S4, l1)
    col_in = shifted_side(rect, Side.S2, l2)
    col_out = shifted_side(rect, Side.S3, l2)
    if not all(_line_ok(grid, line) for line in (row_in, row_out, col_in, col_out)):
        return False
    # Shifted sides stay between each agent's anchor cells.
    return (
        (row_in[0][1] - geometry.before[a1][1]) * rect.vy >= 0
        and (geometry.after[a1][1] - row_out[0][1]) * rect.vy >= 0
        and (col_in[0][0] - geometry.before[a2][0]) * rect.hx >= 0
        and (geometry.after[a2][0] - col_out[0][0]) * rect.hx >= 0
    )


def detect_rectangle(
    conflict: Conflict,
    path_i: Path,
    path_j: Path,
    k: int,
    grid: GridMap,
    kmdd: Callable[[int], MDD],
    reach: Callable[[int, int], MDD],
    mdd: Callable[[int], MDD] | None = None,
    trace: DetectionTrace | None = None,
) -> RectangleFinding | None:
    """Find the strongest rectangle finding for a vertex conflict, if any.

    Candidate widths ``(k1, k2)`` are tried in decreasing order for both
    assignments of the row-crossing and column-crossing roles; a pair
    dominated by an accepted pair of the same assignment is skipped. A
    candidate is accepted when both agents satisfy Condition 1 on their
    reachability graphs and the current paths violate both exit barriers.

    Args:
        conflict: The vertex conflict.
        path_i: Current path of ``conflict.a_i``.
        path_j: Current path of ``conflict.a_j``.
        k: Robustness radius.
        grid: The map.
        kmdd: Agent -> MDD with slack k, used to filter exit barriers.
        reach: (agent, depth) -> reachability graph, used for Condition 1.
        mdd: Agent -> optimal MDD, used for cardinality; cardinality stays
            non-cardinal when omitted.
        trace: Optional record of tested and accepted candidates.

    Returns:
        The selected finding, or None.
    """
    if conflict.kind != "vertex":
        return None
    paths = {conflict.a_i: path_i, conflict.a_j: path_j}
    geometry = _measure(conflict, paths)
    if geometry is None:
        return None
    rect, rt = geometry.rect, geometry.rt
    depth = rt + manhattan(rect.D, rect.E) + 2 * k + 1
    kmdds = {agent: kmdd(agent) for agent in paths}

    findings: list[RectangleFinding] = []
    for a1, a2 in ((conflict.a_i, conflict.a_j), (conflict.a_j, conflict.a_i)):
        accepted: list[tuple[int, int]] = []
        for k1, k2 in _decreasing_pairs(k):
            if any(k1 <= a and k2 <= b for a, b in accepted):
                continue
            if trace is not None:
                trace.tested.append((a1, k1, k2))
            if not _shifts_legal(grid, geometry, a1, a2, k1, k2):
                continue
            barriers = rectangle_barriers(rect, rt, a1, a2, k1, k2, kmdds)
            if not any(is_violated_by(c, paths[a1]) for c in barriers["a1_exit"]):
                continue
            if not any(is_violated_by(c, paths[a2]) for c in barriers["a2_exit"]):
                continue
            if not check_condition1(
                reach(a1, depth), barriers["a1_entrance"], barriers["a1_exit"]
            ):
                continue
            if not check_condition1(
                reach(a2, depth), barriers["a2_entrance"], barriers["a2_exit"]
            ):
                continue
            accepted.append((k1, k2))
            if trace is not None:
                trace.accepted.append((a1, k1, k2))
            finding = RectangleFinding(conflict, a1, a2, rect, rt, k1, k2, **barriers)
            if mdd is not None:
                cardinality = classify_rectangle(finding, mdd(a1), mdd(a2))
                finding = RectangleFinding(
                    conflict, a1, a2, rect, rt, k1, k2, cardinality=cardinality, **barriers
                )
            findings.append(finding)

    if not findings:
        return None
    best = min(
        findings,
        key=lambda f: (f.cardinality.rank, -(f.k1 + f.k2), -f.rect.area),
    )
    logger.debug(
        "Rectangle D=%s E=%s rt=%d k1=%d k2=%d (%s) for %s",
        best.D,
        best.E,
        best.rt,
        best.k1,
        best.k2,
        best.cardinality.value,
        conflict,
    )
    return best
