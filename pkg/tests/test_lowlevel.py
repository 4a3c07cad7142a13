"""Tests for constraints and the single-agent space-time search."""

import math

import numpy as np
import pytest

from krobust_mapf.constraints import (
    ConstraintTable,
    Edge,
    MaxLength,
    MinLength,
    RangeVertex,
    VertexFromOn,
    applies_to,
    is_violated_by,
    violated_constraints,
)
from krobust_mapf.lowlevel import (
    AvoidanceTable,
    SearchCounter,
    earliest_arrival,
    plan_path,
)
from krobust_mapf.mapio import AgentTask, GridMap
from krobust_mapf.oracle import enumerate_paths
from krobust_mapf.plans import Path
from tests.helpers import grid_from_rows, path

CORRIDOR = grid_from_rows(".....")
TASK = AgentTask(0, (0, 0), (4, 0))


class TestConstraints:
    """Tests for constraint applicability and violation checks."""

    def test_invalid_range(self):
        """Test that an inverted time range is rejected."""
        with pytest.raises(ValueError):
            RangeVertex(0, (1, 1), 3, 2)

    def test_all_except_applies_to_others(self):
        """Test that all-except constraints skip only the named agent."""
        constraint = VertexFromOn(0, (2, 2), 3, all_except=True)
        assert applies_to(constraint, 1)
        assert not applies_to(constraint, 0)

    def test_range_violation(self):
        """Test range violations inside and outside the window."""
        p = path((0, 0), (1, 0), (2, 0))
        assert is_violated_by(RangeVertex(0, (1, 0), 0, 1), p)
        assert not is_violated_by(RangeVertex(0, (1, 0), 2, 5), p)

    def test_from_on_covers_goal_waits(self):
        """Test that a from-on constraint past the path end hits the goal wait."""
        p = path((0, 0), (1, 0))
        assert is_violated_by(VertexFromOn(0, (1, 0), 10), p)
        assert not is_violated_by(VertexFromOn(0, (0, 0), 1), p)

    def test_length_constraints(self):
        """Test minimum and maximum completion times."""
        p = path((0, 0), (1, 0), (2, 0))
        assert is_violated_by(MinLength(0, 3), p)
        assert not is_violated_by(MinLength(0, 2), p)
        assert is_violated_by(MaxLength(0, 1), p)

    def test_edge_violation(self):
        """Test that edge constraints match the move and its arrival time."""
        p = path((0, 0), (1, 0), (2, 0))
        assert is_violated_by(Edge(0, (1, 0), (2, 0), 2), p)
        assert not is_violated_by(Edge(0, (1, 0), (2, 0), 1), p)

    def test_violated_constraints_filters_agent(self):
        """Test that constraints on other agents are ignored."""
        p = path((0, 0), (1, 0))
        constraints = [RangeVertex(0, (1, 0), 1, 1), RangeVertex(1, (1, 0), 1, 1)]
        assert violated_constraints(constraints, 0, p) == [constraints[0]]


class TestConstraintTable:
    """Tests for the per-agent constraint table."""

    def test_tightest_length_bounds(self):
        """Test that the tightest length bounds are kept."""
        table = ConstraintTable.for_agent(
            [MaxLength(0, 9), MaxLength(0, 6), MinLength(0, 2), MinLength(0, 4)], 0
        )
        assert table.max_length == 6
        assert table.min_length == 4

    def test_blocked_and_stable_time(self):
        """Test vertex lookups and the stable time."""
        table = ConstraintTable.for_agent(
            [RangeVertex(0, (1, 0), 2, 3), VertexFromOn(0, (2, 0), 5)], 0
        )
        assert table.blocked((1, 0), 3)
        assert not table.blocked((1, 0), 4)
        assert table.blocked((2, 0), 50)
        assert table.stable_time == 6

    def test_settle_time(self):
        """Test goal settle times with a goal range and a from-on constraint."""
        table = ConstraintTable.for_agent([RangeVertex(0, (4, 0), 5, 5)], 0)
        assert table.settle_time((4, 0)) == 6
        assert table.settle_time((3, 0)) == 0
        blocked = ConstraintTable.for_agent([VertexFromOn(0, (4, 0), 2)], 0)
        assert blocked.settle_time((4, 0)) is None


class TestPlanPath:
    """Tests for plan_path."""

    def test_unconstrained(self):
        """Test the shortest path in a corridor."""
        result = plan_path(CORRIDOR, TASK, [])
        assert result == path((0, 0), (1, 0), (2, 0), (3, 0), (4, 0))

    def test_start_is_goal(self):
        """Test an agent that starts on its goal."""
        result = plan_path(CORRIDOR, AgentTask(0, (2, 0), (2, 0)), [])
        assert result == Path(((2, 0),))

    def test_range_forces_waits(self):
        """Test that a two-step range in a corridor costs two waits."""
        result = plan_path(CORRIDOR, TASK, [RangeVertex(0, (2, 0), 2, 3)])
        assert result is not None
        assert result.cost == 6
        assert result.at(2) != (2, 0) and result.at(3) != (2, 0)

    def test_min_length(self):
        """Test that a minimum length delays the final arrival."""
        result = plan_path(CORRIDOR, TASK, [MinLength(0, 5)])
        assert result is not None
        assert result.cost == 5
        assert result.goal == (4, 0)

    def test_max_length_below_optimum(self):
        """Test that an unreachable maximum length makes the agent infeasible."""
        assert plan_path(CORRIDOR, TASK, [MaxLength(0, 3)]) is None

    def test_goal_blocked_forever(self):
        """Test that a from-on constraint on the goal makes the agent infeasible."""
        assert plan_path(CORRIDOR, TASK, [VertexFromOn(0, (4, 0), 2)]) is None

    def test_goal_range_after_arrival(self):
        """Test that the agent must not settle before a goal range ends."""
        result = plan_path(CORRIDOR, TASK, [RangeVertex(0, (4, 0), 5, 5)])
        assert result is not None
        assert result.cost == 6
        assert result.at(5) != (4, 0)

    def test_edge_constraint_forces_wait(self):
        """Test that a forbidden move costs one wait."""
        result = plan_path(CORRIDOR, TASK, [Edge(0, (1, 0), (2, 0), 2)])
        assert result is not None
        assert result.cost == 5

    def test_detour_around_blocked_cell(self):
        """Test a detour when waiting does not help."""
        grid = GridMap.open(3, 2)
        task = AgentTask(0, (0, 0), (2, 0))
        result = plan_path(grid, task, [VertexFromOn(0, (1, 0), 0)])
        assert result is not None
        assert result.cost == 4
        assert (1, 0) not in result.cells

    def test_other_agent_constraints_ignored(self):
        """Test that constraints on another agent do not bind."""
        result = plan_path(CORRIDOR, TASK, [RangeVertex(1, (2, 0), 0, 9)])
        assert result is not None
        assert result.cost == 4

    def test_counter(self):
        """Test that expansions are counted."""
        counter = SearchCounter()
        plan_path(CORRIDOR, TASK, [], counter=counter)
        assert counter.expansions > 0
        assert counter.horizon_hits == 0

    @pytest.mark.parametrize("seed", range(20))
    def test_matches_enumeration(self, seed: int):
        """Test the cost against every path enumerated under random constraints."""
        grid = grid_from_rows("...", ".@.", "...")
        task = AgentTask(0, (0, 0), (2, 2))
        rng = np.random.default_rng(seed)
        cells = sorted(grid.cells())
        constraints = []
        for _ in range(rng.integers(1, 6)):
            cell = cells[rng.integers(len(cells))]
            t_lo = int(rng.integers(1, 6))
            constraints.append(RangeVertex(0, cell, t_lo, t_lo + int(rng.integers(0, 3))))
        found = plan_path(grid, task, constraints)
        paths = enumerate_paths(grid, task, 9, constraints=constraints)
        if found is None:
            assert paths == []
            return
        assert found.is_valid_on(grid)
        assert not any(is_violated_by(c, found) for c in constraints)
        if found.cost > 9:
            assert paths == []
        else:
            assert paths[0].cost == found.cost


class TestAvoidance:
    """Tests for the soft-conflict tie-break."""

    def test_count(self):
        """Test visits within k and paths parked at their goals."""
        table = AvoidanceTable.from_paths([path((0, 0), (1, 0), (2, 0))], 1)
        assert table.count((1, 0), 0) == 1
        assert table.count((1, 0), 2) == 1
        assert table.count((1, 0), 3) == 0
        assert table.count((2, 0), 3) == 1
        assert table.count((2, 0), 9) == 1
        assert table.count((0, 1), 1) == 0

    @pytest.mark.parametrize("parked,expected", [((1, 0), (0, 1)), ((0, 1), (1, 0))])
    def test_steers_around_parked_agent(self, parked, expected):
        """Test that an equal-cost path avoids a cell held by another agent."""
        avoid = AvoidanceTable.from_paths([path(parked)], 0)
        result = plan_path(GridMap.open(2, 2), AgentTask(0, (0, 0), (1, 1)), [], avoid=avoid)
        assert result == path((0, 0), expected, (1, 1))

    def test_never_raises_cost(self):
        """Test that unavoidable soft conflicts keep the optimal cost."""
        avoid = AvoidanceTable.from_paths([path((4, 0), (3, 0), (2, 0), (1, 0), (0, 0))], 0)
        result = plan_path(CORRIDOR, TASK, [], avoid=avoid)
        assert result is not None
        assert result.cost == 4

    def test_constraints_still_bind(self):
        """Test that avoidance does not override hard constraints."""
        avoid = AvoidanceTable.from_paths([path((0, 1))], 0)
        grid = GridMap.open(2, 2)
        result = plan_path(
            grid,
            AgentTask(0, (0, 0), (1, 1)),
            [RangeVertex(0, (1, 0), 1, 1)],
            avoid=avoid,
        )
        assert result == path((0, 0), (0, 1), (1, 1))


class TestEarliestArrival:
    """Tests for earliest_arrival."""

    def test_open_grid(self, open_grid):
        """Test arrival time on an open grid."""
        assert earliest_arrival(open_grid, ((0, 0), 0), (3, 0)) == 3

    def test_offset_start_time(self, open_grid):
        """Test that the start time is added."""
        assert earliest_arrival(open_grid, ((0, 0), 4), (2, 0)) == 6

    def test_blocked_target(self, open_grid):
        """Test that a blocked target is unreachable."""
        assert earliest_arrival(open_grid, ((0, 0), 0), (3, 0), blocked=[(3, 0)]) == math.inf

    def test_wall(self):
        """Test that a wall makes the target unreachable."""
        grid = grid_from_rows(".@.")
        assert earliest_arrival(grid, ((0, 0), 0), (2, 0)) == math.inf

    def test_constraints_delay_arrival(self):
        """Test that vertex constraints delay the arrival."""
        table = ConstraintTable.for_agent([RangeVertex(0, (1, 0), 1, 2)], 0)
        assert earliest_arrival(CORRIDOR, ((0, 0), 0), (2, 0), table) == 4
