"""Tests for the constraint tree search."""

from unittest import mock

import pytest

from krobust_mapf.archetypes import corridor_instance, rectangle_instance, target_instance
from krobust_mapf.conflicts import Cardinality, Conflict, detect_conflicts
from krobust_mapf.constraints import RangeVertex
from krobust_mapf.oracle import validate_k_robust
from krobust_mapf.rectangle import RectangleFinding
from krobust_mapf.solver import (
    Candidate,
    ConstraintTreeSearch,
    CTNode,
    Outcome,
    SolverStats,
    solve,
)
from krobust_mapf.variants import SolverConfig, get_variants
from tests.helpers import grid_from_rows, make_instance, path

ALL_VARIANTS = ["KCBS", "KCBSH", "KCBSH-RM", "KCBSH-RM-C", "KCBSH-RM-C-T"]

# Orthogonal shortest paths of the 2x2 rectangle instance, meeting at (1, 1) at t=1.
CROSSING = (
    path((1, 0), (1, 1), (1, 2), (2, 2), (2, 3)),
    path((0, 1), (1, 1), (2, 1), (3, 1), (3, 2)),
)


def _crossing_node() -> CTNode:
    return CTNode(
        constraints=(),
        paths=CROSSING,
        g=8,
        h=0,
        conflicts=tuple(detect_conflicts(CROSSING, 0)),
        seq=1,
    )


def _search(config: SolverConfig, k: int = 0) -> ConstraintTreeSearch:
    return ConstraintTreeSearch(rectangle_instance(2, k), config)


class TestSolve:
    """Tests for solve on small instances."""

    def test_single_agent(self, open_grid):
        """Test that one agent is solved at the root."""
        instance = make_instance(open_grid, [((0, 0), (3, 4))], 1)
        solution = solve(instance)
        assert solution.outcome is Outcome.SOLVED
        assert solution.sic == 7
        assert solution.stats.ct_expanded == 1
        assert solution.stats.ct_generated == 1

    def test_independent_agents(self, open_grid):
        """Test agents whose shortest paths never meet."""
        instance = make_instance(open_grid, [((0, 0), (0, 3)), ((7, 0), (7, 3))], 2)
        solution = solve(instance)
        assert solution.sic == 6
        assert solution.stats.resolved_conflicts == 0

    @pytest.mark.parametrize("variant", ALL_VARIANTS)
    def test_rectangle_optimum(self, variant: str):
        """Test that every variant finds the rectangle optimum."""
        [config] = get_variants([variant])
        solution = solve(rectangle_instance(2, 0), config)
        assert solution.outcome is Outcome.SOLVED
        assert solution.sic == 9
        assert validate_k_robust(solution.plan, 0) is None

    @pytest.mark.parametrize("variant", ["KCBSH-RM-C", "KCBSH-RM-C-T"])
    def test_corridor_optimum(self, variant: str):
        """Test that one agent waits for the other to clear the corridor."""
        [config] = get_variants([variant])
        solution = solve(corridor_instance(3, 0), config)
        assert solution.sic == 14
        assert validate_k_robust(solution.plan, 0) is None

    @pytest.mark.parametrize("variant", ["KCBSH", "KCBSH-RM-C-T"])
    def test_target_optimum(self, variant: str):
        """Test that the passing agent detours around the other's goal."""
        [config] = get_variants([variant])
        solution = solve(target_instance(2, 1), config)
        assert solution.sic == 7
        assert validate_k_robust(solution.plan, 1) is None

    def test_config_k_overrides_instance(self, open_grid):
        """Test that the configured k takes precedence."""
        instance = make_instance(open_grid, [((0, 0), (1, 0))], 0)
        solution = solve(instance, SolverConfig(k=3))
        assert solution.k == 3

    def test_timeout(self):
        """Test that a tiny time limit stops the search."""
        solution = solve(rectangle_instance(3, 1), SolverConfig(time_limit=1e-9))
        assert solution.outcome is Outcome.TIMEOUT
        assert solution.plan == ()
        assert solution.sic is None

    def test_infeasible_root(self):
        """Test the outcome when an agent has no path at the root."""
        with mock.patch.object(ConstraintTreeSearch, "root", return_value=None):
            solution = solve(rectangle_instance(2, 0))
        assert solution.outcome is Outcome.INFEASIBLE
        assert not solution.solved

    def test_instance_name(self):
        """Test that the solution carries the instance name."""
        assert solve(rectangle_instance(2, 0)).instance == "rectangle-2"


class TestClassification:
    """Tests for conflict classification and splitting."""

    def test_rectangle_candidate(self):
        """Test that the crossing is classified as a cardinal rectangle."""
        search = _search(SolverConfig(rectangle=True, heuristic="cardinal-graph"))
        node = _crossing_node()
        [candidate] = search.classify(node)
        assert candidate.kind == "rectangle"
        assert candidate.cardinality is Cardinality.CARDINAL
        assert search.heuristic(node) == 1

    def test_plain_candidate(self):
        """Test plain classification without symmetry reasoning."""
        search = _search(SolverConfig(heuristic="cardinal-graph"))
        node = _crossing_node()
        [candidate] = search.classify(node)
        assert candidate.kind == "vertex"
        assert candidate.cardinality is Cardinality.NON_CARDINAL
        assert search.heuristic(node) == 0

    def test_no_heuristic(self):
        """Test that the none heuristic is always zero."""
        search = _search(SolverConfig(rectangle=True))
        assert search.heuristic(_crossing_node()) == 0

    def test_classification_is_cached(self):
        """Test that candidates are computed once per node."""
        search = _search(SolverConfig())
        node = _crossing_node()
        assert search.classify(node) is search.classify(node)

    def test_plain_split(self):
        """Test the range constraints of a plain k-delay split."""
        search = _search(SolverConfig(), k=1)
        conflict = Conflict(0, 1, (1, 1), 1, 0)
        split = search.split(Candidate(conflict, Cardinality.NON_CARDINAL))
        assert split == (
            (RangeVertex(0, (1, 1), 1, 2),),
            (RangeVertex(1, (1, 1), 1, 2),),
        )

    def test_rectangle_children(self):
        """Test that both rectangle children raise the cost by one."""
        search = _search(SolverConfig(rectangle=True))
        node = _crossing_node()
        candidate = search.select_conflict(node)
        assert isinstance(candidate.finding, RectangleFinding)
        children = search.branch(node, candidate)
        assert [child.g for child in children] == [9, 9]
        assert all(child.resolved == "rectangle" for child in children)

    def _bottleneck_node(self) -> tuple[ConstraintTreeSearch, CTNode]:
        # Both agents must pass (1, 0) at t=1 on every shortest path.
        grid = grid_from_rows("...", "@.@")
        instance = make_instance(grid, [((0, 0), (2, 0)), ((1, 1), (0, 0))], 0)
        search = ConstraintTreeSearch(instance, SolverConfig(rectangle=True))
        paths = (path((0, 0), (1, 0), (2, 0)), path((1, 1), (1, 0), (0, 0)))
        node = CTNode(
            constraints=(),
            paths=paths,
            g=4,
            h=0,
            conflicts=tuple(detect_conflicts(paths, 0)),
            seq=1,
        )
        return search, node

    def test_cardinal_plain_beats_weaker_finding(self):
        """Test that a cardinal plain conflict outranks a non-cardinal finding."""
        search, node = self._bottleneck_node()
        weak = mock.Mock(
            cardinality=Cardinality.NON_CARDINAL, kind="corridor", agents=(0, 1)
        )
        with mock.patch.object(ConstraintTreeSearch, "_findings", return_value=[weak]):
            [candidate] = search.classify(node)
        assert candidate.finding is None
        assert candidate.kind == "vertex"
        assert candidate.cardinality is Cardinality.CARDINAL

    def test_finding_wins_ties(self):
        """Test that a finding of the same class as the plain conflict is kept."""
        search, node = self._bottleneck_node()
        strong = mock.Mock(cardinality=Cardinality.CARDINAL, kind="target", agents=(1, 0))
        with mock.patch.object(ConstraintTreeSearch, "_findings", return_value=[strong]):
            [candidate] = search.classify(node)
        assert candidate.finding is strong
        assert candidate.cardinality is Cardinality.CARDINAL

    def test_select_on_conflict_free_node(self):
        """Test that selecting from a conflict-free node is an error."""
        search = _search(SolverConfig())
        node = CTNode(constraints=(), paths=CROSSING[:1], g=4, h=0, conflicts=())
        with pytest.raises(ValueError):
            search.select_conflict(node)


class TestCandidatePriority:
    """Tests for candidate ordering."""

    def test_cardinal_before_finding(self):
        """Test that a cardinal plain conflict beats a non-cardinal finding."""
        conflict = Conflict(0, 1, (1, 1), 1, 0)
        later = Conflict(0, 1, (2, 2), 5, 0)
        plain = Candidate(later, Cardinality.CARDINAL)
        search = _search(SolverConfig(rectangle=True))
        finding = search.classify(_crossing_node())[0].finding
        symmetric = Candidate(conflict, Cardinality.NON_CARDINAL, finding)
        assert min([symmetric, plain], key=Candidate.priority) is plain

    def test_earlier_conflict_first(self):
        """Test that ties are broken by time."""
        early = Candidate(Conflict(0, 1, (1, 1), 1, 0), Cardinality.SEMI_CARDINAL)
        late = Candidate(Conflict(0, 1, (2, 2), 3, 0), Cardinality.SEMI_CARDINAL)
        assert min([late, early], key=Candidate.priority) is early


class TestSolverStats:
    """Tests for SolverStats."""

    def test_rectangle_ratio(self):
        """Test the share of rectangle splits."""
        stats = SolverStats()
        stats.conflicts_by_type["rectangle"] = 1
        stats.conflicts_by_type["vertex"] = 3
        assert stats.resolved_conflicts == 4
        assert stats.rectangle_conflict_ratio == 0.25

    def test_empty_ratio(self):
        """Test the ratio without resolved conflicts."""
        assert SolverStats().rectangle_conflict_ratio == 0.0

    def test_as_dict(self):
        """Test the serialized keys."""
        data = SolverStats().as_dict()
        assert data["conflicts_by_type"] == {
            "rectangle": 0,
            "corridor": 0,
            "target": 0,
            "vertex": 0,
            "edge": 0,
        }
        assert "wall_time" in data
