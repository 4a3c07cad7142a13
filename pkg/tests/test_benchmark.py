"""Tests for the benchmark runner and result summaries."""

import csv
import io
import json
from pathlib import Path
from unittest import mock

import pytest

from krobust_mapf import benchmark
from krobust_mapf.archetypes import rectangle_instance
from krobust_mapf.benchmark import (
    CSV_COLUMNS,
    Job,
    RowWriter,
    archetype_jobs,
    read_rows,
    run_benchmark,
    run_job,
    scenario_jobs,
    summarize,
)
from krobust_mapf.errors import InstanceError
from krobust_mapf.mapio import AgentTask, GridMap, render_map, render_scen
from krobust_mapf.solver import Outcome, Solution, SolverStats
from krobust_mapf.variants import SolverConfig, get_variants
from tests.helpers import path


def _job(variant: str = "KCBSH-RM", k: int = 0) -> Job:
    [config] = get_variants([variant])
    return Job("rectangle-2", "-", rectangle_instance(2, k), config.with_run(k, 10.0))


def _row(**overrides) -> dict:
    row = {
        "map": "m",
        "scen": "s",
        "n": 2,
        "k": 1,
        "variant": "KCBS",
        "outcome": "solved",
        "sic": 9,
        "ct_expanded": 3,
        "ct_generated": 5,
        "rectangle_conflict_ratio": "0.0000",
        "wall_time_ms": 12,
    }
    row.update(overrides)
    return row


@pytest.fixture
def scenario_files(tmp_path: Path) -> tuple[Path, Path]:
    grid = GridMap.open(4, 4)
    tasks = [AgentTask(0, (0, 0), (3, 0)), AgentTask(1, (0, 3), (3, 3))]
    map_path = tmp_path / "open-4.map"
    map_path.write_text(render_map(grid))
    scen_path = tmp_path / "open-4-random-1.scen"
    scen_path.write_text(render_scen(tasks, grid, map_path.name))
    return map_path, scen_path


class TestRunJob:
    """Tests for run_job."""

    def test_solved_row(self):
        """Test the row of a solved rectangle instance."""
        row = run_job(_job())
        assert set(row) == set(CSV_COLUMNS)
        assert row["outcome"] == "solved"
        assert row["sic"] == 9
        assert row["n"] == 2
        assert row["k"] == 0
        assert row["variant"] == "KCBSH-RM"

    def test_exception_becomes_error_row(self):
        """Test that a crashing solver yields an error row."""
        with mock.patch.object(benchmark, "solve", side_effect=RuntimeError("boom")):
            row = run_job(_job())
        assert row["outcome"] == "error"
        assert row["sic"] == ""
        assert row["ct_expanded"] == 0

    def test_invalid_plan_becomes_error_row(self):
        """Test that a plan failing validation is reported as an error."""
        bad = (
            path((1, 0), (1, 1), (1, 2), (2, 2), (2, 3)),
            path((0, 1), (1, 1), (2, 1), (3, 1), (3, 2)),
        )
        solution = Solution(Outcome.SOLVED, bad, 8, SolverStats(), 0)
        with mock.patch.object(benchmark, "solve", return_value=solution):
            row = run_job(_job())
        assert row["outcome"] == "error"
        assert row["sic"] == 8


class TestRowWriter:
    """Tests for RowWriter."""

    def test_csv_header(self):
        """Test that CSV output starts with the column header."""
        stream = io.StringIO()
        RowWriter(stream, "csv").write(_row())
        lines = stream.getvalue().splitlines()
        assert lines[0] == ",".join(CSV_COLUMNS)
        assert lines[1] == "m,s,2,1,KCBS,solved,9,3,5,0.0000,12"

    def test_json_lines(self):
        """Test one JSON object per line without a header."""
        stream = io.StringIO()
        writer = RowWriter(stream, "json")
        writer.write(_row())
        writer.write(_row(sic=10))
        lines = stream.getvalue().splitlines()
        assert [json.loads(line)["sic"] for line in lines] == [9, 10]

    def test_no_timings(self):
        """Test that wall times are zeroed on request."""
        stream = io.StringIO()
        RowWriter(stream, "json", timings=False).write(_row())
        assert json.loads(stream.getvalue())["wall_time_ms"] == 0

    def test_unknown_format(self):
        """Test that unknown formats are rejected."""
        with pytest.raises(ValueError):
            RowWriter(io.StringIO(), "xml")


class TestRunBenchmark:
    """Tests for run_benchmark."""

    def test_rows_in_job_order(self):
        """Test that every job is written once, in order."""
        jobs = [_job("KCBS"), _job("KCBSH-RM")]
        stream = io.StringIO()
        rows = run_benchmark(jobs, RowWriter(stream, "csv", timings=False))
        assert [row["variant"] for row in rows] == ["KCBS", "KCBSH-RM"]
        written = list(csv.DictReader(stream.getvalue().splitlines()))
        assert [row["sic"] for row in written] == ["9", "9"]
        assert {row["wall_time_ms"] for row in written} == {"0"}


class TestJobs:
    """Tests for job construction."""

    def test_archetype_jobs(self):
        """Test one job per k and variant for a fixed archetype."""
        variants = [SolverConfig("A"), SolverConfig("B")]
        jobs = archetype_jobs("rectangle", 2, [0, 1], variants, 5.0)
        assert len(jobs) == 4
        assert {job.scen_name for job in jobs} == {"-"}
        assert [job.config.k for job in jobs] == [0, 0, 1, 1]
        assert all(job.config.time_limit == 5.0 for job in jobs)

    def test_random_archetype_seeds(self):
        """Test that random archetypes use one seed per scenario."""
        jobs = archetype_jobs("random", 2, [1], [SolverConfig()], 5.0, seed=4, scenarios=3)
        assert [job.scen_name for job in jobs] == ["seed-4", "seed-5", "seed-6"]
        assert jobs[0].map_name == "random-6-6-2-s4"

    def test_scenario_jobs(self, scenario_files):
        """Test jobs built from a map and scenario file."""
        map_path, scen_path = scenario_files
        jobs = scenario_jobs(map_path, [scen_path], [1, 2], [1], [SolverConfig()], 5.0)
        assert [job.instance.n_agents for job in jobs] == [1, 2]
        assert jobs[0].map_name == "open-4.map"
        assert jobs[0].scen_name == "open-4-random-1.scen"

    def test_too_many_agents(self, scenario_files):
        """Test that asking for more tasks than the scenario has raises."""
        map_path, scen_path = scenario_files
        with pytest.raises(InstanceError, match="2 tasks, 3 requested"):
            scenario_jobs(map_path, [scen_path], [3], [1], [SolverConfig()], 5.0)


class TestReadRows:
    """Tests for read_rows."""

    def test_csv(self, tmp_path: Path):
        """Test reading a CSV result file."""
        stream = io.StringIO()
        RowWriter(stream, "csv").write(_row())
        results = tmp_path / "results.csv"
        results.write_text(stream.getvalue())
        [row] = read_rows(results)
        assert row["variant"] == "KCBS"
        assert row["sic"] == "9"

    def test_json_lines(self, tmp_path: Path):
        """Test reading a JSON-lines result file."""
        results = tmp_path / "results.jsonl"
        results.write_text(json.dumps(_row()) + "\n" + json.dumps(_row(k=2)) + "\n")
        assert [row["k"] for row in read_rows(results)] == [1, 2]


class TestSummarize:
    """Tests for summarize."""

    def test_groups(self):
        """Test success rate and means over solved runs only."""
        rows = [
            _row(ct_expanded=2, wall_time_ms=10),
            _row(ct_expanded=4, wall_time_ms=30),
            _row(outcome="timeout", ct_expanded=100, wall_time_ms=1000),
            _row(variant="KCBSH", k=0),
        ]
        summaries = summarize(rows)
        assert [(s.k, s.variant) for s in summaries] == [(0, "KCBSH"), (1, "KCBS")]
        group = summaries[1]
        assert (group.runs, group.solved) == (3, 2)
        assert group.success_rate == pytest.approx(2 / 3)
        assert group.mean_ct_expanded == 3.0
        assert group.mean_wall_time_ms == 20.0

    def test_no_solved_runs(self):
        """Test that means are None when nothing was solved."""
        [group] = summarize([_row(outcome="timeout")])
        assert group.mean_ct_expanded is None
        assert group.as_dict()["success_rate"] == 0.0

    def test_string_fields(self):
        """Test rows read back from CSV, where every field is a string."""
        [group] = summarize([{k: str(v) for k, v in _row().items()}])
        assert (group.n, group.k) == (2, 1)
