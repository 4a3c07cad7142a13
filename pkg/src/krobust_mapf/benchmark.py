"""Benchmark runner: solve instances with each variant and write one row per run."""

import csv
import json
import logging
from collections import defaultdict
from collections.abc import Iterable, Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import TextIO

from krobust_mapf.archetypes import generate_archetype
from krobust_mapf.errors import InstanceError
from krobust_mapf.formatting import format_decimal, wall_time_ms
from krobust_mapf.mapio import (
    AgentTask,
    GridMap,
    Instance,
    build_instance,
    parse_map,
    parse_scen,
)
from krobust_mapf.oracle import validate_k_robust
from krobust_mapf.solver import Outcome, solve
from krobust_mapf.variants import SolverConfig

logger = logging.getLogger(__name__)

CSV_COLUMNS = (
    "map",
    "scen",
    "n",
    "k",
    "variant",
    "outcome",
    "sic",
    "ct_expanded",
    "ct_generated",
    "rectangle_conflict_ratio",
    "wall_time_ms",
)
DEFAULT_SCENARIOS = 5


@dataclass(frozen=True)
class Job:
    """One solver run: an instance under one variant configuration."""

    map_name: str
    scen_name: str
    instance: Instance
    config: SolverConfig


def _row(job: Job, outcome: str, sic=None, stats=None) -> dict:
    return {
        "map": job.map_name,
        "scen": job.scen_name,
        "n": job.instance.n_agents,
        "k": job.config.k,
        "variant": job.config.name,
        "outcome": outcome,
        "sic": "" if sic is None else sic,
        "ct_expanded": stats.ct_expanded if stats else 0,
        "ct_generated": stats.ct_generated if stats else 0,
        "rectangle_conflict_ratio": format_decimal(
            stats.rectangle_conflict_ratio if stats else 0.0
        ),
        "wall_time_ms": wall_time_ms(stats.wall_time) if stats else 0,
    }


def run_job(job: Job) -> dict:
    """Solve one job; failures become rows with outcome ``error``."""
    try:
        solution = solve(job.instance, job.config)
    except Exception as e:
        logger.error("%s on %s failed: %s", job.config.name, job.instance.name, e)
        return _row(job, Outcome.ERROR.value)
    if solution.solved:
        violation = validate_k_robust(solution.plan, solution.k, job.instance)
        if violation is not None:
            logger.error(
                "%s on %s returned an invalid plan: %s",
                job.config.name,
                job.instance.name,
                violation,
            )
            return _row(job, Outcome.ERROR.value, solution.sic, solution.stats)
    return _row(job, solution.outcome.value, solution.sic, solution.stats)


class RowWriter:
    """Single writer for CSV or JSON-lines rows, flushed after every row."""

    def __init__(self, stream: TextIO, out: str = "csv", timings: bool = True):
        if out not in ("csv", "json"):
            raise ValueError(f"unknown output format {out!r}")
        self.stream = stream
        self.out = out
        self.timings = timings
        self._csv = csv.DictWriter(stream, fieldnames=CSV_COLUMNS, lineterminator="\n")
        if out == "csv":
            self._csv.writeheader()
            stream.flush()

    def write(self, row: dict) -> None:
        if not self.timings:
            row = {**row, "wall_time_ms": 0}
        if self.out == "csv":
            self._csv.writerow(row)
        else:
            self.stream.write(json.dumps(row) + "\n")
        self.stream.flush()


def run_benchmark(
    jobs: Sequence[Job],
    writer: RowWriter,
    workers: int = 1,
) -> list[dict]:
    """Run every job and write its row as soon as it is known.

    Rows are written in job order whatever the number of workers.

    Args:
        jobs: Runs to perform.
        writer: Destination of the rows.
        workers: Worker processes; 1 runs in-process.

    Returns:
        The rows written.
    """
    rows = []
    logger.info("Running %d benchmark jobs with %d worker(s)", len(jobs), workers)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results: Iterable[dict] = pool.map(run_job, jobs)
            for row in results:
                writer.write(row)
                rows.append(row)
    else:
        for job in jobs:
            row = run_job(job)
            writer.write(row)
            rows.append(row)
    return rows


def scenario_jobs(
    map_path: Path,
    scen_paths: Sequence[Path],
    agent_counts: Sequence[int],
    ks: Sequence[int],
    variants: Sequence[SolverConfig],
    time_limit: float,
    seed: int = 0,
) -> list[Job]:
    """Jobs for the first n tasks of each scenario, for every n, k and variant.

    Raises:
        InstanceError: If a scenario has fewer tasks than requested.
    """
    grid: GridMap = parse_map(map_path.read_text(encoding="utf-8"))
    jobs = []
    for scen_path in scen_paths:
        tasks: list[AgentTask] = parse_scen(scen_path.read_text(encoding="utf-8"), grid)
        for n in agent_counts:
            if n > len(tasks):
                raise InstanceError(
                    f"{scen_path.name} has {len(tasks)} tasks, {n} requested"
                )
            for k in ks:
                instance = build_instance(grid, tasks[:n], k, name=scen_path.stem)
                for variant in variants:
                    config = variant.with_run(k, time_limit, seed)
                    jobs.append(Job(map_path.name, scen_path.name, instance, config))
    return jobs


def archetype_jobs(
    kind: str,
    param: int,
    ks: Sequence[int],
    variants: Sequence[SolverConfig],
    time_limit: float,
    seed: int = 0,
    scenarios: int = 1,
) -> list[Job]:
    """Jobs for a generated archetype; random instances use one seed per scenario."""
    jobs = []
    count = scenarios if kind == "random" else 1
    for k in ks:
        for offset in range(count):
            instance = generate_archetype(kind, param, k, seed + offset)
            scen_name = f"seed-{seed + offset}" if kind == "random" else "-"
            for variant in variants:
                config = variant.with_run(k, time_limit, seed)
                jobs.append(Job(instance.name, scen_name, instance, config))
    return jobs


def read_rows(path: Path) -> list[dict]:
    """Read rows back from a CSV or JSON-lines benchmark file."""
    text = path.read_text(encoding="utf-8")
    if text.lstrip().startswith("{"):
        return [json.loads(line) for line in text.splitlines() if line.strip()]
    return list(csv.DictReader(text.splitlines()))


@dataclass
class GroupSummary:
    n: int
    k: int
    variant: str
    runs: int
    solved: int
    mean_ct_expanded: float | None
    mean_wall_time_ms: float | None

    @property
    def success_rate(self) -> float:
        return self.solved / self.runs if self.runs else 0.0

    def as_dict(self) -> dict:
        return {
            "n": self.n,
            "k": self.k,
            "variant": self.variant,
            "runs": self.runs,
            "solved": self.solved,
            "success_rate": self.success_rate,
            "mean_ct_expanded": self.mean_ct_expanded,
            "mean_wall_time_ms": self.mean_wall_time_ms,
        }


def _mean(values: list[float]) -> float | None:
    return sum(values) / len(values) if values else None


def summarize(rows: Iterable[dict]) -> list[GroupSummary]:
    """Success rate and means over solved runs per (n, k, variant), from rows alone."""
    groups: dict[tuple[int, int, str], list[dict]] = defaultdict(list)
    for row in rows:
        groups[(int(row["n"]), int(row["k"]), str(row["variant"]))].append(row)
    summaries = []
    for (n, k, variant), group in groups.items():
        solved = [row for row in group if row["outcome"] == Outcome.SOLVED.value]
        summaries.append(
            GroupSummary(
                n=n,
                k=k,
                variant=variant,
                runs=len(group),
                solved=len(solved),
                mean_ct_expanded=_mean([float(row["ct_expanded"]) for row in solved]),
                mean_wall_time_ms=_mean([float(row["wall_time_ms"]) for row in solved]),
            )
        )
    summaries.sort(key=lambda s: (s.k, s.n, s.variant))
    return summaries

