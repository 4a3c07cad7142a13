"""CLI module for krobust-mapf using Click."""

import logging
from pathlib import Path

import click
from click_default_group import DefaultGroup

from krobust_mapf import __version__
from krobust_mapf.paths import MAPS_DIR

DEFAULT_VARIANTS = "KCBS,KCBSH,KCBSH-RM,KCBSH-RM-C,KCBSH-RM-C-T"


def _parse_agents(value: str) -> list[int]:
    """Parse agent counts: "5", "10..20" or "10..20:5"."""
    if ".." not in value:
        counts = [int(value)]
    else:
        start, _, rest = value.partition("..")
        stop, _, step = rest.partition(":")
        step_size = int(step) if step else 1
        if step_size <= 0:
            raise ValueError("step must be positive")
        counts = list(range(int(start), int(stop) + 1, step_size))
    if not counts or min(counts) <= 0:
        raise ValueError("agent counts must be positive")
    return counts


def agents_callback(
    ctx: click.Context, param: click.Parameter, value: str | None
) -> list[int]:
    """Callback to parse an agent range into a list of counts."""
    if value is None:
        return []
    try:
        return _parse_agents(value)
    except ValueError as e:
        raise click.BadParameter(f"{value!r}: {e}") from None


def int_list_callback(
    ctx: click.Context, param: click.Parameter, value: str
) -> list[int]:
    """Callback to parse a comma-separated list of non-negative integers."""
    try:
        values = [int(part) for part in value.split(",") if part.strip()]
    except ValueError:
        raise click.BadParameter(f"{value!r} is not a list of integers") from None
    if not values or min(values) < 0:
        raise click.BadParameter(f"{value!r} must list non-negative integers")
    return values


def name_list_callback(
    ctx: click.Context, param: click.Parameter, value: str
) -> list[str]:
    """Callback to split a comma-separated list of names."""
    return [part.strip() for part in value.split(",") if part.strip()]


def _setup_logging(verbose: int) -> None:
    from rich.console import Console
    from rich.logging import RichHandler

    level = logging.WARNING
    if verbose == 1:
        level = logging.INFO
    elif verbose > 1:
        level = logging.DEBUG
    logging.basicConfig(
        level=level,
        format="%(message)s",
        handlers=[RichHandler(console=Console(stderr=True), show_path=False)],
        force=True,
    )


@click.group(
    cls=DefaultGroup,
    default="benchmark",
    default_if_no_args=False,
    context_settings={"help_option_names": ["-h", "--help"]},
)
@click.option("-v", "--verbose", count=True, help="Log more (-vv for debug)")
@click.version_option(__version__)
def cli(verbose: int) -> None:
    """krobust-mapf - Optimal k-robust multi-agent path finding.

    Solves instances with k-CBS and rectangle, corridor and target
    reasoning, and benchmarks solver variants on movingai maps.
    """
    _setup_logging(verbose)


def _variants(names: list[str], variants_file: Path | None):
    from krobust_mapf.errors import VariantError
    from krobust_mapf.variants import get_variants

    try:
        return get_variants(names, variants_file)
    except VariantError as e:
        raise click.UsageError(str(e)) from None


def _archetype(value: str) -> tuple[str, int]:
    from krobust_mapf.archetypes import parse_archetype

    try:
        return parse_archetype(value)
    except ValueError as e:
        raise click.UsageError(str(e)) from None


map_option = click.option(
    "--map",
    "map_path",
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    help="Movingai .map file",
)
archetype_option = click.option(
    "--archetype",
    default=None,
    metavar="KIND:PARAM",
    help="Generated instance: rectangle:S, corridor:L, corridor-bypass:L, target:D, random:N",
)
variants_file_option = click.option(
    "--variants-file",
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    default=None,
    help="YAML file defining solver variants (default: the bundled presets)",
)


@cli.command(name="benchmark")
@map_option
@click.option(
    "--scen",
    "scen_paths",
    multiple=True,
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    help="Movingai .scen file (can specify multiple times)",
)
@click.option(
    "--scenarios",
    type=click.IntRange(min=1),
    default=None,
    help="Use at most this many scenarios (default: 5)",
)
@click.option(
    "--agents",
    callback=agents_callback,
    default=None,
    metavar="A..B[:STEP]",
    help="Agent counts, e.g. 10..20:5",
)
@click.option(
    "--k", "ks", default="1", callback=int_list_callback, help="Comma-separated k values"
)
@click.option(
    "--variants",
    default=DEFAULT_VARIANTS,
    callback=name_list_callback,
    help="Comma-separated solver variants",
)
@variants_file_option
@click.option("--time-limit", type=click.FloatRange(min=0, min_open=True), default=None)
@click.option("--seed", type=int, default=0, help="Seed for generated instances")
@click.option("--out", type=click.Choice(["csv", "json"]), default="csv")
@archetype_option
@click.option(
    "-o",
    "--output",
    type=click.File("w"),
    default="-",
    help="Result file (default: stdout)",
)
@click.option("--no-timings", is_flag=True, help="Write 0 in the wall time column")
@click.option("--workers", type=click.IntRange(min=1), default=1)
@click.option("--log", "save_log", is_flag=True, help="Record run metadata in benchmark_logs/")
def benchmark_cmd(
    map_path: Path | None,
    scen_paths: tuple[Path, ...],
    scenarios: int | None,
    agents: list[int],
    ks: list[int],
    variants: list[str],
    variants_file: Path | None,
    time_limit: float | None,
    seed: int,
    out: str,
    archetype: str | None,
    output,
    no_timings: bool,
    workers: int,
    save_log: bool,
) -> None:
    """Run solver variants on scenarios or generated instances."""
    from krobust_mapf.benchmark import (
        DEFAULT_SCENARIOS,
        RowWriter,
        archetype_jobs,
        run_benchmark,
        scenario_jobs,
        summarize,
    )
    from krobust_mapf.errors import KRobustError
    from krobust_mapf.variants import DEFAULT_TIME_LIMIT

    configs = _variants(variants, variants_file)
    limit = time_limit or DEFAULT_TIME_LIMIT
    count = scenarios or DEFAULT_SCENARIOS
    try:
        if archetype is not None:
            kind, param = _archetype(archetype)
            jobs = archetype_jobs(kind, param, ks, configs, limit, seed, count)
        else:
            if map_path is None or not scen_paths:
                raise click.UsageError("give --map and --scen, or --archetype")
            if not agents:
                raise click.UsageError("give at least one agent count with --agents")
            jobs = scenario_jobs(
                map_path, scen_paths[:count], agents, ks, configs, limit, seed
            )
    except KRobustError as e:
        raise click.UsageError(str(e)) from None

    writer = RowWriter(output, out, timings=not no_timings)
    rows = run_benchmark(jobs, writer, workers)

    if save_log:
        from krobust_mapf.logs import save_run_metadata

        parameters = {
            "map": map_path.name if map_path else None,
            "scen": [path.name for path in scen_paths[:count]],
            "archetype": archetype,
            "agents": agents,
            "k": ks,
            "variants": {c.name: c.reasoning for c in configs},
            "time_limit": limit,
            "seed": seed,
        }
        summary = [group.as_dict() for group in summarize(rows)]
        name = map_path.stem if map_path else str(archetype).replace(":", "-")
        log_path = save_run_metadata(name, parameters, summary)
        logging.getLogger(__name__).info("Run metadata saved to: %s", log_path)


@cli.command(name="solve")
@map_option
@click.option("--scen", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--agents", type=click.IntRange(min=1), default=None, help="Number of agents")
@archetype_option
@click.option("--k", type=click.IntRange(min=0), default=1)
@click.option("--variant", default="KCBSH-RM-C-T", help="Solver variant")
@variants_file_option
@click.option("--time-limit", type=click.FloatRange(min=0, min_open=True), default=None)
@click.option("--seed", type=int, default=0)
@click.option("-o", "--output", type=click.File("w"), default="-")
@click.option("--no-timings", is_flag=True, help="Write 0 as the wall time")
def solve_cmd(
    map_path: Path | None,
    scen: Path | None,
    agents: int | None,
    archetype: str | None,
    k: int,
    variant: str,
    variants_file: Path | None,
    time_limit: float | None,
    seed: int,
    output,
    no_timings: bool,
) -> None:
    """Solve one instance and print its solution as JSON."""
    from krobust_mapf.formatting import format_duration, format_path
    from krobust_mapf.serialization import solution_to_json
    from krobust_mapf.solver import solve

    instance = _load_instance(map_path, scen, agents, archetype, k, seed)
    (config,) = _variants([variant], variants_file)
    config = config.with_run(k, time_limit or config.time_limit, seed)
    solution = solve(instance, config)
    logger = logging.getLogger(__name__)
    logger.info(
        "%s on %s: %s, SIC %s, %d CT nodes expanded in %s",
        config.get_display_name(),
        instance.name,
        solution.outcome.value,
        solution.sic,
        solution.stats.ct_expanded,
        format_duration(solution.stats.wall_time),
    )
    for agent, path in enumerate(solution.plan):
        logger.debug("Agent %d: %s", agent, format_path(path))
    output.write(solution_to_json(solution, timings=not no_timings) + "\n")


def _load_instance(
    map_path: Path | None,
    scen: Path | None,
    agents: int | None,
    archetype: str | None,
    k: int,
    seed: int,
):
    from krobust_mapf.archetypes import generate_archetype
    from krobust_mapf.errors import KRobustError
    from krobust_mapf.mapio import load_instance

    try:
        if archetype is not None:
            kind, param = _archetype(archetype)
            return generate_archetype(kind, param, k, seed)
        if map_path is None or scen is None or agents is None:
            raise click.UsageError("give --map, --scen and --agents, or --archetype")
        return load_instance(map_path, scen, agents, k)
    except KRobustError as e:
        raise click.UsageError(str(e)) from None


@cli.command(name="stats")
@click.argument(
    "results", type=click.Path(exists=True, dir_okay=False, path_type=Path)
)
def stats_cmd(results: Path) -> None:
    """Display success rates and mean metrics from a benchmark result file."""
    from krobust_mapf.stats import display_stats

    display_stats(results)


@cli.command(name="generate")
@click.option("--width", type=click.IntRange(min=1), default=32)
@click.option("--height", type=click.IntRange(min=1), default=32)
@click.option(
    "--obstacles",
    type=click.FloatRange(min=0, max=1, max_open=True),
    default=0.1,
    help="Fraction of blocked cells",
)
@click.option("--agents", type=click.IntRange(min=1), default=20, help="Tasks per scenario")
@click.option("--scenarios", type=click.IntRange(min=1), default=5)
@click.option("--seed", type=int, default=0)
@click.option("--name", default=None, help="Base name (default: random-W-H-P)")
@click.option(
    "--output-dir",
    type=click.Path(file_okay=False, path_type=Path),
    default=MAPS_DIR,
    help="Directory for the .map and .scen files",
)
def generate_cmd(
    width: int,
    height: int,
    obstacles: float,
    agents: int,
    scenarios: int,
    seed: int,
    name: str | None,
    output_dir: Path,
) -> None:
    """Write a seeded random map with scenario files."""
    from krobust_mapf.archetypes import generate_random_map, random_tasks
    from krobust_mapf.errors import InstanceError
    from krobust_mapf.mapio import render_map, render_scen

    name = name or f"random-{width}-{height}-{round(obstacles * 100)}"
    grid = generate_random_map(width, height, obstacles, seed)
    output_dir.mkdir(parents=True, exist_ok=True)
    map_path = output_dir / f"{name}.map"
    map_path.write_text(render_map(grid), encoding="utf-8")
    click.echo(f"Wrote {map_path}")
    for index in range(1, scenarios + 1):
        try:
            tasks = random_tasks(grid, agents, seed + index)
        except InstanceError as e:
            raise click.UsageError(str(e)) from None
        scen_path = output_dir / f"{name}-random-{index}.scen"
        scen_path.write_text(render_scen(tasks, grid, map_path.name), encoding="utf-8")
        click.echo(f"Wrote {scen_path}")


@cli.command(name="validate")
@click.argument(
    "solution_file", type=click.Path(exists=True, dir_okay=False, path_type=Path)
)
@map_option
@click.option("--scen", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@archetype_option
@click.option("--k", type=click.IntRange(min=0), default=None, help="Override the solution's k")
@click.option("--seed", type=int, default=0)
@click.option(
    "--exhaustive/--sampled",
    default=None,
    help="Delay check mode (default: exhaustive on small plans)",
)
def validate_cmd(
    solution_file: Path,
    map_path: Path | None,
    scen: Path | None,
    archetype: str | None,
    k: int | None,
    seed: int,
    exhaustive: bool | None,
) -> None:
    """Check a solution for k-delay conflicts and simulated delay collisions."""
    from krobust_mapf.oracle import (
        check_delays,
        check_delays_exhaustive,
        check_delays_sampled,
        validate_k_robust,
    )
    from krobust_mapf.serialization import solution_from_json

    try:
        record = solution_from_json(solution_file.read_text(encoding="utf-8"))
    except ValueError as e:
        raise click.UsageError(str(e)) from None
    if not record.plan:
        raise click.UsageError(f"{solution_file.name} holds no plan ({record.outcome})")
    k = record.k if k is None else k
    instance = None
    if map_path is not None or archetype is not None:
        instance = _load_instance(map_path, scen, len(record.plan), archetype, k, seed)

    violation = validate_k_robust(record.plan, k, instance)
    if violation is not None:
        click.echo(f"Not {k}-robust: {violation}")
        raise SystemExit(1)
    if exhaustive is None:
        collision = check_delays(record.plan, k, seed)
    elif exhaustive:
        collision = check_delays_exhaustive(record.plan, k)
    else:
        collision = check_delays_sampled(record.plan, k, seed=seed)
    if collision is not None:
        click.echo(f"Delay simulation failed: {collision}")
        raise SystemExit(1)
    click.echo(f"OK: {len(record.plan)} paths, SIC {record.sic}, {k}-robust")
