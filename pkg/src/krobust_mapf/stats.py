"""Success-rate tables for benchmark result files."""

from pathlib import Path

from rich.console import Console
from rich.table import Table

from krobust_mapf.benchmark import GroupSummary, read_rows, summarize
from krobust_mapf.formatting import format_percentage


def build_table(summaries: list[GroupSummary], title: str) -> Table:
    table = Table(title=title, show_edge=False)
    table.add_column("k", justify="right", no_wrap=True)
    table.add_column("Agents", justify="right", no_wrap=True)
    table.add_column("Variant", justify="left")
    table.add_column("Solved", justify="right", no_wrap=True)
    table.add_column("%", justify="right", no_wrap=True)
    table.add_column("CT nodes", justify="right")
    table.add_column("ms", justify="right")

    for summary in summaries:
        table.add_row(
            str(summary.k),
            str(summary.n),
            summary.variant,
            f"{summary.solved}/{summary.runs}",
            format_percentage(summary.solved, summary.runs),
            "-" if summary.mean_ct_expanded is None else f"{summary.mean_ct_expanded:.1f}",
            "-" if summary.mean_wall_time_ms is None else f"{summary.mean_wall_time_ms:.0f}",
        )
    return table


def display_stats(results: Path, console: Console | None = None) -> list[GroupSummary]:
    """Print success rate and mean metrics per (k, agents, variant)."""
    console = console or Console()
    rows = read_rows(results)
    if not rows:
        console.print(f"No benchmark rows found in '{results}'.")
        return []
    summaries = summarize(rows)
    console.print(build_table(summaries, f"{results.name}: {len(rows)} runs"))
    return summaries
