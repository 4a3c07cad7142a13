"""Formatting utilities for benchmark values and console output."""

from krobust_mapf.mapio import Cell
from krobust_mapf.plans import Path


def format_decimal(value: float | None, places: int = 4) -> str:
    """
    Format a number as a fixed-point string for CSV files.

    Avoids scientific notation and keeps a fixed number of decimals so
    repeated runs produce byte-identical output.

    Examples:
    - 0.5 -> "0.5000"
    - 1e-7 -> "0.0000"
    - None -> ""

    Args:
        value: The number, or None
        places: Number of decimal places

    Returns:
        Formatted string, empty for None
    """
    if value is None:
        return ""
    return f"{value:.{places}f}"


def wall_time_ms(seconds: float) -> int:
    return int(round(seconds * 1000))


def format_duration(seconds: float) -> str:
    """
    Format a duration for console display.

    Examples:
    - 0.0042 -> "4.2 ms"
    - 1.5 -> "1.50 s"
    """
    if seconds < 1:
        return f"{seconds * 1000:.1f} ms"
    return f"{seconds:.2f} s"


def format_percentage(solved: int, total: int) -> str:
    if total == 0:
        return "-"
    return f"{100 * solved / total:.1f}%"


def format_cell(cell: Cell) -> str:
    return f"({cell[0]},{cell[1]})"


def format_path(path: Path) -> str:
    """Cells joined with arrows, e.g. "(0,0) -> (1,0)"."""
    return " -> ".join(format_cell(cell) for cell in path.cells)
