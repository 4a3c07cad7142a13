"""Solution JSON.

Schema (stable)::

    {
      "instance": str,
      "k": int,
      "sic": int | null,
      "outcome": "solved" | "timeout" | "infeasible" | "error",
      "paths": [[[x, y], ...], ...],   # one list of cells per agent, t = 0..cost
      "stats": {ct_expanded, ct_generated, lowlevel_expansions, pruned_children,
                horizon_hits, conflicts_by_type, rectangle_conflict_ratio,
                wall_time}
    }
"""

import json
from dataclasses import dataclass, field

from krobust_mapf.plans import Path
from krobust_mapf.solver import Solution


@dataclass
class SolutionRecord:
    """A Solution as read back from JSON."""

    instance: str
    k: int
    sic: int | None
    outcome: str
    plan: tuple[Path, ...]
    stats: dict = field(default_factory=dict)


def solution_to_dict(solution: Solution, timings: bool = True) -> dict:
    stats = solution.stats.as_dict()
    if not timings:
        stats["wall_time"] = 0.0
    return {
        "instance": solution.instance,
        "k": solution.k,
        "sic": solution.sic,
        "outcome": solution.outcome.value,
        "paths": [[list(cell) for cell in path.cells] for path in solution.plan],
        "stats": stats,
    }


def solution_to_json(solution: Solution, timings: bool = True) -> str:
    return json.dumps(solution_to_dict(solution, timings), indent=2)


def solution_from_json(text: str) -> SolutionRecord:
    """Parse Solution JSON; raises ValueError on missing keys or bad cells."""
    try:
        data = json.loads(text)
        plan = tuple(Path.from_cells(cells) for cells in data["paths"])
        return SolutionRecord(
            instance=str(data.get("instance", "")),
            k=int(data["k"]),
            sic=None if data.get("sic") is None else int(data["sic"]),
            outcome=str(data["outcome"]),
            plan=plan,
            stats=dict(data.get("stats", {})),
        )
    except (KeyError, TypeError, ValueError) as e:
        raise ValueError(f"invalid solution JSON: {e}") from e
