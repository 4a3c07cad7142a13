"""Admissible high-level heuristic from the graph of cardinal conflicts."""

from collections.abc import Iterable

# Above this many vertices the exact cover search gives way to a matching bound.
EXACT_COVER_LIMIT = 16


def _normalize(edges: Iterable[tuple[int, int]]) -> set[tuple[int, int]]:
    return {(min(a, b), max(a, b)) for a, b in edges if a != b}


def matching_lower_bound(edges: Iterable[tuple[int, int]]) -> int:
    """Size of a greedy maximal matching, a lower bound on any vertex cover."""
    matched: set[int] = set()
    size = 0
    for a, b in sorted(_normalize(edges)):
        if a not in matched and b not in matched:
            matched.update((a, b))
            size += 1
    return size


def _has_cover(edges: list[tuple[int, int]], budget: int) -> bool:
    if not edges:
        return True
    if budget == 0:
        return False
    if matching_lower_bound(edges) > budget:
        return False
    a, b = edges[0]
    for chosen in (a, b):
        rest = [e for e in edges if chosen not in e]
        if _has_cover(rest, budget - 1):
            return True
    return False


def minimum_vertex_cover_size(edges: Iterable[tuple[int, int]]) -> int:
    """Exact minimum vertex cover size by branching on an uncovered edge.

    Examples:
        [] -> 0
        [(0, 1)] -> 1
        [(0, 1), (1, 2), (0, 2)] -> 2
    """
    edge_list = sorted(_normalize(edges))
    size = matching_lower_bound(edge_list)
    while not _has_cover(edge_list, size):
        size += 1
    return size


def cardinal_graph_heuristic(edges: Iterable[tuple[int, int]]) -> int:
    """Minimum vertex cover of the cardinal conflict graph.

    Each edge joins two agents one of which must increase its cost. Graphs
    with more than ``EXACT_COVER_LIMIT`` vertices use the matching bound.
    """
    edge_set = _normalize(edges)
    vertices = {v for edge in edge_set for v in edge}
    if len(vertices) > EXACT_COVER_LIMIT:
        return matching_lower_bound(edge_set)
    return minimum_vertex_cover_size(edge_set)
