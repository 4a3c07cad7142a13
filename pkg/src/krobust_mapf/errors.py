"""Exception hierarchy shared by the solver, the oracles and the harness."""


class KRobustError(Exception):
    """Base class for all errors raised by this package."""


class MapFormatError(KRobustError):
    """A movingai ``.map`` file is malformed."""

    def __init__(self, line: int, message: str):
        self.line = line
        super().__init__(f"line {line}: {message}")


class ScenarioError(KRobustError):
    """A movingai ``.scen`` file is malformed or disagrees with its map."""

    def __init__(self, row: int, message: str):
        self.row = row
        super().__init__(f"row {row}: {message}")


class InstanceError(KRobustError):
    """An instance violates its invariants (duplicate cells, unreachable goal)."""


class InfeasiblePathError(KRobustError):
    """An MDD was requested for an agent that has no path under its constraints."""


class OracleBudgetExceeded(KRobustError):
    """The brute-force oracle gave up after exhausting its combination budget."""

    def __init__(self, budget: int):
        self.budget = budget
        super().__init__(f"oracle combination budget of {budget} exhausted")


class VariantError(KRobustError):
    """An unknown solver variant or an invalid variant option was requested."""
