"""Tests for formatting utilities."""

import pytest

from krobust_mapf.formatting import (
    format_cell,
    format_decimal,
    format_duration,
    format_path,
    format_percentage,
    wall_time_ms,
)
from tests.helpers import path


class TestFormatDecimal:
    """Tests for format_decimal function."""

    def test_none_returns_empty(self):
        """None should give an empty CSV field."""
        assert format_decimal(None) == ""

    @pytest.mark.parametrize(
        "value,expected",
        [(0.5, "0.5000"), (1e-7, "0.0000"), (0.0, "0.0000"), (1.0, "1.0000")],
    )
    def test_fixed_point(self, value: float, expected: str):
        """Values should be fixed-point, never scientific notation."""
        assert format_decimal(value) == expected

    def test_places(self):
        """The number of decimals is configurable."""
        assert format_decimal(0.123456, places=2) == "0.12"


class TestDurations:
    """Tests for wall time conversions."""

    @pytest.mark.parametrize("seconds,expected", [(0.0, 0), (0.0014, 1), (1.2345, 1234)])
    def test_wall_time_ms(self, seconds: float, expected: int):
        """Seconds should round to whole milliseconds."""
        assert wall_time_ms(seconds) == expected

    @pytest.mark.parametrize("seconds,expected", [(0.0042, "4.2 ms"), (1.5, "1.50 s")])
    def test_format_duration(self, seconds: float, expected: str):
        """Short durations use milliseconds, long ones seconds."""
        assert format_duration(seconds) == expected


class TestFormatPercentage:
    """Tests for format_percentage function."""

    def test_fraction(self):
        """Test a partial success rate."""
        assert format_percentage(1, 3) == "33.3%"

    def test_no_runs(self):
        """No runs should not divide by zero."""
        assert format_percentage(0, 0) == "-"


class TestFormatPath:
    """Tests for cell and path formatting."""

    def test_cell(self):
        """Test a single cell."""
        assert format_cell((3, 4)) == "(3,4)"

    def test_path(self):
        """Test cells joined by arrows."""
        assert format_path(path((0, 0), (1, 0), (1, 1))) == "(0,0) -> (1,0) -> (1,1)"
