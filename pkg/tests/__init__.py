"""Tests for krobust-mapf."""
