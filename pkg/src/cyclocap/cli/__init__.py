"""Scenario-driven command-line front end."""

from cyclocap.cli.main import main

__all__ = ["main"]
