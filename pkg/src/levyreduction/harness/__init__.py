"""Scenario configuration, ensemble runs, statistical checks and output."""
