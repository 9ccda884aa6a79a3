"""Experiment commands behind a cached, configurable CLI."""
