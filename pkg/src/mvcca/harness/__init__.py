"""Experiment harness: configuration, runners, emission and the CLI."""
