"""Experiment runner and command line interface."""

from __future__ import annotations

from .experiments import EXPERIMENTS, SCHEMAS, ExperimentSpec, ReportRow, RunResult, run_experiment

__all__ = ["EXPERIMENTS", "SCHEMAS", "ExperimentSpec", "ReportRow", "RunResult", "run_experiment"]
