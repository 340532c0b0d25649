"""Experiment runner: spec files in, CSV curves out."""

from .ber import BerPoint, ber_curve
from .experiments import run_experiment
from .specfile import ExperimentSpec, emit_spec, load_spec, parse_spec_text, validate_spec
from .table import ResultTable, emit_csv, load_csv

__all__ = [
    "BerPoint",
    "ExperimentSpec",
    "ResultTable",
    "ber_curve",
    "emit_csv",
    "emit_spec",
    "load_csv",
    "load_spec",
    "parse_spec_text",
    "run_experiment",
    "validate_spec",
]
