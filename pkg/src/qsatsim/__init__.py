"""Structured quantum search heuristic for random k-SAT: simulator, baselines
and mean-field analyses."""
from ._accel import backend
from .sat import (
    Clause,
    EnsembleParams,
    SatInstance,
    cost,
    count_solutions,
    emit_dimacs,
    generate_instance,
    hamming,
    parse_dimacs,
)

__all__ = [
    "Clause",
    "EnsembleParams",
    "SatInstance",
    "backend",
    "cost",
    "count_solutions",
    "emit_dimacs",
    "generate_instance",
    "hamming",
    "parse_dimacs",
]
__version__ = "0.1.0"
