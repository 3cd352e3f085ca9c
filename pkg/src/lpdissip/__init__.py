"""Numerical and algebraic tests for L^p-dissipativity of partial differential operators."""

from .model import (
    AdmissibilityError,
    ConfigurationError,
    DataError,
    DissipError,
    DomainError,
    Exponent,
    GridFunction,
    OperatorSpec,
    Status,
    Tolerances,
    UnsupportedFeatureError,
    Verdict,
    box_grid,
    decompose_matrix,
    make_exponent,
)
from .io import SpecParseError, load_spec, spec_from_dict, spec_to_dict
from .harness import RunOptions, RunReport, run_spec, sweep

__all__ = [
    "AdmissibilityError", "ConfigurationError", "DataError", "DissipError", "DomainError",
    "Exponent", "GridFunction", "OperatorSpec", "Status", "Tolerances", "UnsupportedFeatureError",
    "Verdict", "box_grid", "decompose_matrix", "make_exponent",
    "SpecParseError", "load_spec", "spec_from_dict", "spec_to_dict",
    "RunOptions", "RunReport", "run_spec", "sweep",
]
__version__ = "0.1.0"
