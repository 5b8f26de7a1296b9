"""Validation studies and the error measures used to score them."""

from .cases import (
    CASES, CaseStudy, NrmseReport, NrmseRow, SOFT_TISSUE, get_case, run_case, run_constrained,
    run_constrained_compression, run_constrained_extension, run_penalty_sweep, run_unconstrained_compression,
)
from .metrics import InsufficientNeighbours, NormalizationError, mls_map, nrmse, nrmse_vector

__all__ = [
    "CASES", "CaseStudy", "NrmseReport", "NrmseRow", "SOFT_TISSUE", "get_case", "run_case",
    "run_constrained", "run_constrained_compression", "run_constrained_extension",
    "run_penalty_sweep", "run_unconstrained_compression",
    "InsufficientNeighbours", "NormalizationError", "mls_map", "nrmse", "nrmse_vector",
]
