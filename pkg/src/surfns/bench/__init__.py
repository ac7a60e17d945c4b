"""Benchmark harness: manufactured-solution convergence and deforming spheres."""
from .cases import (DeformCase, ManufacturedCase, asymmetric_residual_rate, deform_forcing,
                    manufactured_forcing)
from .experiments import correlation_div_constraint, run_convergence, run_deform, run_manufactured
from .norms import ErrorRecorder, ErrorRow, ErrorTable, surface_errors, time_norm

__all__ = [
    "DeformCase", "ManufacturedCase", "asymmetric_residual_rate", "deform_forcing",
    "manufactured_forcing", "run_convergence", "run_deform", "run_manufactured",
    "correlation_div_constraint", "ErrorRecorder", "ErrorRow", "ErrorTable",
    "surface_errors", "time_norm",
]
