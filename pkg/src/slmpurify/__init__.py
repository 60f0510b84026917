"""Simulation of SLM-based purification of polarization-entangled photon pairs.

Modules: ``physics`` (source model), ``filters``, ``slm`` (phase programs),
``synthesis`` (coherence, states, angular scans), ``alignment`` (program
optimizer), ``calibration``, ``tomography`` (MLE and bootstrap), ``io`` and
``cli``.
"""
from .alignment import optimize_program
from .filters import FilterModel
from .kernels import BACKEND
from .physics import ConfigError, SourceConfig
from .slm import MaskExtentError, SlmProgram, analytic_optimum, bell_state_program
from .synthesis import NumericalError, synthesize_coherence, synthesize_state, visibility
from .tomography import bootstrap_error, mle_reconstruct, simulate_counts

__all__ = [
    "BACKEND", "ConfigError", "FilterModel", "MaskExtentError", "NumericalError", "SlmProgram", "SourceConfig",
    "analytic_optimum", "bell_state_program", "bootstrap_error", "mle_reconstruct", "optimize_program",
    "simulate_counts", "synthesize_coherence", "synthesize_state", "visibility",
]
__version__ = "0.1.0"
