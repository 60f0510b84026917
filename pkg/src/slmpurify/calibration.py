"""Fitting the three free source knobs to a measured visibility chain.

The knobs are ``mu_spatial`` (residual spatial coherence), ``alpha_L`` at a
fixed ``pump_fwhm`` (only their product enters) and ``kappa_L`` (phase-matching
width).  Each stage's visibility equals ``|C|`` at that stage, so the fit works
on ``synthesize_coherence`` directly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares

from .physics import SourceConfig
from .slm import analytic_optimum
from .synthesis import STAGES, synthesize_coherence

MEASURED_VISIBILITY = {"none": 0.423, "temporal": 0.616, "full": 0.886}


@dataclass(frozen=True)
class CalibrationResult:
    config: SourceConfig
    visibilities: dict
    targets: dict
    residual_norm: float
    success: bool


def stage_visibilities(cfg: SourceConfig, program=None) -> dict:
    program = analytic_optimum(cfg) if program is None else program
    return {s: abs(synthesize_coherence(cfg, program, s).c) for s in STAGES}


def _with_knobs(cfg: SourceConfig, x) -> SourceConfig:
    mu, alpha_l, log_kappa = x
    return cfg.with_updates(mu_spatial=float(mu), alpha_L=float(alpha_l), kappa_L=float(10.0 ** log_kappa))


def calibrate(base: SourceConfig | None = None, targets: dict | None = None,
              start=(0.9, 1.5, 3.0)) -> CalibrationResult:
    """Least-squares fit of (mu_spatial, alpha_L, log10 kappa_L) to the stage visibilities.

    All other fields of ``base`` (pump width, geometry, slits, quadrature)
    stay fixed.
    """
    base = SourceConfig() if base is None else base
    targets = dict(MEASURED_VISIBILITY if targets is None else targets)
    program = analytic_optimum(base)

    def residuals(x):
        v = stage_visibilities(_with_knobs(base, x), program)
        return np.array([v[s] - targets[s] for s in STAGES])

    fit = least_squares(residuals, np.asarray(start, dtype=float),
                        bounds=([0.0, 0.0, 0.0], [1.0, 50.0, 6.0]), x_scale=(0.1, 1.0, 0.5),
                        xtol=1e-12, ftol=1e-12, gtol=1e-12)
    cfg = _with_knobs(base, fit.x)
    vis = stage_visibilities(cfg, program)
    return CalibrationResult(config=cfg, visibilities=vis, targets=targets,
                             residual_norm=float(math.sqrt(sum((vis[s] - targets[s]) ** 2 for s in STAGES))),
                             success=bool(fit.success))
