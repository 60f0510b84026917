"""Recovering the SLM program by minimising crossed-polarizer coincidences.

Mirrors the bench procedure: polarizers at +45/-45 degrees, sweep the
offset, then the tied slope ``a1 = -a2``, and repeat until the coincidence
minimum stops moving.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .physics import SourceConfig
from .slm import SlmProgram, zero_program
from .synthesis import ANALYZER, coincidence_probability, refine_minimum, state_from_coherence, \
    synthesize_coherence

TWO_PI = 2.0 * math.pi


@dataclass
class Trace:
    parameter: str
    values: np.ndarray
    probability: np.ndarray
    round: int = 0

    def counts(self, pair_rate: float = 100.0, window: float = 30.0):
        """Expected coincidences in ``window`` seconds at ``pair_rate`` pairs/s."""
        return pair_rate * window * self.probability


@dataclass
class OptimizationResult:
    program: SlmProgram
    objective: float
    rounds: int
    converged: bool
    traces: list = field(default_factory=list)


def crossed_probability(cfg: SourceConfig, program: SlmProgram, stage: str = "full") -> float:
    c = synthesize_coherence(cfg, program, stage).c
    return coincidence_probability(state_from_coherence(c), *ANALYZER)


def sweep(cfg, program, parameter, values, stage="full"):
    """Crossed coincidence probability along one program parameter.

    ``parameter`` is a program field name, or ``"a"`` for the tied slope
    ``a1 = -a2``.
    """
    probs = np.array([crossed_probability(cfg, _set(program, parameter, v), stage) for v in values])
    return Trace(parameter, np.asarray(values, dtype=float), probs)


def _set(program: SlmProgram, parameter: str, value: float) -> SlmProgram:
    if parameter == "a":
        return program.with_updates(a1=value, a2=-value)
    return program.with_updates(**{parameter: value})


def optimize_program(cfg: SourceConfig, initial: SlmProgram | None = None, *, b_samples: int = 128,
                     a_bracket: tuple[float, float] = (-0.15, 0.15), a_samples: int = 128,
                     max_rounds: int = 10, tol: float = 1e-8, stage: str = "full") -> OptimizationResult:
    """Alternate offset and tied-slope sweeps until the objective settles.

    Only ``b1 + b2`` is physical, so the initial ``b2`` is folded into
    ``b1`` and ``b2`` stays zero.  Each sweep is a uniform grid followed by
    golden-section refinement of the best sample.
    """
    prog = initial if initial is not None else zero_program(cfg)
    prog = prog.with_updates(b1=prog.b1 + prog.b2, b2=0.0, a2=-prog.a1)
    objective = crossed_probability(cfg, prog, stage)
    traces = []
    b_grid = TWO_PI * np.arange(b_samples) / b_samples
    a_grid = np.linspace(a_bracket[0], a_bracket[1], a_samples)
    converged = False
    rounds = 0
    for rounds in range(1, max_rounds + 1):
        tr = sweep(cfg, prog, "b1", b_grid, stage)
        tr.round = rounds
        traces.append(tr)
        b1, _ = refine_minimum(lambda v: crossed_probability(cfg, _set(prog, "b1", v), stage),
                               tr.values, tr.probability)
        prog = prog.with_updates(b1=b1 % TWO_PI)

        tr = sweep(cfg, prog, "a", a_grid, stage)
        tr.round = rounds
        traces.append(tr)
        a1, _ = refine_minimum(lambda v: crossed_probability(cfg, _set(prog, "a", v), stage),
                               tr.values, tr.probability)
        prog = _set(prog, "a", a1)

        new = crossed_probability(cfg, prog, stage)
        change = abs(objective - new)
        objective = min(objective, new)
        if change < tol:
            converged = True
            break
    return OptimizationResult(program=prog, objective=objective, rounds=rounds,
                              converged=converged, traces=traces)


def figure_traces(cfg: SourceConfig, program: SlmProgram, *, b_samples: int = 128,
                  a_bracket: tuple[float, float] = (-0.15, 0.15), a_samples: int = 128,
                  stage: str = "full") -> dict:
    """Offset scans with the other offset at zero, and the tied-slope scan.

    Offsets are scanned with the optimal slopes; the slope scan uses the
    optimal offset sum on ``b1`` with ``b2 = 0``.
    """
    b_grid = TWO_PI * np.arange(b_samples) / b_samples
    a_grid = np.linspace(a_bracket[0], a_bracket[1], a_samples)
    base = program.with_updates(b1=program.b1 + program.b2, b2=0.0)
    return {
        "b1": sweep(cfg, base.with_updates(b1=0.0), "b1", b_grid, stage),
        "b2": sweep(cfg, base.with_updates(b1=0.0), "b2", b_grid, stage),
        "a": sweep(cfg, base, "a", a_grid, stage),
    }


def trace_visibility(trace: Trace) -> float:
    hi, lo = trace.probability.max(), trace.probability.min()
    return float((hi - lo) / (hi + lo))
