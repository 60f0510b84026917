#!/usr/bin/env python3
"""Compare the compiled and NumPy kernel backends on representative workloads.

Usage: python3 benchmarks/bench_kernels.py [--repeat N]

Workloads: the 101x101 weighted phase sum behind every coherence evaluation,
and the 16-setting likelihood gradient called inside each MLE iteration.
Reports best-of-N wall time per call and the maximum result difference.
"""
from __future__ import annotations

import argparse
import timeit

import numpy as np

from slmpurify.kernels import available_backends
from slmpurify.physics import SourceConfig
from slmpurify.slm import analytic_optimum, arm_phase
from slmpurify.synthesis import spatial_grid
from slmpurify.tomography import BELL_TARGETS, default_setting_set, projector_array


def workloads():
    cfg = SourceConfig()
    theta, w2 = spatial_grid(cfg)
    prog = analytic_optimum(cfg)
    k = cfg.beta_L_over_gamma
    row = k * theta + arm_phase(prog, "signal", theta, cfg)
    col = -k * theta + arm_phase(prog, "idler", theta, cfg)
    proj = projector_array(default_setting_set())
    psi = BELL_TARGETS["phi+"]
    counts = 6000.0 * np.einsum("kab,ba->k", proj, np.outer(psi, psi.conj())).real
    x = np.random.default_rng(0).normal(size=16)
    return {
        "weighted_phase_sum(101x101)": ("weighted_phase_sum", (w2, row, col)),
        "poisson_nll_grad(16 settings)": ("poisson_nll_grad", (x, proj, counts, 6000.0)),
    }


def _flatten(result):
    parts = result if isinstance(result, tuple) else (result,)
    return np.concatenate([np.atleast_1d(np.asarray(p, dtype=complex)).ravel() for p in parts])


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    backends = available_backends()
    print(f"backends: {', '.join(backends)}")
    for label, (name, call_args) in workloads().items():
        times, results = {}, {}
        for bname, mod in backends.items():
            fn = getattr(mod, name)
            number = max(1, int(0.2 / max(timeit.timeit(lambda: fn(*call_args), number=1), 1e-7)))
            best = min(timeit.repeat(lambda: fn(*call_args), number=number, repeat=args.repeat)) / number
            times[bname], results[bname] = best, _flatten(fn(*call_args))
        line = "  ".join(f"{b}: {t * 1e6:10.1f} us" for b, t in times.items())
        if "cython" in times:
            diff = np.max(np.abs(results["cython"] - results["python"]))
            line += f"  speedup {times['python'] / times['cython']:5.2f}x  max|diff| {diff:.2e}"
        print(f"{label:32s} {line}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
