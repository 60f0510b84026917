"""Command-line entry point: one subcommand per figure plus a parameter sweep.

Exit codes: 0 success, 2 usage or configuration error, 3 numerical failure.
Every output file carries the hash of the effective configuration; reruns
with the same configuration, overrides and seed are byte-identical.
"""
from __future__ import annotations

import argparse
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import io
from .alignment import figure_traces, optimize_program
from .filters import FilterModel
from .physics import ConfigError, SourceConfig
from .slm import MaskExtentError, analytic_optimum, bell_state_program
from .synthesis import STAGES, NumericalError, angular_coincidence_scan, angular_singles_scan, \
    peak_center, synthesize_coherence, synthesize_state, visibility
from .tomography import BELL_TARGETS, BELL_ZETA, BootstrapError, bootstrap_error, default_setting_set, \
    fidelity, mle_reconstruct, simulate_counts

EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL = 0, 2, 3

# panel -> (kind, filter, signal offsets in rad)
ANGULAR_PRESETS = {
    "2a": ("coincidences", "bandpass_10nm", (0.0,)),
    "2b": ("coincidences", "double_longpass_qe", (0.0,)),
    "2c": ("singles", "bandpass_10nm", (0.0,)),
    "2d": ("singles", "double_longpass_qe", (0.0,)),
    "2e": ("coincidences", "bandpass_10nm", (1.8e-3, -1.8e-3)),
}


@dataclass
class RunManifest:
    command: str
    config: str | None = None
    overrides: list = field(default_factory=list)
    out: str = "out"
    seed: int = io.DEFAULT_SEED
    preset: str | None = None
    extra: dict = field(default_factory=dict)

    def settings(self) -> tuple[SourceConfig, io.RunOptions]:
        return io.load_settings(self.config, self.overrides)


def _out(manifest: RunManifest) -> Path:
    path = Path(manifest.out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _scan_rows(scan, cfg, opts):
    # rate per second: normalised rate times the configured pair rate
    return [[d * 1e3, a * 1e3, math.degrees(a), r, r * opts.pair_rate]
            for d, a, r in zip(scan.detuning, scan.angle, scan.rate)]


SCAN_HEADER = ["detuning_mrad", "idler_angle_mrad", "idler_angle_deg", "rate_normalised", "rate_per_s"]


def cmd_angular(m: RunManifest) -> list[Path]:
    cfg, opts = m.settings()
    presets = list(ANGULAR_PRESETS) if m.preset in (None, "all") else [m.preset]
    out = _out(m)
    h = io.config_hash(cfg, opts)
    written, summary = [], {}
    for name in presets:
        kind, fkind, offsets = ANGULAR_PRESETS[name]
        filt = FilterModel.from_kind(fkind, cfg)
        for off in offsets:
            rng = (opts.scan_lo, opts.scan_hi)
            if kind == "coincidences":
                scan = angular_coincidence_scan(cfg, filt, off, rng, opts.scan_points, slit=opts.scan_slit)
            else:
                scan = angular_singles_scan(cfg, filt, rng, opts.scan_points, slit=opts.scan_slit,
                                            partner_range=opts.singles_partner_range)
            suffix = "" if len(offsets) == 1 else ("_plus" if off > 0 else "_minus")
            path = io.write_csv(out / f"fig{name}{suffix}.csv", SCAN_HEADER, _scan_rows(scan, cfg, opts))
            written.append(path)
            summary[f"{name}{suffix}"] = {
                "kind": kind, "filter": fkind, "signal_offset_mrad": off * 1e3,
                "peak_center_mrad": (peak_center(scan) - cfg.theta0_idler) * 1e3, "csv": path.name,
            }
    written.append(io.write_json(out / "angular.json", {"config_hash": h, "panels": summary}))
    for key, s in summary.items():
        print(f"{key}: {s['kind']} {s['filter']} peak at {s['peak_center_mrad']:+.3f} mrad -> {s['csv']}")
    return written


def cmd_optimize(m: RunManifest) -> list[Path]:
    cfg, opts = m.settings()
    out = _out(m)
    h = io.config_hash(cfg, opts)
    a_bracket = (opts.a_bracket_lo, opts.a_bracket_hi)
    res = optimize_program(cfg, b_samples=opts.b_samples, a_bracket=a_bracket, a_samples=opts.a_samples,
                           max_rounds=opts.max_rounds)
    exact = analytic_optimum(cfg)
    c = synthesize_coherence(cfg, res.program, "full").c
    written = []
    traces = figure_traces(cfg, res.program, b_samples=opts.b_samples, a_bracket=a_bracket,
                           a_samples=opts.a_samples)
    header = ["value", "probability", f"counts_per_{opts.window_s:g}s"]
    for name, tr in traces.items():
        rows = zip(tr.values, tr.probability, tr.counts(opts.pair_rate, opts.window_s))
        written.append(io.write_csv(out / f"trace_{name}.csv", header, rows))
    hist = [[t.round, t.parameter, v, p] for t in res.traces for v, p in zip(t.values, t.probability)]
    written.append(io.write_csv(out / "optimizer_history.csv", ["round", "parameter", "value", "probability"],
                                hist))
    doc = {
        "config_hash": h,
        "program": res.program.to_dict(),
        "offset_sum_wrapped": math.remainder(res.program.offset_sum, 2 * math.pi),
        "analytic": exact.to_dict(),
        "objective": res.objective,
        "rounds": res.rounds,
        "converged": res.converged,
        "coherence": [c.real, c.imag],
        "visibility": abs(c),
        "pair_rate": opts.pair_rate,
        "window_s": opts.window_s,
    }
    written.insert(0, io.write_json(out / "optimum.json", doc))
    p = res.program
    print(f"a1 = {p.a1:+.6f}  a2 = {p.a2:+.6f}  b1+b2 = {math.remainder(p.offset_sum, 2 * math.pi):+.6f} rad  "
          f"(analytic a1 = {exact.a1:+.6f})  |C| = {abs(c):.6f}  rounds = {res.rounds}")
    return written


def cmd_visibility(m: RunManifest) -> list[Path]:
    cfg, opts = m.settings()
    out = _out(m)
    prog = analytic_optimum(cfg)
    vis = {s: visibility(cfg, prog, s) for s in STAGES}
    coh = {s: abs(synthesize_coherence(cfg, prog, s).c) for s in STAGES}
    path = io.write_json(out / "visibility.json",
                         {"config_hash": io.config_hash(cfg, opts), "visibility": vis, "coherence_abs": coh})
    for s in STAGES:
        print(f"V_{s} = {vis[s]:.6f}")
    return [path]


def cmd_tomography(m: RunManifest) -> list[Path]:
    cfg, opts = m.settings()
    target_name = m.extra.get("target") or opts.target
    if target_name not in BELL_TARGETS:
        raise ConfigError(f"unknown target {target_name!r}; expected one of {sorted(BELL_TARGETS)}")
    pairs = m.extra.get("pairs") or opts.pairs
    out = _out(m)
    h = io.config_hash(cfg, opts)
    target = BELL_TARGETS[target_name]
    rho_true = synthesize_state(cfg, bell_state_program(cfg, BELL_ZETA[target_name]), "full")
    seeds = np.random.SeedSequence(m.seed).spawn(3)
    data = simulate_counts(rho_true, default_setting_set(), pairs, seed=seeds[0])
    rec = mle_reconstruct(data, target, restarts=opts.restarts, seed=int(seeds[1].generate_state(1)[0]))
    if not rec.converged:
        raise NumericalError(f"reconstruction did not converge (gradient norm {rec.grad_norm:.3e})")
    rec.fidelity_error = bootstrap_error(data, target, resamples=opts.resamples,
                                         seed=int(seeds[2].generate_state(1)[0]), restarts=opts.restarts,
                                         workers=opts.workers)
    doc = io.reconstruction_document(rec, h, target_name)
    doc.update({"pairs_per_setting": pairs, "seed": m.seed, "resamples": opts.resamples,
                "true_fidelity": fidelity(rho_true, target)})
    written = [
        io.write_json(out / f"tomography_{target_name}.json", doc),
        io.write_dataset(out / f"tomography_{target_name}_counts.csv", data),
        io.write_density_matrix(out / f"state_{target_name}.json", rho_true, "full", h),
    ]
    print(f"{target_name}: F = {rec.fidelity_vs_target:.4f} +/- {rec.fidelity_error:.4f} "
          f"(synthesized state F = {doc['true_fidelity']:.4f})")
    return written


def cmd_sweep(m: RunManifest) -> list[Path]:
    cfg, opts = m.settings()
    key = m.extra["param"]
    values = [io.coerce_source_value(key, v) for v in m.extra["values"]]
    stages = m.extra.get("stages") or list(STAGES)
    rows = []
    for v in values:
        c = cfg.with_updates(**{key: v})
        prog = analytic_optimum(c)
        rows.append([getattr(c, key)] + [abs(synthesize_coherence(c, prog, s).c) for s in stages])
    out = _out(m)
    path = io.write_csv(out / f"sweep_{key}.csv", [key] + [f"visibility_{s}" for s in stages], rows)
    io.write_json(out / f"sweep_{key}.json", {"config_hash": io.config_hash(cfg, opts), "param": key,
                                              "stages": stages, "csv": path.name})
    print(f"wrote {len(rows)} rows to {path}")
    return [path, out / f"sweep_{key}.json"]


COMMANDS = {"angular": cmd_angular, "optimize": cmd_optimize, "visibility": cmd_visibility,
            "tomography": cmd_tomography, "sweep": cmd_sweep}


def _parse_values(text: str) -> list[str]:
    """``lo:hi:n`` for an inclusive linear range, else a comma-separated list."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise argparse.ArgumentTypeError("range must be LO:HI:N")
        try:
            lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad range {text!r}") from None
        if n < 1:
            raise argparse.ArgumentTypeError("range needs at least one point")
        return [repr(float(x)) for x in np.linspace(lo, hi, n)]
    items = [t.strip() for t in text.split(",") if t.strip()]
    if not items:
        raise argparse.ArgumentTypeError("empty value list")
    return items


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat TOML configuration file")
    common.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                        help="override a configuration key (repeatable)")
    common.add_argument("--out", default="out", help="output directory (default: out)")
    common.add_argument("--seed", type=int, default=io.DEFAULT_SEED,
                        help=f"random seed (default: {io.DEFAULT_SEED})")

    ap = argparse.ArgumentParser(prog="slmpurify", description="Simulate SLM-based purification of "
                                 "polarization-entangled photon pairs.")
    sub = ap.add_subparsers(dest="command", required=True)
    p = sub.add_parser("angular", parents=[common], help="idler angular distributions (coincidences/singles)")
    p.add_argument("--preset", choices=[*ANGULAR_PRESETS, "all"], default="all")
    sub.add_parser("optimize", parents=[common], help="recover the SLM program from crossed-polarizer minima")
    sub.add_parser("visibility", parents=[common], help="visibility at each compensation stage")
    p = sub.add_parser("tomography", parents=[common], help="simulated tomography of a Bell state")
    p.add_argument("--target", choices=sorted(BELL_TARGETS), default=None)
    p.add_argument("--pairs", type=int, default=None, help="pairs per measurement setting")
    p = sub.add_parser("sweep", parents=[common], help="stage visibilities versus one source parameter")
    p.add_argument("--param", required=True)
    p.add_argument("--values", required=True, type=_parse_values, help="comma list or LO:HI:N")
    p.add_argument("--stage", dest="stages", action="append", choices=STAGES)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    extra = {k: getattr(args, k) for k in ("target", "pairs", "param", "values", "stages") if hasattr(args, k)}
    manifest = RunManifest(command=args.command, config=args.config, overrides=args.overrides, out=args.out,
                           seed=args.seed, preset=getattr(args, "preset", None), extra=extra)
    try:
        COMMANDS[args.command](manifest)
    except (ConfigError, MaskExtentError) as exc:
        print(f"slmpurify {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NumericalError, BootstrapError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"slmpurify {args.command}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
