"""Configuration files and CSV/JSON outputs.

Configuration files are flat TOML: one ``key = value`` per source or run
parameter, keys spelled exactly as the dataclass fields.  Outputs are written
with fixed key order and round-trippable float formatting so reruns are
byte-identical.
"""
from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
import math
import sys
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from .physics import ConfigError, SourceConfig

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

DEFAULT_SEED = 20100


@dataclass(frozen=True)
class RunOptions:
    """Optimizer, scan and tomography knobs accepted next to the source parameters."""

    b_samples: int = 128
    a_bracket_lo: float = -0.15
    a_bracket_hi: float = 0.15
    a_samples: int = 128
    max_rounds: int = 10
    pair_rate: float = 100.0  # coincidences per second without analyzers
    window_s: float = 30.0
    scan_slit: float = 1.2e-3
    scan_lo: float = -8e-3
    scan_hi: float = 8e-3
    scan_points: int = 161
    singles_partner_range: float = 0.1
    pairs: int = 6000
    resamples: int = 100
    restarts: int = 3
    workers: int = 1
    target: str = "phi+"


def _coerce(name: str, kind, raw):
    """Convert ``raw`` (str from the command line or a TOML value) to the field type."""
    kind = kind if isinstance(kind, type) else {"float": float, "int": int, "bool": bool, "str": str}[kind]
    if isinstance(raw, str) and kind is not str:
        text = raw.strip()
        if kind is bool:
            if text.lower() in ("1", "true", "yes", "on"):
                return True
            if text.lower() in ("0", "false", "no", "off"):
                return False
            raise ConfigError(f"{name}: expected a boolean, got {raw!r}")
        try:
            value = float(text)
        except ValueError:
            raise ConfigError(f"{name}: cannot parse {raw!r} as {kind.__name__}") from None
        if kind is int:
            if not value.is_integer():
                raise ConfigError(f"{name}: expected an integer, got {raw!r}")
            return int(value)
        return value
    if kind is float and isinstance(raw, (int, float)) and not isinstance(raw, bool):
        return float(raw)
    if kind is int and isinstance(raw, float) and raw.is_integer():
        return int(raw)
    if not isinstance(raw, kind) or (kind is int and isinstance(raw, bool)):
        raise ConfigError(f"{name}: expected {kind.__name__}, got {raw!r}")
    return raw


def _field_types(cls):
    return {f.name: f.type for f in fields(cls)}


def coerce_source_value(key: str, raw):
    """Value of source field ``key`` parsed from ``raw``."""
    types = _field_types(SourceConfig)
    if key not in types:
        raise ConfigError(f"{key!r} is not a source configuration field")
    return _coerce(key, types[key], raw)


def split_settings(values: dict) -> tuple[SourceConfig, RunOptions]:
    src_types = _field_types(SourceConfig)
    run_types = _field_types(RunOptions)
    src, run = {}, {}
    for key, raw in values.items():
        if key in src_types:
            src[key] = _coerce(key, src_types[key], raw)
        elif key in run_types:
            run[key] = _coerce(key, run_types[key], raw)
        else:
            raise ConfigError(f"unknown configuration key {key!r}")
    return SourceConfig(**src), RunOptions(**run)


def read_config_file(path) -> dict:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"configuration file {path} does not exist")
    with path.open("rb") as fh:
        try:
            data = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None
    nested = [k for k, v in data.items() if isinstance(v, dict)]
    if nested:
        raise ConfigError(f"{path}: configuration must be flat, found tables {nested}")
    return data


def parse_overrides(items) -> dict:
    out = {}
    for item in items or ():
        key, sep, value = item.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"override {item!r} is not KEY=VALUE")
        out[key.strip()] = value.strip()
    return out


def load_settings(path=None, overrides=()) -> tuple[SourceConfig, RunOptions]:
    values = read_config_file(path) if path is not None else {}
    values.update(parse_overrides(overrides))
    return split_settings(values)


def _toml_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return repr(v)
    if isinstance(v, int):
        return str(v)
    return json.dumps(v)


def config_to_toml(cfg: SourceConfig, run: RunOptions | None = None, header: str = "") -> str:
    lines = [f"# {ln}" if ln else "#" for ln in header.splitlines()]
    for obj in (cfg, run) if run is not None else (cfg,):
        for f in fields(obj):
            lines.append(f"{f.name} = {_toml_value(getattr(obj, f.name))}")
    return "\n".join(lines) + "\n"


def config_hash(cfg: SourceConfig, run: RunOptions | None = None) -> str:
    payload = {"source": dataclasses.asdict(cfg)}
    if run is not None:
        payload["run"] = dataclasses.asdict(run)
    blob = json.dumps(payload, sort_keys=True, default=repr).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (np.integer,)):
        return str(int(v))
    return str(v)


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    return path


def read_csv(path) -> tuple[list[str], list[list[str]]]:
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def write_json(path, obj) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n")
    return path


def matrix_to_pairs(rho) -> list:
    rho = np.asarray(rho, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in rho]


def pairs_to_matrix(pairs) -> np.ndarray:
    arr = np.asarray(pairs, dtype=float)
    if arr.shape != (4, 4, 2):
        raise ValueError(f"density matrix must be 4x4 [re, im] pairs, got shape {arr.shape}")
    return arr[..., 0] + 1j * arr[..., 1]


def density_matrix_document(rho, stage: str, cfg_hash: str, **extra) -> dict:
    doc = {"basis": ["HH", "HV", "VH", "VV"], "rho": matrix_to_pairs(rho), "stage": stage,
           "config_hash": cfg_hash}
    doc.update(extra)
    return doc


def write_density_matrix(path, rho, stage: str, cfg_hash: str, **extra) -> Path:
    return write_json(path, density_matrix_document(rho, stage, cfg_hash, **extra))


def read_density_matrix(path) -> tuple[np.ndarray, dict]:
    doc = json.loads(Path(path).read_text())
    return pairs_to_matrix(doc["rho"]), doc


# --- tomography datasets ------------------------------------------------------

DATASET_HEADER = ["label", "qwp1_deg", "hwp1_deg", "pol1_deg", "qwp2_deg", "hwp2_deg", "pol2_deg",
                  "counts", "total_pairs", "exposure_s"]


def write_dataset(path, data) -> Path:
    rows = []
    for s, n in zip(data.settings, data.counts):
        angles = [math.degrees(a) for arm in (s.first, s.second) for a in (arm.qwp, arm.hwp, arm.polarizer)]
        rows.append([s.label, *angles, float(n), float(data.total_pairs), float(data.total_exposure)])
    return write_csv(path, DATASET_HEADER, rows)


def read_dataset(path):
    from .tomography import ArmSetting, MeasurementSetting, TomographyDataset

    header, rows = read_csv(path)
    if header != DATASET_HEADER:
        raise ValueError(f"unexpected dataset header {header}")
    settings, counts = [], []
    for r in rows:
        a = [math.radians(float(x)) for x in r[1:7]]
        settings.append(MeasurementSetting(ArmSetting(*a[:3]), ArmSetting(*a[3:]), r[0]))
        counts.append(float(r[7]))
    return TomographyDataset(settings, np.array(counts), float(rows[0][8]), float(rows[0][9]))


def reconstruction_document(result, cfg_hash: str, target: str | None = None) -> dict:
    return {
        "rho": matrix_to_pairs(result.rho),
        "basis": ["HH", "HV", "VH", "VV"],
        "fidelity": result.fidelity_vs_target,
        "fidelity_error": result.fidelity_error,
        "log_likelihood": result.log_likelihood,
        "converged": bool(result.converged),
        "grad_norm": result.grad_norm,
        "target": target,
        "config_hash": cfg_hash,
    }
