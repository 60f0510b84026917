"""SLM geometry and the per-arm linear phase programs.

Pixel ``x`` of an arm whose central emission angle falls on pixel ``xc``
sees the angle detuning ``(x - xc) * d / D``.  Pixel centres sit at integer
indices, so a continuous angle is quantised by rounding.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, replace

import numpy as np

from .physics import SourceConfig

ARMS = ("signal", "idler")


class MaskExtentError(ValueError):
    """An angle maps outside the physical phase mask."""


@dataclass(frozen=True)
class SlmProgram:
    """Linear phase programs: idler ``a1*(x - xc1) + b1 + zeta``, signal ``a2*(x - xc2) + b2``.

    Slopes are in rad/pixel and offsets in rad, stored unwrapped.
    """

    a1: float = 0.0
    b1: float = 0.0
    xc1: int = 57
    a2: float = 0.0
    b2: float = 0.0
    xc2: int = 582
    zeta: float = 0.0

    def with_updates(self, **changes) -> "SlmProgram":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return asdict(self)

    @property
    def offset_sum(self) -> float:
        return self.b1 + self.b2

    def check(self, cfg: SourceConfig) -> None:
        for xc in (self.xc1, self.xc2):
            if not 0 <= xc < cfg.pixel_count:
                raise MaskExtentError(f"centre pixel {xc} outside [0, {cfg.pixel_count})")


def default_center_pixels(cfg: SourceConfig) -> tuple[int, int]:
    """(idler, signal) pixels hit by the central emission directions.

    The mask is centred on the pump axis; pixel k spans
    ``[k*d - W/2, (k+1)*d - W/2]`` in mm.
    """
    half = 0.5 * cfg.mask_width

    def centre(theta0):
        pos = cfg.distance_D * math.tan(theta0)
        return int(math.floor((pos + half) / cfg.pixel_pitch_d))

    return centre(cfg.theta0_idler), centre(cfg.theta0_signal)


def pixel_to_angle(x, xc, cfg: SourceConfig):
    out = (np.asarray(x, dtype=float) - xc) * cfg.pixel_pitch_d / cfg.distance_D
    return float(out) if out.ndim == 0 else out


def angle_to_pixel(theta, xc, cfg: SourceConfig):
    """Continuous pixel coordinate of an angle detuning."""
    return xc + np.asarray(theta, dtype=float) * cfg.pixels_per_rad


def pixel_index(theta, xc, cfg: SourceConfig):
    """Index of the pixel containing ``theta``; raises if it is off the mask."""
    idx = np.floor(angle_to_pixel(theta, xc, cfg) + 0.5).astype(np.int64)
    if np.any(idx < 0) or np.any(idx >= cfg.pixel_count):
        bad = np.asarray(theta)[(idx < 0) | (idx >= cfg.pixel_count)]
        raise MaskExtentError(
            f"angle detuning {float(np.ravel(bad)[0]):.6g} rad falls outside the "
            f"{cfg.pixel_count}-pixel mask (centre pixel {xc})")
    return idx


def _arm_params(slm: SlmProgram, arm: str):
    if arm == "signal":
        return slm.a2, slm.b2, slm.xc2
    if arm == "idler":
        return slm.a1, slm.b1 + slm.zeta, slm.xc1
    raise ValueError(f"arm must be one of {ARMS}, got {arm!r}")


def arm_phase(slm: SlmProgram, arm: str, theta, cfg: SourceConfig, pixelated: bool = True):
    """Phase written on ``arm`` at angle detuning(s) ``theta``.

    With ``pixelated`` the phase is constant across each pixel; otherwise the
    linear law is evaluated at the continuous pixel coordinate.  The mask
    extent is enforced either way.
    """
    a, b, xc = _arm_params(slm, arm)
    idx = pixel_index(theta, xc, cfg)
    if pixelated:
        return a * (idx - xc).astype(float) + b
    return a * (angle_to_pixel(theta, xc, cfg) - xc) + b


def program_phase(slm: SlmProgram, arm: str, theta, cfg: SourceConfig):
    """Pixel-quantised phase seen by a photon of ``arm`` at detuning ``theta``."""
    out = arm_phase(slm, arm, theta, cfg, pixelated=True)
    return float(out) if np.ndim(out) == 0 else out


def analytic_optimum(cfg: SourceConfig) -> SlmProgram:
    """Program cancelling the angular and constant phase terms.

    Slopes ``a1 = -a2 = (beta/gamma) L d / D``; the offset sum equals
    ``phi0``, split as ``b1 = phi0, b2 = 0``.
    """
    a1 = cfg.beta_L_over_gamma / cfg.pixels_per_rad
    xc1, xc2 = default_center_pixels(cfg)
    return SlmProgram(a1=a1, b1=cfg.phi0, xc1=xc1, a2=-a1, b2=0.0, xc2=xc2, zeta=0.0)


def bell_state_program(cfg: SourceConfig, zeta: float) -> SlmProgram:
    return analytic_optimum(cfg).with_updates(zeta=zeta)


def zero_program(cfg: SourceConfig) -> SlmProgram:
    xc1, xc2 = default_center_pixels(cfg)
    return SlmProgram(xc1=xc1, xc2=xc2)
