"""Spectral filter models placed in front of the detectors."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .physics import ConfigError, SourceConfig, idler_wavelength

KINDS = ("bandpass_10nm", "double_longpass_qe", "ideal")

# logistic scale giving a 10%-90% rise over the stated transition width
_RISE_10_90 = 2.0 * math.log(9.0)


@dataclass(frozen=True)
class FilterModel:
    """Transmission of one detector arm versus absolute wavelength.

    ``qe_curve`` is a tuple of ``(detuning_nm, efficiency)`` pairs, detuning
    taken from ``center``; it is linearly interpolated and held constant
    outside the table.  An empty table means unit efficiency.
    """

    kind: str = "ideal"
    center: float = 810.0
    width: float = 10.0
    cuton: float = 715.0
    transition: float = 2.0
    qe_curve: tuple = ()
    shape: str = "rect"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown filter kind {self.kind!r}; expected one of {KINDS}")
        if self.shape not in ("rect", "gaussian"):
            raise ConfigError(f"unknown bandpass shape {self.shape!r}")
        if self.width <= 0 or self.transition <= 0:
            raise ConfigError("filter widths must be positive")
        for _, eff in self.qe_curve:
            if not 0.0 <= eff <= 1.0:
                raise ConfigError("quantum efficiency must lie in [0, 1]")

    @classmethod
    def bandpass(cls, center=810.0, width=10.0, shape="rect"):
        return cls(kind="bandpass_10nm", center=center, width=width, shape=shape)

    @classmethod
    def double_longpass(cls, cuton=715.0, transition=2.0, qe_curve=(), center=810.0):
        return cls(kind="double_longpass_qe", cuton=cuton, transition=transition,
                   qe_curve=tuple(qe_curve), center=center)

    @classmethod
    def ideal(cls):
        return cls(kind="ideal")

    @classmethod
    def from_kind(cls, kind: str, cfg: SourceConfig | None = None) -> "FilterModel":
        center = cfg.signal_center_nm if cfg is not None else 810.0
        if kind == "bandpass_10nm":
            return cls.bandpass(center=center)
        if kind == "double_longpass_qe":
            return cls.double_longpass(center=center)
        if kind == "ideal":
            return cls.ideal()
        raise ConfigError(f"unknown filter kind {kind!r}; expected one of {KINDS}")

    def quantum_efficiency(self, wavelength_nm):
        wl = np.asarray(wavelength_nm, dtype=float)
        if not self.qe_curve:
            return np.ones_like(wl)
        det, eff = np.array(self.qe_curve, dtype=float).T
        order = np.argsort(det)
        return np.interp(wl - self.center, det[order], eff[order])

    def transmission(self, wavelength_nm):
        wl = np.asarray(wavelength_nm, dtype=float)
        if self.kind == "ideal":
            return np.ones_like(wl)
        if self.kind == "bandpass_10nm":
            dev = wl - self.center
            if self.shape == "gaussian":
                return np.exp(-4.0 * math.log(2.0) * (dev / self.width) ** 2)
            return (np.abs(dev) <= 0.5 * self.width).astype(float)
        # two identical longpass stages times the detector efficiency
        x = _RISE_10_90 * (wl - self.cuton) / self.transition
        step = 0.5 * (1.0 + np.tanh(0.5 * x))
        return step * step * self.quantum_efficiency(wl)


def pair_transmission(filt: FilterModel, omega_s, cfg: SourceConfig):
    """Joint transmission of signal and idler for a signal detuning ``omega_s`` (nm).

    Both arms carry the same filter; the idler wavelength follows from energy
    conservation with the central pump line.
    """
    lam_s = cfg.signal_center_nm + np.asarray(omega_s, dtype=float)
    lam_i = idler_wavelength(lam_s, cfg)
    return filt.transmission(lam_s) * filt.transmission(lam_i)


def idler_transmission(filt: FilterModel, omega_s, cfg: SourceConfig):
    lam_s = cfg.signal_center_nm + np.asarray(omega_s, dtype=float)
    return filt.transmission(idler_wavelength(lam_s, cfg))
