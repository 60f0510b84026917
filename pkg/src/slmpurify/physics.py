"""First-order model of the two-crystal type-I source.

Angles are detunings from the central emission directions (rad), spectral
variables are wavelength detunings (nm).  The pump detuning is measured from
the pump centre wavelength, the signal detuning from the degenerate
wavelength (twice the pump wavelength).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace

import numpy as np


class ConfigError(ValueError):
    """Invalid or inconsistent configuration."""


@dataclass(frozen=True)
class SourceConfig:
    """Physical constants of the source, the slits and the SLM geometry.

    Only the combinations ``beta_L_over_gamma`` and ``alpha_L`` of the
    first-order phase coefficients enter observables, so those are the
    stored parameters.
    """

    crystal_length_L: float = 1.0  # mm
    distance_D: float = 500.0  # mm
    pixel_pitch_d: float = 0.1  # mm
    pixel_count: int = 640
    theta0_signal: float = math.radians(3.0)
    theta0_idler: float = -math.radians(3.0)
    gamma: float = 1.294e-4  # rad/nm
    beta_L_over_gamma: float = -250.0  # rad/rad
    alpha_L: float = 2.0  # rad/nm of pump detuning
    phi0: float = 0.0
    pump_fwhm: float = 1.0  # nm
    pump_center_nm: float = 405.0
    mu_spatial: float = 1.0
    kappa_L: float = math.pi / 1e-3  # 1/rad
    pm_center_nm: float = 0.0  # signal detuning the crystals are phase matched for
    slit_acceptance: float = 6.5e-3  # rad, full width per arm
    n_theta: int = 101
    n_omega_p: int = 41
    pump_span_sigmas: float = 4.0
    slm_pixelated: bool = True
    filter_kind: str = "double_longpass_qe"

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if not self.pump_fwhm > 0:
            raise ConfigError(f"pump_fwhm must be positive, got {self.pump_fwhm}")
        if not 0.0 <= self.mu_spatial <= 1.0:
            raise ConfigError(f"mu_spatial must lie in [0, 1], got {self.mu_spatial}")
        if not self.slit_acceptance > 0:
            raise ConfigError(f"slit_acceptance must be positive, got {self.slit_acceptance}")
        if not self.gamma > 0:
            raise ConfigError(f"gamma must be positive in rad/nm, got {self.gamma}")
        if self.distance_D <= 0 or self.pixel_pitch_d <= 0 or self.pixel_count <= 0:
            raise ConfigError("SLM geometry must be positive")
        if not math.isclose(self.theta0_idler, -self.theta0_signal, rel_tol=1e-12, abs_tol=1e-15):
            raise ConfigError("theta0_idler must equal -theta0_signal")
        if self.n_theta < 1 or self.n_omega_p < 1:
            raise ConfigError("quadrature grids must not be empty")
        if self.kappa_L < 0:
            raise ConfigError("kappa_L must be non-negative")

    @property
    def mask_width(self) -> float:
        """Physical SLM width in mm."""
        return self.pixel_pitch_d * self.pixel_count

    @property
    def pixels_per_rad(self) -> float:
        return self.distance_D / self.pixel_pitch_d

    @property
    def pump_sigma(self) -> float:
        return self.pump_fwhm / (2.0 * math.sqrt(2.0 * math.log(2.0)))

    @property
    def signal_center_nm(self) -> float:
        return 2.0 * self.pump_center_nm

    def with_updates(self, **changes) -> "SourceConfig":
        return replace(self, **changes)

    @classmethod
    def field_names(cls) -> list[str]:
        return [f.name for f in fields(cls)]


@dataclass(frozen=True)
class AngularPoint:
    theta: float
    theta_prime: float
    omega_p: float = 0.0


def signal_detuning_from_angles(theta, theta_prime, cfg: SourceConfig):
    """Signal detuning (nm) fixed by transverse momentum: theta' = -theta + gamma*omega_s."""
    return (theta + theta_prime) / cfg.gamma


def spdc_phase(p: AngularPoint, cfg: SourceConfig):
    """Relative VV/HH phase at first order, written in the two emission angles."""
    k = cfg.beta_L_over_gamma
    return cfg.phi0 + cfg.alpha_L * p.omega_p - k * p.theta + k * p.theta_prime


def mismatch_argument(theta, theta_prime, cfg: SourceConfig, omega_s=None):
    if omega_s is None:
        omega_s = cfg.pm_center_nm
    return cfg.kappa_L * (theta + theta_prime - cfg.gamma * omega_s)


def phase_matching_amplitude(p: AngularPoint, cfg: SourceConfig, omega_s: float | None = None):
    """Real amplitude sinc(u) with u = kappa_L*(theta + theta' - gamma*omega_s).

    ``omega_s`` is the signal detuning the pair is compared against; it
    defaults to the detuning the crystals are phase matched for
    (``cfg.pm_center_nm``).  Passing the pair's own transverse-momentum
    detuning ``(theta + theta')/gamma`` gives zero mismatch.
    """
    u = mismatch_argument(p.theta, p.theta_prime, cfg, omega_s)
    return np.sinc(u / np.pi)


def pump_spectral_density(omega_p, cfg: SourceConfig):
    """Normalised Gaussian |A(omega_p)|^2 (1/nm) with FWHM ``cfg.pump_fwhm``."""
    if not cfg.pump_fwhm > 0:
        raise ConfigError("pump_fwhm must be positive")
    s = cfg.pump_sigma
    return np.exp(-0.5 * (np.asarray(omega_p) / s) ** 2) / (s * math.sqrt(2.0 * math.pi))


def idler_wavelength(signal_nm, cfg: SourceConfig):
    """Idler wavelength from energy conservation with the central pump line."""
    signal_nm = np.asarray(signal_nm, dtype=float)
    lp = cfg.pump_center_nm
    return signal_nm * lp / (signal_nm - lp)
