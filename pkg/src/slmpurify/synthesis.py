"""Reduction of the emitted two-photon state to polarization observables.

The emitted state carries a spatial/spectral wavefunction on top of the
HH and VV polarization amplitudes.  Tracing it out leaves a two-qubit state
whose only coherence is ``C``, the weighted average of the relative phase
factor over the collected angles and pump frequencies.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import minimize_scalar

from . import kernels
from .filters import FilterModel, idler_transmission, pair_transmission
from .physics import ConfigError, SourceConfig, mismatch_argument, pump_spectral_density
from .slm import (SlmProgram, analytic_optimum, angle_to_pixel, arm_phase, default_center_pixels,
                  MaskExtentError)

STAGES = ("none", "temporal", "full")
BASIS = ("HH", "HV", "VH", "VV")
HH, VV = 0, 3


class NumericalError(RuntimeError):
    """A computed quantity violates an invariant it must satisfy."""


@dataclass(frozen=True)
class CoherenceResult:
    c: complex
    norm: float
    stage: str


def midpoint_nodes(lo: float, hi: float, n: int):
    """Nodes and cell width of the n-point midpoint rule on [lo, hi]."""
    if n < 1:
        raise ConfigError("quadrature needs at least one node")
    h = (hi - lo) / n
    return lo + h * (np.arange(n) + 0.5), h


def _pm_weight(s, cfg: SourceConfig):
    return np.sinc(mismatch_argument(s, 0.0, cfg) / np.pi) ** 2


@lru_cache(maxsize=32)
def _spatial_grid(width, n, kappa_L, gamma, pm_center_nm, pump_center_nm, filter_kind):
    cfg = SourceConfig(slit_acceptance=width, n_theta=n, kappa_L=kappa_L, gamma=gamma,
                       pm_center_nm=pm_center_nm, pump_center_nm=pump_center_nm)
    theta, h = midpoint_nodes(-0.5 * width, 0.5 * width, n)
    s = theta[:, None] + theta[None, :]
    filt = FilterModel.from_kind(filter_kind, cfg)
    w = _pm_weight(s, cfg) * pair_transmission(filt, s / gamma, cfg) * (h * h)
    w.setflags(write=False)
    theta.setflags(write=False)
    return theta, w


def spatial_grid(cfg: SourceConfig):
    """Signal/idler angle nodes (shared) and the 2-D weight |f|^2 * filters * cell area."""
    return _spatial_grid(cfg.slit_acceptance, cfg.n_theta, cfg.kappa_L, cfg.gamma,
                         cfg.pm_center_nm, cfg.pump_center_nm, cfg.filter_kind)


def pump_grid(cfg: SourceConfig):
    half = cfg.pump_span_sigmas * cfg.pump_sigma
    omega, h = midpoint_nodes(-half, half, cfg.n_omega_p)
    return omega, pump_spectral_density(omega, cfg) * h


def synthesize_coherence(cfg: SourceConfig, slm: SlmProgram | None = None, stage: str = "full",
                         analysis_phase: float = 0.0) -> CoherenceResult:
    """Normalised coherence between the HH and VV amplitudes.

    Tensor-product midpoint quadrature over (theta, theta', omega_p).  The
    weight factorises into a pump part and an angular part and the phase is
    additive, so the triple sum is evaluated exactly as the product of a 1-D
    and a 2-D sum.  ``analysis_phase`` is a uniform phase added to the HH
    term at every stage (a flat SLM offset).
    """
    if stage not in STAGES:
        raise ConfigError(f"stage must be one of {STAGES}, got {stage!r}")
    theta, w2 = spatial_grid(cfg)
    k = cfg.beta_L_over_gamma
    # minus the SPDC phase, split per arm
    row = k * theta + (analysis_phase - cfg.phi0)
    col = -k * theta
    if stage == "full":
        if slm is None:
            slm = analytic_optimum(cfg)
        row = row + arm_phase(slm, "signal", theta, cfg, cfg.slm_pixelated)
        col = col + arm_phase(slm, "idler", theta, cfg, cfg.slm_pixelated)
    spatial, wsum = kernels.weighted_phase_sum(w2, row, col)
    omega, pw = pump_grid(cfg)
    psum = float(np.sum(pw))
    if not (wsum > 0 and psum > 0):
        raise ConfigError("quadrature weights vanish; check slit and filter settings")
    if stage == "none":
        ph = -cfg.alpha_L * omega
        temporal = complex(np.sum(pw * np.cos(ph)), np.sum(pw * np.sin(ph))) / psum
    else:
        temporal = 1.0
    c = cfg.mu_spatial * temporal * spatial / wsum
    if abs(c) > 1.0 + 1e-9:
        raise NumericalError(f"|C| = {abs(c)!r} exceeds 1")
    return CoherenceResult(c=complex(c), norm=wsum * psum, stage=stage)


def state_from_coherence(c: complex) -> np.ndarray:
    """Two-qubit density matrix on (HH, HV, VH, VV).

    ``<VV|rho|HH> = c/2``, so ``c = i`` is (|HH> + i|VV>)/sqrt(2).
    """
    rho = np.zeros((4, 4), dtype=complex)
    rho[HH, HH] = rho[VV, VV] = 0.5
    rho[VV, HH] = 0.5 * c
    rho[HH, VV] = 0.5 * np.conj(c)
    return rho


def synthesize_state(cfg: SourceConfig, slm: SlmProgram | None = None, stage: str = "full") -> np.ndarray:
    rho = state_from_coherence(synthesize_coherence(cfg, slm, stage).c)
    check_density_matrix(rho)
    return rho


def check_density_matrix(rho, herm_tol=1e-12, trace_tol=1e-12, eig_tol=1e-10) -> None:
    rho = np.asarray(rho)
    if rho.shape != (4, 4):
        raise NumericalError(f"expected a 4x4 matrix, got {rho.shape}")
    if np.max(np.abs(rho - rho.conj().T)) > herm_tol:
        raise NumericalError("density matrix is not Hermitian")
    if abs(np.trace(rho) - 1.0) > trace_tol:
        raise NumericalError(f"trace is {np.trace(rho)!r}")
    lo = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)).min()
    if lo < -eig_tol:
        raise NumericalError(f"negative eigenvalue {lo!r}")


def polarizer_state(alpha: float) -> np.ndarray:
    return np.array([math.cos(alpha), math.sin(alpha)])


def coincidence_probability(rho, alpha1: float, alpha2: float) -> float:
    """Probability that both photons pass linear polarizers at ``alpha1``, ``alpha2``."""
    v = np.kron(polarizer_state(alpha1), polarizer_state(alpha2))
    return float(np.real(v @ np.asarray(rho) @ v))


ANALYZER = (math.radians(45.0), math.radians(-45.0))


def crossed_coincidence(cfg, slm, stage, offset):
    c = synthesize_coherence(cfg, slm, stage, analysis_phase=offset).c
    return coincidence_probability(state_from_coherence(c), *ANALYZER)


def refine_minimum(f, xs, fs, tol=1e-10):
    """Golden-section refinement around the best sample of a uniform sweep."""
    xs = np.asarray(xs)
    fs = np.asarray(fs)
    i = int(np.argmin(fs))
    step = xs[1] - xs[0]
    lo, hi = xs[i] - step, xs[i] + step
    try:
        res = minimize_scalar(f, bracket=(lo, xs[i], hi), method="golden", tol=tol)
    except ValueError:
        return float(xs[i]), float(fs[i])
    if res.fun <= fs[i]:
        return float(res.x), float(res.fun)
    return float(xs[i]), float(fs[i])


def visibility(cfg: SourceConfig, slm: SlmProgram | None = None, stage: str = "full",
               samples: int = 128, return_trace: bool = False):
    """Fringe visibility of crossed-polarizer coincidences as the offset b1 sweeps 2*pi.

    The sweep result is checked against |C| to 1e-6.
    """
    xs = 2.0 * math.pi * np.arange(samples) / samples
    fs = np.array([crossed_coincidence(cfg, slm, stage, x) for x in xs])
    _, pmin = refine_minimum(lambda b: crossed_coincidence(cfg, slm, stage, b), xs, fs)
    _, neg_max = refine_minimum(lambda b: -crossed_coincidence(cfg, slm, stage, b), xs, -fs)
    pmax = -neg_max
    v = (pmax - pmin) / (pmax + pmin)
    ref = abs(synthesize_coherence(cfg, slm, stage).c)
    if abs(v - ref) > 1e-6:
        raise NumericalError(f"sweep visibility {v!r} disagrees with |C| = {ref!r}")
    if return_trace:
        return v, (xs, fs)
    return v


# --- angular and spectral distributions ----------------------------------------


@dataclass(frozen=True)
class Scan:
    """Normalised rate versus idler slit position.

    ``detuning`` is measured from the central idler angle, ``angle`` is absolute (rad).
    """

    detuning: np.ndarray
    angle: np.ndarray
    rate: np.ndarray
    label: str = ""


def _check_scan(cfg, scan_range, points, slit):
    lo, hi = scan_range
    if points < 2:
        raise ConfigError("a scan needs at least two points")
    if not hi > lo:
        raise ConfigError(f"invalid scan range {scan_range!r}")
    if slit < 0:
        raise ConfigError("slit width must be non-negative")
    xc1, _ = default_center_pixels(cfg)
    for edge in (lo - 0.5 * slit, hi + 0.5 * slit):
        x = float(angle_to_pixel(edge, xc1, cfg))
        if not -0.5 <= x < cfg.pixel_count - 0.5:
            raise MaskExtentError(f"scan edge {edge:.6g} rad lies outside the phase mask")


def _slit_offsets(slit, n):
    if slit == 0:
        return np.zeros(1)
    return midpoint_nodes(-0.5 * slit, 0.5 * slit, n)[0]


def angular_coincidence_scan(cfg: SourceConfig, filt: FilterModel, theta_offset: float,
                             scan_range: tuple[float, float], points: int,
                             slit: float | None = None, n_slit: int = 41) -> Scan:
    """Coincidence rate versus idler slit position, signal slit fixed at ``theta_offset``.

    Each point averages F_s*F_i*|f|^2 over both slit apertures, which is the
    pointwise rate convolved with the rectangular slit window.
    """
    slit = cfg.slit_acceptance if slit is None else slit
    _check_scan(cfg, scan_range, points, slit)
    centres = np.linspace(scan_range[0], scan_range[1], points)
    u = _slit_offsets(slit, n_slit)
    sig = theta_offset + u
    rate = np.empty(points)
    for p, c in enumerate(centres):
        s = sig[:, None] + (c + u)[None, :]
        w = _pm_weight(s, cfg) * pair_transmission(filt, s / cfg.gamma, cfg)
        rate[p] = np.mean(w)
    return _normalised(cfg, centres, rate, "coincidences")


def angular_singles_scan(cfg: SourceConfig, filt: FilterModel, scan_range: tuple[float, float],
                         points: int, slit: float | None = None, n_slit: int = 41,
                         partner_range: float = 0.1, n_partner: int = 2001) -> Scan:
    """Idler single-count rate versus slit position.

    The signal photon is unconstrained (integrated over ``partner_range``)
    and only the idler filter acts.
    """
    slit = cfg.slit_acceptance if slit is None else slit
    _check_scan(cfg, scan_range, points, slit)
    centres = np.linspace(scan_range[0], scan_range[1], points)
    u = _slit_offsets(slit, n_slit)
    sig = midpoint_nodes(-0.5 * partner_range, 0.5 * partner_range, n_partner)[0]
    rate = np.empty(points)
    for p, c in enumerate(centres):
        s = sig[:, None] + (c + u)[None, :]
        w = _pm_weight(s, cfg) * idler_transmission(filt, s / cfg.gamma, cfg)
        rate[p] = np.mean(w)
    return _normalised(cfg, centres, rate, "singles")


def _normalised(cfg, centres, rate, label):
    peak = rate.max()
    if not peak > 0:
        raise ConfigError("scan rate vanishes everywhere; check filter and range")
    return Scan(detuning=centres, angle=cfg.theta0_idler + centres, rate=rate / peak, label=label)


def peak_center(scan: Scan) -> float:
    """Centroid of the part of the scan above half maximum."""
    sel = scan.rate >= 0.5
    return float(np.sum(scan.angle[sel] * scan.rate[sel]) / np.sum(scan.rate[sel]))


def scan_fwhm(scan: Scan) -> float:
    sel = np.nonzero(scan.rate >= 0.5)[0]
    return float(scan.angle[sel[-1]] - scan.angle[sel[0]])


@dataclass(frozen=True)
class Spectrum:
    omega_s: np.ndarray
    weight: np.ndarray
    full_width_nm: float
    fwhm_nm: float


def collected_spectrum(cfg: SourceConfig, bins: int = 101) -> Spectrum:
    """Marginal distribution of the signal detuning over both slit apertures.

    ``full_width_nm`` is the extent of the bins carrying weight, the bins
    spanning the geometric support ``|theta + theta'| <= slit``.
    """
    theta, w2 = spatial_grid(cfg)
    half = cfg.slit_acceptance / cfg.gamma
    omega = (theta[:, None] + theta[None, :]) / cfg.gamma
    hist, edges = np.histogram(omega, bins=bins, range=(-half, half), weights=w2)
    centres = 0.5 * (edges[1:] + edges[:-1])
    nz = np.nonzero(hist > 1e-9 * hist.max())[0] if hist.max() > 0 else np.array([], int)
    full = float(edges[nz[-1] + 1] - edges[nz[0]]) if nz.size else 0.0
    above = np.nonzero(hist >= 0.5 * hist.max())[0] if hist.max() > 0 else np.array([], int)
    fwhm = float(edges[above[-1] + 1] - edges[above[0]]) if above.size else 0.0
    total = hist.sum()
    return Spectrum(omega_s=centres, weight=hist / total if total > 0 else hist,
                    full_width_nm=full, fwhm_nm=fwhm)
