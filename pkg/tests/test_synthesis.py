import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import dblquad

from slmpurify.filters import FilterModel
from slmpurify.physics import ConfigError
from slmpurify.slm import MaskExtentError, analytic_optimum, bell_state_program, zero_program
from slmpurify.synthesis import STAGES, NumericalError, angular_coincidence_scan, angular_singles_scan, \
    check_density_matrix, coincidence_probability, collected_spectrum, peak_center, scan_fwhm, \
    state_from_coherence, synthesize_coherence, synthesize_state, visibility
from conftest import flat_window_closed_form

BP = FilterModel.bandpass()


# --- coherence ------------------------------------------------------------------

def test_exact_compensation_is_unity(ideal_cfg):
    c = synthesize_coherence(ideal_cfg, analytic_optimum(ideal_cfg), "full").c
    assert abs(c - 1.0) < 1e-9


def test_pixelated_compensation_nearly_unity(cfg):
    c = synthesize_coherence(cfg, analytic_optimum(cfg), "full").c
    assert 0.999 <= abs(c) < 1.0
    assert abs(cmath.phase(c)) < 1e-9


def test_flat_window_closed_form(flat_cfg):
    c = synthesize_coherence(flat_cfg, None, "none").c
    assert abs(c) == pytest.approx(flat_window_closed_form(flat_cfg), abs=1e-4)
    assert flat_window_closed_form(flat_cfg) == pytest.approx(0.798, abs=1e-3)


def test_flat_window_brute_force_quadrature(flat_cfg):
    half = flat_cfg.slit_acceptance / 2
    k = flat_cfg.beta_L_over_gamma
    re, _ = dblquad(lambda tp, t: math.cos(k * t - k * tp), -half, half, -half, half, epsabs=1e-12)
    im, _ = dblquad(lambda tp, t: math.sin(k * t - k * tp), -half, half, -half, half, epsabs=1e-12)
    brute = complex(re, im) / (2 * half) ** 2
    c = synthesize_coherence(flat_cfg, None, "none").c
    assert abs(c - brute) < 1e-4
    assert abs(brute) == pytest.approx(flat_window_closed_form(flat_cfg), abs=1e-9)


def test_zeta_rotates_coherence(ideal_cfg):
    base = synthesize_coherence(ideal_cfg, analytic_optimum(ideal_cfg), "full").c
    for zeta in (0.3, math.pi / 2, math.pi, 5.0):
        c = synthesize_coherence(ideal_cfg, bell_state_program(ideal_cfg, zeta), "full").c
        assert abs(c - cmath.exp(1j * zeta) * base) < 1e-12


def test_bell_program_signs(cfg):
    c0 = synthesize_coherence(cfg, bell_state_program(cfg, 0.0)).c
    cpi = synthesize_coherence(cfg, bell_state_program(cfg, math.pi)).c
    ci = synthesize_coherence(cfg, bell_state_program(cfg, math.pi / 2)).c
    assert c0.real > 0.99 and abs(c0.imag) < 1e-9
    assert cpi.real < -0.99 and abs(cpi.imag) < 1e-9
    assert ci.imag > 0.99 and abs(ci.real) < 1e-9


@given(st.floats(-10, 10))
@settings(max_examples=20, deadline=None)
def test_offset_split_invariance(shift):
    from slmpurify.physics import SourceConfig
    cfg = SourceConfig()
    prog = analytic_optimum(cfg).with_updates(a1=-0.04, a2=0.045, b1=0.2)
    c = synthesize_coherence(cfg, prog, "full").c
    moved = prog.with_updates(b1=prog.b1 + shift, b2=prog.b2 - shift)
    assert abs(synthesize_coherence(cfg, moved, "full").c - c) < 1e-9


def test_stage_chain_monotone(cfg, calibrated_cfg):
    for c in (cfg, calibrated_cfg):
        v = [abs(synthesize_coherence(c, analytic_optimum(c), s).c) for s in STAGES]
        assert v[0] < v[1] < v[2] <= 1.0


def test_mu_scales_every_stage(cfg):
    half = cfg.with_updates(mu_spatial=0.5)
    prog = analytic_optimum(cfg)
    for s in STAGES:
        assert synthesize_coherence(half, prog, s).c == pytest.approx(0.5 * synthesize_coherence(cfg, prog, s).c)


def test_stage_validation(cfg):
    with pytest.raises(ConfigError):
        synthesize_coherence(cfg, None, "partial")


def test_norm_positive_and_repeatable(cfg):
    a = synthesize_coherence(cfg, analytic_optimum(cfg), "none")
    b = synthesize_coherence(cfg, analytic_optimum(cfg), "none")
    assert a.norm > 0 and a == b


def test_grid_refinement(cfg):
    fine = cfg.with_updates(n_theta=2 * cfg.n_theta, n_omega_p=2 * cfg.n_omega_p)
    prog = analytic_optimum(cfg)
    for s in STAGES:
        assert abs(abs(synthesize_coherence(fine, prog, s).c) - abs(synthesize_coherence(cfg, prog, s).c)) < 1e-4


def test_phase_mismatch_width_matters(cfg):
    narrow = cfg.with_updates(kappa_L=3000.0)
    wide = cfg.with_updates(kappa_L=10.0)
    v = [abs(synthesize_coherence(c, None, "temporal").c) for c in (narrow, wide)]
    assert v[0] < v[1]


# --- states and polarizer probabilities -------------------------------------------

def test_state_examples():
    phi_plus = np.array([1, 0, 0, 1]) / math.sqrt(2)
    assert np.allclose(state_from_coherence(1.0), np.outer(phi_plus, phi_plus))
    phi_i = np.array([1, 0, 0, 1j]) / math.sqrt(2)
    rho_i = state_from_coherence(1j)
    assert np.allclose(rho_i, np.outer(phi_i, phi_i.conj()))
    assert rho_i[0, 3].real == 0.0 and rho_i[0, 3].imag != 0.0
    assert np.allclose(np.linalg.eigvalsh(state_from_coherence(0.0)), [0, 0, 0.5, 0.5])


def test_synthesized_state_invariants(cfg):
    for stage in STAGES:
        rho = synthesize_state(cfg, analytic_optimum(cfg), stage)
        check_density_matrix(rho)
        assert np.all(rho[1, :] == 0) and np.all(rho[:, 2] == 0)


def test_density_matrix_check_rejects():
    with pytest.raises(NumericalError):
        check_density_matrix(np.diag([1.2, -0.2, 0, 0]))
    with pytest.raises(NumericalError):
        check_density_matrix(np.diag([0.5, 0.4, 0, 0]))
    bad = state_from_coherence(1.0)
    bad[0, 3] += 1e-6
    with pytest.raises(NumericalError):
        check_density_matrix(bad)


def test_coincidence_examples():
    a, b = math.radians(45), math.radians(-45)
    assert coincidence_probability(state_from_coherence(1.0), a, b) == pytest.approx(0.0, abs=1e-15)
    assert coincidence_probability(state_from_coherence(1.0), a, a) == pytest.approx(0.5)
    for phase in np.linspace(0, 2 * math.pi, 9):
        p = coincidence_probability(state_from_coherence(cmath.exp(1j * phase)), a, b)
        assert p == pytest.approx((1 - math.cos(phase)) / 4, abs=1e-15)


@given(st.floats(0, math.pi), st.floats(0, math.pi), st.floats(0, 1), st.floats(0, 2 * math.pi))
def test_coincidence_formula_and_completeness(a1, a2, mag, phase):
    c = mag * cmath.exp(1j * phase)
    rho = state_from_coherence(c)
    total = sum(coincidence_probability(rho, x, y) for x in (a1, a1 + math.pi / 2) for y in (a2, a2 + math.pi / 2))
    assert total == pytest.approx(1.0, abs=1e-12)
    ca, sa, cb, sb = math.cos(a1), math.sin(a1), math.cos(a2), math.sin(a2)
    formula = 0.5 * (ca * cb) ** 2 + 0.5 * (sa * sb) ** 2 + c.real * ca * cb * sa * sb
    assert coincidence_probability(rho, a1, a2) == pytest.approx(formula, abs=1e-12)


# --- visibility ---------------------------------------------------------------------

def test_visibility_examples(ideal_cfg):
    prog = analytic_optimum(ideal_cfg)
    assert visibility(ideal_cfg, prog, "full") == pytest.approx(1.0, abs=1e-9)
    assert visibility(ideal_cfg.with_updates(mu_spatial=0.886), prog, "full") == pytest.approx(0.886, abs=1e-9)
    assert visibility(ideal_cfg.with_updates(mu_spatial=0.0), prog, "full") == pytest.approx(0.0, abs=1e-12)


def test_visibility_equals_coherence(cfg):
    for stage in STAGES:
        v = visibility(cfg, zero_program(cfg), stage)
        assert v == pytest.approx(abs(synthesize_coherence(cfg, zero_program(cfg), stage).c), abs=1e-6)


def test_visibility_trace_is_fringe(cfg):
    v, (xs, fs) = visibility(cfg, analytic_optimum(cfg), "none", return_trace=True)
    c = synthesize_coherence(cfg, analytic_optimum(cfg), "none").c
    assert np.allclose(fs, (1 - np.abs(c) * np.cos(xs + cmath.phase(c))) / 4, atol=1e-12)


# --- angular scans and spectrum -----------------------------------------------------

def test_coincidence_peak_centered(cfg):
    scan = angular_coincidence_scan(cfg, BP, 0.0, (-8e-3, 8e-3), 161, slit=1.2e-3)
    assert abs(peak_center(scan) - cfg.theta0_idler) < 1e-4
    assert scan.rate.max() == 1.0
    assert np.allclose(scan.angle - scan.detuning, cfg.theta0_idler)


@pytest.mark.parametrize("offset", [1.8e-3, -1.8e-3, 0.9e-3])
def test_anticorrelation_slope(cfg, offset):
    scan = angular_coincidence_scan(cfg, BP, offset, (-8e-3, 8e-3), 161, slit=1.2e-3)
    shift = peak_center(scan) - cfg.theta0_idler
    assert shift == pytest.approx(-offset, abs=2e-4)


def test_degenerate_slit_is_pointwise(cfg):
    from slmpurify.filters import pair_transmission
    from slmpurify.synthesis import _pm_weight
    centres = np.linspace(-4e-3, 4e-3, 33)
    scan = angular_coincidence_scan(cfg, BP, 0.5e-3, (-4e-3, 4e-3), 33, slit=0.0)
    s = 0.5e-3 + centres
    point = _pm_weight(s, cfg) * pair_transmission(BP, s / cfg.gamma, cfg)
    assert np.allclose(scan.rate, point / point.max())


def test_singles_flat_without_filter_or_phase_matching(cfg):
    flat = cfg.with_updates(kappa_L=0.0)
    scan = angular_singles_scan(flat, FilterModel.ideal(), (-5e-3, 5e-3), 21, slit=1.2e-3)
    assert np.allclose(scan.rate, 1.0)


@pytest.mark.parametrize("kind", ["bandpass_10nm", "double_longpass_qe"])
def test_singles_wider_than_coincidences(cfg, kind):
    filt = FilterModel.from_kind(kind, cfg)
    rng = (-8e-3, 8e-3)
    co = angular_coincidence_scan(cfg, filt, 0.0, rng, 161, slit=1.2e-3)
    si = angular_singles_scan(cfg, filt, rng, 161, slit=1.2e-3)
    assert scan_fwhm(si) >= scan_fwhm(co)


def test_longpass_singles_wider_than_bandpass_coincidences(cfg):
    rng = (-8e-3, 8e-3)
    co = angular_coincidence_scan(cfg, BP, 0.0, rng, 161, slit=1.2e-3)
    si = angular_singles_scan(cfg, FilterModel.double_longpass(), rng, 161, slit=1.2e-3)
    assert scan_fwhm(si) > scan_fwhm(co)


def test_scan_errors(cfg):
    with pytest.raises(ConfigError):
        angular_coincidence_scan(cfg, BP, 0.0, (1e-3, -1e-3), 11)
    with pytest.raises(ConfigError):
        angular_coincidence_scan(cfg, BP, 0.0, (-1e-3, 1e-3), 1)
    with pytest.raises(MaskExtentError):
        angular_coincidence_scan(cfg, BP, 0.0, (-20e-3, 0.0), 11)
    with pytest.raises(MaskExtentError):
        angular_singles_scan(cfg, BP, (-20e-3, 0.0), 11)


def test_collected_spectrum_width(cfg):
    flat = cfg.with_updates(kappa_L=0.0, filter_kind="ideal")
    spectrum = collected_spectrum(flat)
    assert spectrum.full_width_nm == pytest.approx(13e-3 / 1.294e-4, abs=1.0)
    assert spectrum.weight.sum() == pytest.approx(1.0)
    half = collected_spectrum(flat.with_updates(slit_acceptance=3.25e-3))
    assert half.full_width_nm == pytest.approx(spectrum.full_width_nm / 2, rel=1e-9)
    tiny = collected_spectrum(flat.with_updates(slit_acceptance=1e-7))
    assert tiny.full_width_nm < 2e-3
    assert collected_spectrum(cfg).full_width_nm == pytest.approx(100.5, abs=2.0)
