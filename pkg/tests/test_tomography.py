import cmath
import math

import numpy as np
import pytest

from slmpurify import tomography as tomo
from slmpurify.synthesis import check_density_matrix, state_from_coherence
from slmpurify.tomography import ARM_BASES, BELL_TARGETS, ArmSetting, BootstrapError, DegenerateSettingsError, \
    MeasurementSetting, TomographyDataset, bootstrap_error, default_setting_set, fidelity, gram_rank, \
    log_likelihood, mle_reconstruct, projector_array, projector_from_setting, simulate_counts

SETTINGS = default_setting_set()


def pure(v):
    v = np.asarray(v, dtype=complex)
    v = v / np.linalg.norm(v)
    return np.outer(v, v.conj())


def random_density_matrix(rng, rank=4):
    g = rng.normal(size=(4, rank)) + 1j * rng.normal(size=(4, rank))
    m = g @ g.conj().T
    return m / np.trace(m).real


def trace_distance(a, b):
    return 0.5 * np.sum(np.abs(np.linalg.eigvalsh(a - b)))


# --- projectors ------------------------------------------------------------------------

def test_projector_examples():
    hh = projector_from_setting(MeasurementSetting(ArmSetting(), ArmSetting()))
    assert np.allclose(hh, pure([1, 0, 0, 0]))
    d_first = projector_from_setting(MeasurementSetting(ArmSetting(hwp=math.radians(22.5)), ArmSetting()))
    assert np.allclose(d_first, pure(np.kron([1, 1], [1, 0])))
    r_second = projector_from_setting(MeasurementSetting(ArmSetting(), ArmSetting(qwp=math.pi / 4)))
    assert np.allclose(r_second, pure(np.kron([1, 0], [1, 1j])))


def test_arm_bases_states():
    expected = {"H": [1, 0], "V": [0, 1], "D": [1, 1], "R": [1, 1j]}
    for name, vec in expected.items():
        v = np.asarray(vec, dtype=complex) / np.linalg.norm(vec)
        assert abs(abs(np.vdot(v, ARM_BASES[name].state())) - 1.0) < 1e-12


def test_angles_stored_in_half_open_range():
    s = ArmSetting(qwp=-0.1, hwp=math.pi, polarizer=4.0)
    for a in (s.qwp, s.hwp, s.polarizer):
        assert 0.0 <= a < math.pi


def test_default_set():
    assert len(SETTINGS) == 16
    assert gram_rank(projector_array(SETTINGS)) == 16
    labels = [s.label for s in SETTINGS]
    assert "HH" in labels and "VV" in labels
    for b in "HVDR":
        assert sum(lab[0] == b for lab in labels) == 4
        assert sum(lab[1] == b for lab in labels) == 4


# --- count simulation --------------------------------------------------------------------

def test_simulate_counts_examples():
    hh = simulate_counts(pure([1, 0, 0, 0]), SETTINGS, 5000, noise=False)
    assert hh.counts[0] == pytest.approx(5000)
    mixed = simulate_counts(np.eye(4) / 4, SETTINGS, 6000, noise=False)
    assert np.allclose(mixed.counts, 1500)
    a = simulate_counts(np.eye(4) / 4, SETTINGS, 6000, seed=3)
    b = simulate_counts(np.eye(4) / 4, SETTINGS, 6000, seed=3)
    assert np.array_equal(a.counts, b.counts)
    assert np.all(a.counts == np.round(a.counts))


def test_dataset_validation():
    with pytest.raises(ValueError):
        simulate_counts(np.eye(4) / 4, SETTINGS, 0)
    with pytest.raises(ValueError):
        TomographyDataset(SETTINGS, np.ones(15), 10.0)
    with pytest.raises(ValueError):
        TomographyDataset(SETTINGS, -np.ones(16), 10.0)


# --- maximum likelihood --------------------------------------------------------------------

@pytest.mark.parametrize("name", sorted(BELL_TARGETS))
def test_noiseless_bell_states(name):
    target = BELL_TARGETS[name]
    data = simulate_counts(pure(target), SETTINGS, 6000, noise=False)
    res = mle_reconstruct(data, target)
    assert res.converged and res.fidelity_vs_target >= 0.999
    check_density_matrix(res.rho, herm_tol=1e-12, trace_tol=1e-10, eig_tol=1e-10)


def test_noiseless_maximally_mixed():
    res = mle_reconstruct(simulate_counts(np.eye(4) / 4, SETTINGS, 6000, noise=False))
    assert np.allclose(np.linalg.eigvalsh(res.rho), 0.25, atol=1e-3)


def test_likelihood_optimality_on_noiseless_data():
    rho = state_from_coherence(0.886)
    data = simulate_counts(rho, SETTINGS, 6000, noise=False)
    res = mle_reconstruct(data)
    ll_true = log_likelihood(rho, data)
    assert res.log_likelihood >= ll_true - 1e-6 * abs(ll_true)
    assert res.log_likelihood == pytest.approx(ll_true, rel=1e-6)


def test_random_states_recovered():
    rng = np.random.default_rng(11)
    for k in range(20):
        rho = random_density_matrix(rng, rank=1 + k % 4)
        res = mle_reconstruct(simulate_counts(rho, SETTINGS, 10000, noise=False), seed=k)
        assert trace_distance(res.rho, rho) < 1e-3
        check_density_matrix(res.rho, trace_tol=1e-10)


def test_degenerate_settings_rejected():
    settings = [MeasurementSetting(ArmSetting(), ArmSetting())] * 16
    with pytest.raises(DegenerateSettingsError):
        mle_reconstruct(TomographyDataset(settings, np.ones(16), 16.0))


def test_noisy_calibrated_state_fidelity():
    rho = state_from_coherence(0.886)
    fids = [mle_reconstruct(simulate_counts(rho, SETTINGS, 6000, seed=s), BELL_TARGETS["phi+"]).fidelity_vs_target
            for s in range(5)]
    assert abs(np.mean(fids) - (1 + 0.886) / 2) < 0.02
    assert all(abs(f - 0.943) < 0.02 for f in fids)


# --- fidelity ----------------------------------------------------------------------------------

def test_fidelity_examples():
    phi = BELL_TARGETS["phi+"]
    assert fidelity(pure(phi), phi) == pytest.approx(1.0)
    for t in BELL_TARGETS.values():
        assert fidelity(np.eye(4) / 4, t) == pytest.approx(0.25)
    assert fidelity(state_from_coherence(0.886), phi) == pytest.approx(0.943)
    rho = state_from_coherence(0.5 + 0.3j)
    assert fidelity(rho, cmath.exp(0.7j) * phi) == pytest.approx(fidelity(rho, phi))
    with pytest.raises(ValueError):
        fidelity(rho, 2 * phi)


# --- bootstrap ----------------------------------------------------------------------------------

@pytest.fixture(scope="module")
def noisy_data():
    return simulate_counts(state_from_coherence(0.886), SETTINGS, 6000, seed=5)


def test_bootstrap_deterministic_and_worker_independent(noisy_data):
    t = BELL_TARGETS["phi+"]
    a = bootstrap_error(noisy_data, t, resamples=12, seed=1)
    b = bootstrap_error(noisy_data, t, resamples=12, seed=1)
    c = bootstrap_error(noisy_data, t, resamples=12, seed=1, workers=4)
    assert a == b == c
    assert bootstrap_error(noisy_data, t, resamples=12, seed=2) != a


def test_bootstrap_magnitude_and_scaling(noisy_data):
    t = BELL_TARGETS["phi+"]
    err = bootstrap_error(noisy_data, t, resamples=30, seed=0)
    assert 1e-3 < err < 0.05
    big = simulate_counts(state_from_coherence(0.886), SETTINGS, 600000, seed=5)
    assert bootstrap_error(big, t, resamples=30, seed=0) < err


def test_bootstrap_vanishes_for_huge_counts():
    t = BELL_TARGETS["phi+"]
    data = simulate_counts(state_from_coherence(0.886), SETTINGS, 1e8, noise=False)
    assert bootstrap_error(data, t, resamples=10, seed=0) < 1e-3


def test_bootstrap_validation_and_failures(noisy_data, monkeypatch):
    t = BELL_TARGETS["phi+"]
    with pytest.raises(ValueError):
        bootstrap_error(noisy_data, t, resamples=1)

    calls = {"n": 0}
    real = tomo.mle_reconstruct

    def flaky(*args, **kwargs):
        calls["n"] += 1
        if calls["n"] % 5 == 0:
            raise np.linalg.LinAlgError("forced")
        return real(*args, **kwargs)

    monkeypatch.setattr(tomo, "mle_reconstruct", flaky)
    with pytest.raises(BootstrapError):
        bootstrap_error(noisy_data, t, resamples=10, seed=0)
