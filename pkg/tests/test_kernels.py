import numpy as np
import pytest

from slmpurify import kernels
from slmpurify._kernels_py import N_PARAMS, params_to_tmatrix, tmatrix_to_params
from slmpurify.tomography import default_setting_set, projector_array

BACKENDS = kernels.available_backends()


def test_python_backend_always_present():
    assert "python" in BACKENDS
    assert kernels.BACKEND in BACKENDS


def _phase_problem(seed=0, n=37, m=23):
    rng = np.random.default_rng(seed)
    return rng.random((n, m)), rng.normal(size=n) * 3, rng.normal(size=m) * 3


@pytest.mark.parametrize("name", sorted(BACKENDS))
def test_weighted_phase_sum_matches_direct_sum(name):
    w, r, c = _phase_problem()
    s, ws = BACKENDS[name].weighted_phase_sum(w, r, c)
    ref = np.sum(w * np.exp(1j * (r[:, None] + c[None, :])))
    assert abs(s - ref) < 1e-12
    assert ws == pytest.approx(w.sum(), rel=1e-14)


def test_weighted_phase_sum_shape_check():
    w, r, c = _phase_problem()
    for mod in BACKENDS.values():
        with pytest.raises(ValueError):
            mod.weighted_phase_sum(w, r[:-1], c)


def test_cholesky_parameter_roundtrip():
    x = np.random.default_rng(1).normal(size=N_PARAMS)
    t = params_to_tmatrix(x)
    assert np.allclose(np.triu(t, 1), 0)
    assert np.allclose(np.diag(t).imag, 0)
    assert np.allclose(tmatrix_to_params(t), x)


def _likelihood_problem(seed=2):
    rng = np.random.default_rng(seed)
    proj = projector_array(default_setting_set())
    counts = rng.poisson(500, size=16).astype(float)
    counts[3] = 0.0
    return rng.normal(size=N_PARAMS), proj, counts, 2000.0


@pytest.mark.parametrize("name", sorted(BACKENDS))
def test_nll_gradient_matches_finite_differences(name):
    x, proj, counts, total = _likelihood_problem()
    fn = BACKENDS[name].poisson_nll_grad
    _, g = fn(x, proj, counts, total)
    h = 1e-6
    fd = np.array([(fn(x + e, proj, counts, total)[0] - fn(x - e, proj, counts, total)[0]) / (2 * h)
                   for e in np.eye(N_PARAMS) * h])
    assert np.allclose(g, fd, rtol=1e-5, atol=1e-4)


def test_nll_value_matches_definition():
    x, proj, counts, total = _likelihood_problem()
    t = params_to_tmatrix(x)
    rho = t.conj().T @ t
    rho /= np.trace(rho).real
    p = np.einsum("kab,ba->k", proj, rho).real
    pos = counts > 0
    plain = np.sum(total * p) - np.sum(counts[pos] * np.log(p[pos]))
    # deviance form: plain NLL minus the data-only constant sum(n - n ln(n/N))
    const = np.sum(counts[pos] - counts[pos] * np.log(counts[pos] / total))
    for mod in BACKENDS.values():
        assert mod.poisson_nll_grad(x, proj, counts, total)[0] == pytest.approx(plain - const, rel=1e-10)


@pytest.mark.skipif("cython" not in BACKENDS, reason="compiled extension not built")
def test_backends_agree():
    w, r, c = _phase_problem(5, 101, 101)
    a = BACKENDS["python"].weighted_phase_sum(w, r, c)
    b = BACKENDS["cython"].weighted_phase_sum(w, r, c)
    assert abs(a[0] - b[0]) < 1e-11 and a[1] == pytest.approx(b[1], rel=1e-14)
    x, proj, counts, total = _likelihood_problem(7)
    fa, ga = BACKENDS["python"].poisson_nll_grad(x, proj, counts, total)
    fb, gb = BACKENDS["cython"].poisson_nll_grad(x, proj, counts, total)
    assert fa == pytest.approx(fb, rel=1e-12)
    assert np.allclose(ga, gb, rtol=1e-10, atol=1e-9)
