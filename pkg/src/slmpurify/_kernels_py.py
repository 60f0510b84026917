"""NumPy implementations of the numerical kernels.

These are the reference versions; ``_ckernels`` mirrors them loop for loop.
"""
import numpy as np

N_PARAMS = 16
_OFFDIAG = [(j, k) for j in range(4) for k in range(j)]
P_FLOOR = 1e-300


def weighted_phase_sum(weights, phase_row, phase_col):
    """Return ``(sum w*exp(i(r+c)), sum w)`` over a 2-D tensor grid."""
    w = np.asarray(weights, dtype=float)
    ph = np.asarray(phase_row, dtype=float)[:, None] + np.asarray(phase_col, dtype=float)[None, :]
    re = np.sum(w * np.cos(ph))
    im = np.sum(w * np.sin(ph))
    return complex(re, im), float(np.sum(w))


def params_to_tmatrix(params):
    t = np.zeros((4, 4), dtype=complex)
    t[np.diag_indices(4)] = params[:4]
    for m, (j, k) in enumerate(_OFFDIAG):
        t[j, k] = params[4 + 2 * m] + 1j * params[5 + 2 * m]
    return t


def tmatrix_to_params(t):
    params = np.empty(N_PARAMS)
    params[:4] = np.real(np.diag(t))
    for m, (j, k) in enumerate(_OFFDIAG):
        params[4 + 2 * m] = t[j, k].real
        params[5 + 2 * m] = t[j, k].imag
    return params


def poisson_nll_grad(params, projectors, counts, total):
    """Poisson negative log-likelihood of rho = T^H T / Tr(T^H T) and its gradient.

    The value is ``sum(N p - n - n ln(N p / n))``, i.e. ``sum(N p - n ln p)``
    shifted by a constant that depends only on the data.

    ``projectors`` has shape (K, 4, 4); the expected count of setting i is
    ``total * Tr(P_i rho)``.
    """
    t = params_to_tmatrix(np.asarray(params, dtype=float))
    m = t.conj().T @ t
    tau = np.trace(m).real
    p = np.einsum("kab,ba->k", projectors, m).real / tau
    p = np.maximum(p, P_FLOOR)
    n = np.asarray(counts, dtype=float)
    pos = n > 0
    # deviance form: the data-only constant sum(n - n ln(n/N)) is subtracted
    # term by term, so the value is ~0 near a good fit and keeps full precision
    delta = total * p[pos] / n[pos] - 1.0
    nll = total * np.sum(p[~pos]) + np.sum(n[pos] * (delta - np.log1p(delta)))
    coef = total - n / p
    g = (np.einsum("k,kab->ab", coef, projectors) - np.sum(coef * p) * np.eye(4)) / tau
    x = t @ g
    grad = np.empty(N_PARAMS)
    grad[:4] = 2.0 * np.real(np.diag(x))
    for mi, (j, k) in enumerate(_OFFDIAG):
        grad[4 + 2 * mi] = 2.0 * x[j, k].real
        grad[5 + 2 * mi] = 2.0 * x[j, k].imag
    return float(nll), grad
