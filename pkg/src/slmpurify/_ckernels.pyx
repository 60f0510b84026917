# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled versions of the kernels in ``_kernels_py``.

Sums are accumulated in a fixed row-major order with Neumaier compensation,
so results do not depend on BLAS threading or array layout.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport cos, sin, log1p, fabs

cnp.import_array()

cdef enum:
    NP = 16

cdef double FLOOR = 1e-300


cdef inline void _neumaier(double *s, double *c, double x) noexcept nogil:
    cdef double t = s[0] + x
    if fabs(s[0]) >= fabs(x):
        c[0] += (s[0] - t) + x
    else:
        c[0] += (x - t) + s[0]
    s[0] = t


def weighted_phase_sum(weights, phase_row, phase_col):
    cdef const double[:, ::1] w = np.ascontiguousarray(weights, dtype=np.float64)
    cdef const double[::1] r = np.ascontiguousarray(phase_row, dtype=np.float64)
    cdef const double[::1] c = np.ascontiguousarray(phase_col, dtype=np.float64)
    cdef Py_ssize_t n = w.shape[0], m = w.shape[1], j, k
    if r.shape[0] != n or c.shape[0] != m:
        raise ValueError("phase vectors do not match the weight grid")
    cdef double sre = 0.0, cre = 0.0, sim = 0.0, cim = 0.0, sw = 0.0, cw = 0.0
    cdef double wk, cr, sr
    # the phase is separable: expand exp(i(r + c)) by angle addition so only
    # n + m trigonometric evaluations are needed
    cdef double[::1] cc = np.cos(np.asarray(c))
    cdef double[::1] sc = np.sin(np.asarray(c))
    with nogil:
        for j in range(n):
            cr = cos(r[j])
            sr = sin(r[j])
            for k in range(m):
                wk = w[j, k]
                _neumaier(&sre, &cre, wk * (cr * cc[k] - sr * sc[k]))
                _neumaier(&sim, &cim, wk * (sr * cc[k] + cr * sc[k]))
                _neumaier(&sw, &cw, wk)
    return complex(sre + cre, sim + cim), sw + cw


cdef inline void _params_to_t(const double[::1] p, double complex t[4][4]) noexcept nogil:
    cdef int j, k, m = 0
    for j in range(4):
        for k in range(4):
            t[j][k] = 0
        t[j][j] = p[j]
    for j in range(4):
        for k in range(j):
            t[j][k] = p[4 + 2 * m] + 1j * p[5 + 2 * m]
            m += 1


def poisson_nll_grad(params, projectors, counts, double total):
    cdef const double[::1] p = np.ascontiguousarray(params, dtype=np.float64)
    cdef const double complex[:, :, ::1] proj = np.ascontiguousarray(projectors, dtype=np.complex128)
    cdef const double[::1] n = np.ascontiguousarray(counts, dtype=np.float64)
    cdef Py_ssize_t nk = proj.shape[0], i
    if p.shape[0] != NP:
        raise ValueError("expected 16 Cholesky parameters")
    if n.shape[0] != nk:
        raise ValueError("counts and projectors differ in length")
    grad = np.empty(NP, dtype=np.float64)
    cdef double[::1] gv = grad
    cdef double complex t[4][4]
    cdef double complex mm[4][4]
    cdef double complex g[4][4]
    cdef double complex x
    cdef double tau = 0.0, pi, coef, delta, nll = 0.0, cp = 0.0
    cdef int a, b, c, m
    with nogil:
        _params_to_t(p, t)
        for a in range(4):
            for b in range(4):
                x = 0
                for c in range(4):
                    x = x + (t[c][a].real - 1j * t[c][a].imag) * t[c][b]
                mm[a][b] = x
                g[a][b] = 0
            tau += mm[a][a].real
        for i in range(nk):
            x = 0
            for a in range(4):
                for b in range(4):
                    x = x + proj[i, a, b] * mm[b][a]
            pi = x.real / tau
            if pi < FLOOR:
                pi = FLOOR
            if n[i] > 0:
                delta = total * pi / n[i] - 1.0
                nll += n[i] * (delta - log1p(delta))
            else:
                nll += total * pi
            coef = total - n[i] / pi
            cp += coef * pi
            for a in range(4):
                for b in range(4):
                    g[a][b] = g[a][b] + coef * proj[i, a, b]
        for a in range(4):
            g[a][a] = g[a][a] - cp
            for b in range(4):
                g[a][b] = g[a][b] / tau
        m = 0
        for a in range(4):
            x = 0
            for c in range(4):
                x = x + t[a][c] * g[c][a]
            gv[a] = 2.0 * x.real
        for a in range(4):
            for b in range(a):
                x = 0
                for c in range(4):
                    x = x + t[a][c] * g[c][b]
                gv[4 + 2 * m] = 2.0 * x.real
                gv[5 + 2 * m] = 2.0 * x.imag
                m += 1
    return nll, grad
