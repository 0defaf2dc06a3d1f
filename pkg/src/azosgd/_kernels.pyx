# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled least-squares kernels.

Mirrors ``azosgd._fallback`` function for function; both consume identical
pre-drawn directions and sample indices, so they agree up to rounding.
"""
import numpy as np

cimport numpy as cnp
from libc.math cimport floor, isfinite, sin, sqrt

cnp.import_array()

cdef enum:
    NOISE_ZERO = 0
    NOISE_CONSTANT = 1
    NOISE_OSCILLATION = 2
    NOISE_MACHINE = 3


cdef inline double _noise(int kind, double level, double width, double s) noexcept nogil:
    cdef double v
    if kind == NOISE_ZERO:
        return 0.0
    if kind == NOISE_CONSTANT:
        return level
    if kind == NOISE_OSCILLATION:
        v = sin(s / width)
        if v > 0.0:
            return level
        if v < 0.0:
            return -level
        return 0.0
    v = 43758.5453 * sin(12.9898 * s)
    return level * (2.0 * (v - floor(v)) - 1.0)


cdef void _coefs(const double[:, ::1] A, const double[::1] b, const double[::1] x,
                 const double[:, ::1] E, const cnp.int64_t[::1] idx, Py_ssize_t row0,
                 Py_ssize_t nrows, double tau, int kind, double level, double width,
                 double[::1] out) noexcept nogil:
    # f(x +- tau e) = (u +- v)^2 with u = a.x - b_i and v = tau * a.e
    cdef Py_ssize_t d = A.shape[1]
    cdef Py_ssize_t r, j, i
    cdef double ax, ae, se, u, v, fp, fm
    cdef double sx = 0.0
    cdef double scale = d / (2.0 * tau)
    for j in range(d):
        sx += x[j]
    for r in range(nrows):
        i = idx[row0 + r]
        ax = 0.0
        ae = 0.0
        se = 0.0
        for j in range(d):
            ax += A[i, j] * x[j]
            ae += A[i, j] * E[row0 + r, j]
            se += E[row0 + r, j]
        u = ax - b[i]
        v = tau * ae
        fp = (u + v) * (u + v) + _noise(kind, level, width, sx + tau * se)
        fm = (u - v) * (u - v) + _noise(kind, level, width, sx - tau * se)
        out[r] = scale * (fp - fm)


def noise_values(const double[::1] sums, int kind, double level, double width):
    """Noise at points whose coordinate sums are ``sums``."""
    cdef Py_ssize_t n = sums.shape[0], r
    out = np.empty(n)
    cdef double[::1] o = out
    for r in range(n):
        o[r] = _noise(kind, level, width, sums[r])
    return out


def lsq_two_point_coefs(const double[:, ::1] A, const double[::1] b, const double[::1] x,
                        const double[:, ::1] E, const cnp.int64_t[::1] idx,
                        double tau, int kind, double level, double width):
    """Per-row coefficients ``d/(2 tau) * (f_delta(x + tau e) - f_delta(x - tau e))``."""
    cdef Py_ssize_t n = E.shape[0]
    out = np.empty(n)
    cdef double[::1] o = out
    with nogil:
        _coefs(A, b, x, E, idx, 0, n, tau, kind, level, width, o)
    return out


def lsq_azo_chunk(const double[:, ::1] A, const double[::1] b,
                  double[::1] x, double[::1] x_ag,
                  const double[:, ::1] E, const cnp.int64_t[::1] idx,
                  long k0, long count, long batch, double gamma, bint growing,
                  double radius, double tau, int kind, double level, double width,
                  const cnp.uint8_t[::1] record, double[::1] values, double[::1] xnorms,
                  double stop_value):
    """Run ``count`` AZO-SGD iterations starting at iteration ``k0``.

    ``x`` and ``x_ag`` are updated in place. ``values[t]`` receives f(x_ag)
    after iteration ``k0 + t`` when ``record[t]`` is set; ``xnorms[t]`` is
    always written. Returns ``(completed, grad_norm, status)``: status 0 ran
    all ``count`` iterations, 1 means the gradient estimate at iteration
    ``k0 + completed`` was not finite, 2 means a recorded value fell to
    ``stop_value`` or below and the chunk ended after that iteration.
    """
    cdef Py_ssize_t m = A.shape[0], d = A.shape[1]
    cdef Py_ssize_t t, j, r, i
    cdef double beta, inv, gk, acc, nrm, scale, res
    cdef double gnorm = 0.0
    cdef long done = count
    cdef int status = 0
    xmd_arr = np.empty(d)
    g_arr = np.empty(d)
    c_arr = np.empty(batch)
    cdef double[::1] xmd = xmd_arr
    cdef double[::1] g = g_arr
    cdef double[::1] c = c_arr
    with nogil:
        for t in range(count):
            beta = 1.0 + (k0 + t) / 6.0
            inv = 1.0 / beta
            if growing:
                gk = gamma * (k0 + t + 1)
            else:
                gk = gamma
            for j in range(d):
                xmd[j] = inv * x[j] + (1.0 - inv) * x_ag[j]
            _coefs(A, b, xmd, E, idx, t * batch, batch, tau, kind, level, width, c)
            for j in range(d):
                g[j] = 0.0
            for r in range(batch):
                for j in range(d):
                    g[j] += c[r] * E[t * batch + r, j]
            acc = 0.0
            for j in range(d):
                g[j] = g[j] / batch
                acc += g[j] * g[j]
            gnorm = sqrt(acc)
            if not isfinite(gnorm):
                done = t
                status = 1
                break
            acc = 0.0
            for j in range(d):
                x[j] = x[j] - gk * g[j]
                acc += x[j] * x[j]
            nrm = sqrt(acc)
            if nrm > radius:
                scale = radius / nrm
                acc = 0.0
                for j in range(d):
                    x[j] = x[j] * scale
                    acc += x[j] * x[j]
                nrm = sqrt(acc)
            xnorms[t] = nrm
            for j in range(d):
                x_ag[j] = inv * x[j] + (1.0 - inv) * x_ag[j]
            if record[t]:
                acc = 0.0
                for i in range(m):
                    res = -b[i]
                    for j in range(d):
                        res += A[i, j] * x_ag[j]
                    acc += res * res
                values[t] = acc / m
                if values[t] <= stop_value:
                    done = t + 1
                    status = 2
                    break
    return done, gnorm, status
