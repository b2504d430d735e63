# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled EM kernel for univariate Gaussian mixtures.

Mirrors shellcohort.emcore.pykernel.em_run exactly: log-domain E-step,
closed-form M-step, variance floor, relative log-likelihood stopping rule.
The returned log-likelihood is always an exact evaluation at the returned
parameters.
"""

from libc.math cimport exp, fabs, log

import numpy as np

cdef double _LOG_2PI = log(2.0 * 3.141592653589793)
cdef double _WEIGHT_TINY = 1e-300


def em_run(x, means, sds, weights, equal_variance, tol, max_iter, var_floor):
    """See shellcohort.emcore.pykernel.em_run for the full contract."""
    cdef double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef Py_ssize_t n = xv.shape[0]
    cdef Py_ssize_t g = len(means)

    mu_arr = np.asarray(means, dtype=np.float64).copy()
    var_arr = np.maximum(np.asarray(sds, dtype=np.float64) ** 2, var_floor)
    w_arr = np.maximum(np.asarray(weights, dtype=np.float64), _WEIGHT_TINY)
    resp_arr = np.empty((n, g), dtype=np.float64)
    trace_arr = np.empty(int(max_iter) + 1, dtype=np.float64)
    logp_arr = np.empty(g, dtype=np.float64)
    logconst_arr = np.empty(g, dtype=np.float64)
    halfprec_arr = np.empty(g, dtype=np.float64)

    cdef double[::1] mu = mu_arr
    cdef double[::1] var = var_arr
    cdef double[::1] w = w_arr
    cdef double[:, ::1] resp = resp_arr
    cdef double[::1] trace = trace_arr
    cdef double[::1] logp = logp_arr
    cdef double[::1] logconst = logconst_arr
    cdef double[::1] halfprec = halfprec_arr

    cdef bint eqvar = 1 if equal_variance else 0
    cdef double rtol = tol
    cdef double floor = var_floor
    cdef Py_ssize_t it_max = int(max_iter)

    cdef Py_ssize_t i, k, it
    cdef double ll, ll_prev, shift, acc, inv_acc, xi, lp, t, nk, m, pooled, d
    cdef bint converged = 0

    ll_prev = 0.0
    it = 0
    while True:
        # E-step: log-domain responsibilities plus the exact log-likelihood.
        # Per-component constants are hoisted out of the point loop, and the
        # responsibilities reuse the shifted exponentials already computed
        # for the log-likelihood.
        for k in range(g):
            logconst[k] = log(w[k]) - 0.5 * log(var[k]) - 0.5 * _LOG_2PI
            halfprec[k] = 0.5 / var[k]
        ll = 0.0
        for i in range(n):
            xi = xv[i]
            shift = -1e308
            for k in range(g):
                d = xi - mu[k]
                lp = logconst[k] - d * d * halfprec[k]
                logp[k] = lp
                if lp > shift:
                    shift = lp
            acc = 0.0
            for k in range(g):
                t = exp(logp[k] - shift)
                resp[i, k] = t
                acc += t
            ll += shift + log(acc)
            inv_acc = 1.0 / acc
            for k in range(g):
                resp[i, k] *= inv_acc
        trace[it] = ll
        if it > 0 and fabs(ll - ll_prev) <= rtol * (1.0 if fabs(ll_prev) < 1.0 else fabs(ll_prev)):
            converged = 1
            break
        if it == it_max:
            break
        ll_prev = ll

        # M-step: exact weighted-moment updates.
        pooled = 0.0
        for k in range(g):
            nk = 0.0
            m = 0.0
            for i in range(n):
                nk += resp[i, k]
                m += resp[i, k] * xv[i]
            if nk < _WEIGHT_TINY:
                nk = _WEIGHT_TINY
            w[k] = nk / n
            mu[k] = m / nk
            acc = 0.0
            for i in range(n):
                d = xv[i] - mu[k]
                acc += resp[i, k] * d * d
            var[k] = acc / nk
            pooled += acc
        if eqvar:
            pooled /= n
            for k in range(g):
                var[k] = pooled
        for k in range(g):
            if var[k] < floor:
                var[k] = floor
        it += 1

    return (
        mu_arr,
        np.sqrt(var_arr),
        w_arr,
        float(trace[it]),
        int(it),
        bool(converged),
        trace_arr[: it + 1].copy(),
    )
