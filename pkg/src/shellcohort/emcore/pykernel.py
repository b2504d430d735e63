"""Pure-NumPy EM kernel for univariate Gaussian mixtures.

This is the reference implementation of the inner loop; the compiled Cython
kernel (``shellcohort.emcore._kernel``) implements the identical contract and
must agree with this one to floating-point noise.  All responsibilities are
computed in the log domain, M-steps are the exact closed-form updates, and the
reported log-likelihood is always an exact evaluation at the returned
parameters (never a stale value from the previous iteration).
"""

from __future__ import annotations

import math

import numpy as np

_LOG_2PI = math.log(2.0 * math.pi)

# Floor applied to mixing weights before taking logs so that a component
# starved of responsibility cannot produce -inf log-densities.
_WEIGHT_TINY = 1e-300


def em_run(
    x: np.ndarray,
    means: np.ndarray,
    sds: np.ndarray,
    weights: np.ndarray,
    equal_variance: bool,
    tol: float,
    max_iter: int,
    var_floor: float,
):
    """Run EM to convergence from a single start.

    Parameters
    ----------
    x : 1-d float array of observations.
    means, sds, weights : initial parameters, length ``g`` each.
    equal_variance : if true, all components share one pooled variance.
    tol : relative log-likelihood convergence tolerance; the loop stops when
        ``|LL_t - LL_{t-1}| <= tol * max(1, |LL_{t-1}|)``.
    max_iter : maximum number of M-steps.
    var_floor : lower clamp applied to every component variance.

    Returns
    -------
    (means, sds, weights, loglik, n_iter, converged, trace)
        Components are in input order (caller sorts).  ``trace`` holds the
        log-likelihood evaluated at the start of every iteration, ending with
        the exact log-likelihood of the returned parameters; it is
        non-decreasing up to floating-point noise.
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    n = x.size
    g = len(means)
    mu = np.asarray(means, dtype=np.float64).copy()
    var = np.maximum(np.asarray(sds, dtype=np.float64) ** 2, var_floor)
    w = np.maximum(np.asarray(weights, dtype=np.float64), _WEIGHT_TINY)

    trace = np.empty(max_iter + 1, dtype=np.float64)
    ll_prev = 0.0
    it = 0
    converged = False
    while True:
        sd = np.sqrt(var)
        z = (x[:, None] - mu[None, :]) / sd[None, :]
        logp = np.log(w)[None, :] - np.log(sd)[None, :] - 0.5 * (_LOG_2PI + z * z)
        shift = logp.max(axis=1)
        log_li = shift + np.log(np.exp(logp - shift[:, None]).sum(axis=1))
        ll = float(log_li.sum())
        trace[it] = ll
        if it > 0 and abs(ll - ll_prev) <= tol * max(1.0, abs(ll_prev)):
            converged = True
            break
        if it == max_iter:
            break
        ll_prev = ll

        resp = np.exp(logp - log_li[:, None])
        nk = np.maximum(resp.sum(axis=0), _WEIGHT_TINY)
        w = nk / n
        mu = (resp.T @ x) / nk
        sq = (x[:, None] - mu[None, :]) ** 2
        if equal_variance:
            pooled = float((resp * sq).sum()) / n
            var = np.maximum(np.full(g, pooled), var_floor)
        else:
            var = np.maximum((resp * sq).sum(axis=0) / nk, var_floor)
        it += 1

    return mu, np.sqrt(var), w, float(trace[it]), it, converged, trace[: it + 1].copy()
