"""Distribution fitting for shell-length samples.

Spat (young-of-year) length distributions are summarised by a log-normal MLE;
older live animals by univariate Gaussian mixtures fitted with EM under two
variance families:

* ``"V"`` -- every component has its own variance (3g - 1 free parameters);
* ``"E"`` -- one variance shared by all components (2g free parameters).

Model selection across families and component counts uses BIC on the
"larger is better" convention, with a parsimony rule for near-ties.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import emcore

VARIANCE_FAMILIES = ("V", "E")


@dataclass(frozen=True)
class FitConfig:
    """Settings shared by every fit of one analysis scope.

    ``seed`` feeds a dedicated RNG used only to perturb the deterministic
    starting means; two fits with identical data and config are identical.
    ``g_max`` and ``delta_bic`` govern the candidate sweep and selection.
    """

    g_max: int = 4
    tol: float = 1e-8
    max_iter: int = 500
    n_starts: int = 10
    var_floor: float = 1e-4
    delta_bic: float = 2.0
    seed: int = 0

    def __post_init__(self):
        if self.g_max < 1:
            raise ValueError("g_max must be at least 1")
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if self.n_starts < 1:
            raise ValueError("n_starts must be at least 1")
        if self.var_floor <= 0:
            raise ValueError("var_floor must be positive")
        if self.delta_bic < 0:
            raise ValueError("delta_bic must be non-negative")


@dataclass(frozen=True)
class LogNormalFit:
    """Maximum-likelihood log-normal summary of a spat sample.

    ``mean_mm`` / ``sd_mm`` are the implied moments on the millimetre scale:
    ``mean = exp(meanlog + sdlog^2 / 2)`` and
    ``sd = mean * sqrt(exp(sdlog^2) - 1)``.
    """

    meanlog: float
    sdlog: float
    mean_mm: float
    sd_mm: float
    n: int


@dataclass(frozen=True)
class MixtureFit:
    """A fitted Gaussian mixture, components sorted by ascending mean.

    ``raw_weights`` are the mixture's own mixing proportions (summing to 1);
    down-weighting against the spat fraction happens later.  ``trace`` is the
    winning start's per-iteration log-likelihood sequence and ``loglik`` is an
    exact evaluation at the returned parameters.
    """

    variance_family: str
    g: int
    means: tuple[float, ...]
    sds: tuple[float, ...]
    raw_weights: tuple[float, ...]
    loglik: float
    bic: float
    n: int
    converged: bool
    iterations: int
    degenerate: bool = False
    trace: tuple[float, ...] = field(default=(), repr=False)


def fit_lognormal(lengths) -> LogNormalFit:
    """Fit a log-normal by maximum likelihood (divide-by-n variance).

    Raises ValueError for n < 2, non-positive lengths, or zero variance on
    the log scale (all lengths identical).
    """
    x = np.asarray(lengths, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError("lengths must be one-dimensional")
    if x.size < 2:
        raise ValueError(f"log-normal fit needs at least 2 lengths, got {x.size}")
    if not np.all(np.isfinite(x)):
        raise ValueError("lengths must be finite")
    if np.any(x <= 0):
        raise ValueError("log-normal fit requires strictly positive lengths")
    logs = np.log(x)
    meanlog = float(logs.mean())
    sdlog = float(np.sqrt(np.mean((logs - meanlog) ** 2)))
    if sdlog == 0.0:
        raise ValueError("all lengths identical: zero variance on the log scale")
    mean_mm = math.exp(meanlog + 0.5 * sdlog * sdlog)
    sd_mm = mean_mm * math.sqrt(math.expm1(sdlog * sdlog))
    return LogNormalFit(meanlog, sdlog, mean_mm, sd_mm, int(x.size))


def n_parameters(g: int, variance_family: str) -> int:
    """Free-parameter count: 3g - 1 for family V, 2g for family E."""
    if variance_family == "V":
        return 3 * g - 1
    if variance_family == "E":
        return 2 * g
    raise ValueError(f"unknown variance family {variance_family!r}")


def bic(loglik: float, g: int, variance_family: str, n: int) -> float:
    """Bayesian information criterion, larger-is-better convention."""
    if n < 1:
        raise ValueError("n must be positive")
    return 2.0 * loglik - n_parameters(g, variance_family) * math.log(n)


def _validate_mixture_inputs(x: np.ndarray, g: int) -> None:
    if x.ndim != 1:
        raise ValueError("lengths must be one-dimensional")
    if not np.all(np.isfinite(x)):
        raise ValueError("lengths must be finite")
    if g < 1:
        raise ValueError("g must be at least 1")
    needed = max(2 * g, g + 1)
    if x.size < needed:
        raise ValueError(
            f"mixture with g={g} needs at least {needed} observations, got {x.size}"
        )


def _starting_points(x: np.ndarray, g: int, cfg: FitConfig):
    """Deterministic multi-start initialisations.

    Start 0 places means at the (2j - 1) / (2g) quantiles with sds of
    overall-sd / g and uniform weights; later starts jitter those means with
    seeded Gaussian noise of scale overall-sd / 2.
    """
    levels = (2.0 * np.arange(1, g + 1) - 1.0) / (2.0 * g)
    base_means = np.quantile(x, levels)
    sd_all = float(x.std())
    base_sd = max(sd_all / g, math.sqrt(cfg.var_floor))
    sds = np.full(g, base_sd)
    weights = np.full(g, 1.0 / g)
    rng = np.random.default_rng(cfg.seed)
    yield base_means.copy(), sds, weights
    for _ in range(cfg.n_starts - 1):
        jitter = rng.normal(0.0, 1.0, size=g) * (sd_all / 2.0)
        yield np.sort(base_means + jitter), sds, weights


def em_fit(lengths, g: int, variance_family: str, config: FitConfig) -> MixtureFit:
    """Fit a g-component Gaussian mixture by multi-start EM.

    The winner is the converged start with the highest log-likelihood; if no
    start converged, the best run overall is returned with
    ``converged=False``.  Components come back sorted by ascending mean.
    """
    if variance_family not in VARIANCE_FAMILIES:
        raise ValueError(f"unknown variance family {variance_family!r}")
    x = np.asarray(lengths, dtype=np.float64)
    _validate_mixture_inputs(x, g)
    kernel = emcore.get_kernel()

    best = None
    best_key = None
    for means0, sds0, weights0 in _starting_points(x, g, config):
        result = kernel.em_run(
            x,
            means0,
            sds0,
            weights0,
            variance_family == "E",
            config.tol,
            config.max_iter,
            config.var_floor,
        )
        ll, converged = result[3], result[5]
        key = (bool(converged), ll)
        if best_key is None or key > best_key:
            best, best_key = result, key

    mu, sd, w, loglik, iterations, converged, trace = best
    order = np.argsort(mu, kind="stable")
    mu, sd, w = mu[order], sd[order], w[order]
    n = int(x.size)
    degenerate = bool(np.any(w < 1.0 / n) or np.any(sd * sd <= config.var_floor * (1 + 1e-12)))
    return MixtureFit(
        variance_family=variance_family,
        g=g,
        means=tuple(float(v) for v in mu),
        sds=tuple(float(v) for v in sd),
        raw_weights=tuple(float(v) for v in w),
        loglik=float(loglik),
        bic=bic(float(loglik), g, variance_family, n),
        n=n,
        converged=bool(converged),
        iterations=int(iterations),
        degenerate=degenerate,
        trace=tuple(float(v) for v in trace),
    )


def candidate_fits(lengths, config: FitConfig) -> list[MixtureFit]:
    """Fit every admissible candidate: families V then E, g up to config.g_max.

    Candidates whose g would need more observations than available are
    skipped rather than raising.
    """
    x = np.asarray(lengths, dtype=np.float64)
    fits = []
    for family in VARIANCE_FAMILIES:
        for g in range(1, config.g_max + 1):
            if x.size >= max(2 * g, g + 1):
                fits.append(em_fit(x, g, family, config))
    if not fits:
        raise ValueError(
            f"no admissible mixture candidates for {x.size} observations"
        )
    return fits


def select_model(fits: list[MixtureFit], delta_bic: float = 2.0) -> MixtureFit:
    """Pick a fit by BIC with a parsimony rule for near-ties.

    Let B* be the best BIC.  If the runner-up trails by at least
    ``delta_bic`` the argmax wins outright.  Otherwise the smallest-g
    family-V fit within ``delta_bic`` of B* is taken; if no V fit is that
    close, the smallest-g family-E fit within the band.
    """
    if not fits:
        raise ValueError("select_model needs at least one candidate fit")
    if len({f.n for f in fits}) != 1:
        raise ValueError("candidate fits were made on different data")
    if delta_bic < 0:
        raise ValueError("delta_bic must be non-negative")
    best = max(fits, key=lambda f: f.bic)
    others = [f for f in fits if f is not best]
    if not others or best.bic - max(f.bic for f in others) >= delta_bic:
        return best
    near = [f for f in fits if best.bic - f.bic < delta_bic]
    for family in VARIANCE_FAMILIES:  # V first: preferred on ties
        in_family = [f for f in near if f.variance_family == family]
        if in_family:
            return min(in_family, key=lambda f: f.g)
    return best  # unreachable: `best` always sits in the near-tie band


def spat_fraction(n_spat: int, n_live: int) -> float:
    """Share of spat among all animals measured in a sample."""
    if n_spat < 0 or n_live < 0:
        raise ValueError("counts must be non-negative")
    total = n_spat + n_live
    if total == 0:
        raise ValueError("spat fraction undefined for an empty sample")
    return n_spat / total


def adjust_weights(raw_weights, pi0: float) -> tuple[float, ...]:
    """Scale mixture weights by the non-spat share ``1 - pi0``.

    ``raw_weights`` must sum to 1 within 1e-9 and ``pi0`` must lie in [0, 1].
    """
    w = np.asarray(raw_weights, dtype=np.float64)
    if abs(float(w.sum()) - 1.0) > 1e-9:
        raise ValueError(f"raw weights sum to {float(w.sum())!r}, expected 1")
    if not 0.0 <= pi0 <= 1.0:
        raise ValueError(f"pi0 must lie in [0, 1], got {pi0!r}")
    return tuple(float(v) * (1.0 - pi0) for v in w)
