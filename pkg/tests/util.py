"""Shared test helpers: independent oracles and the recovery measurement.

Everything here is deliberately implemented apart from the package code it
checks: the inverse-normal oracle uses bisection over an erf-based CDF rather
than ``statistics.NormalDist``, and the recovery measurement works purely
from emitted CSV artifacts.
"""

from __future__ import annotations

import math
from collections import Counter, defaultdict

from shellcohort.pipeline import read_components_csv
from shellcohort.survey import parse_survey_csv
from shellcohort.synth import read_truth_csv


def inv_norm_oracle(p: float) -> float:
    """Standard-normal quantile by bisection on the erf-based CDF."""
    if not 0.0 < p < 1.0:
        raise ValueError("p must lie in (0, 1)")

    def cdf(x: float) -> float:
        return 0.5 * (1.0 + math.erf(x / math.sqrt(2.0)))

    lo, hi = -40.0, 40.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if cdf(mid) < p:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def gaussian_mixture_loglik(x, means, sds, weights) -> float:
    """Plain-math mixture log-likelihood (independent of the package)."""
    log_2pi = math.log(2.0 * math.pi)
    total = 0.0
    for v in x:
        terms = [
            math.log(w) - math.log(s) - 0.5 * (log_2pi + ((v - m) / s) ** 2)
            for m, s, w in zip(means, sds, weights)
        ]
        shift = max(terms)
        total += shift + math.log(sum(math.exp(t - shift) for t in terms))
    return total


def measure_link_recovery(survey_path, truth_path, components_path, years):
    """Fraction of true cohort links reproduced by the pipeline's chains.

    A *true link* is a pair of consecutive-year age classes of one true
    cohort, each with at least 50 surviving animals.  Animals are assigned
    to pipeline components by maximum posterior among the sample's live
    components (spat go to the sample's spat component); each true age class
    maps to its majority component, and a link counts as recovered when the
    two majority components carry the same cohort label.

    Returns (recovered, total).
    """
    records = read_components_csv(components_path)
    truth = read_truth_csv(truth_path)
    observations = parse_survey_csv(survey_path, years=years)
    if len(truth) != len(observations):
        raise ValueError("truth sidecar does not align with the survey file")

    live = defaultdict(list)
    spat = {}
    for rec in records:
        key = (rec.stratum_id, rec.reef_id, rec.year)
        if rec.kind == "live":
            live[key].append(rec)
        else:
            spat[key] = rec

    def posterior_argmax(length, comps):
        best, best_ll = None, -math.inf
        for c in comps:
            z = (length - c.mean_mm) / c.sd_mm
            ll = math.log(max(c.raw_weight, 1e-300)) - math.log(c.sd_mm) - 0.5 * z * z
            if ll > best_ll:
                best, best_ll = c, ll
        return best

    votes = defaultdict(Counter)
    by_id = {}
    class_size = Counter()
    for obs, rec in zip(observations, truth):
        key = (obs.stratum_id, obs.reef_id, obs.year)
        class_size[(rec.true_cohort, obs.year)] += 1
        if rec.true_age == 1:
            comp = spat.get(key)
        else:
            comp = posterior_argmax(obs.length_mm, live.get(key, []))
        if comp is not None:
            votes[(rec.true_cohort, obs.year)][id(comp)] += 1
            by_id[id(comp)] = comp

    majority = {
        cls: by_id[counter.most_common(1)[0][0]] for cls, counter in votes.items()
    }
    links = [
        (cohort, year)
        for (cohort, year), n in class_size.items()
        if n >= 50 and class_size.get((cohort, year + 1), 0) >= 50
    ]
    recovered = 0
    for cohort, year in links:
        a = majority.get((cohort, year))
        b = majority.get((cohort, year + 1))
        if a is not None and b is not None and a.cohort and a.cohort == b.cohort:
            recovered += 1
    return recovered, len(links)
