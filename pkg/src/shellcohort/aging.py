"""Age assignment via river-level length cutoffs.

Reef-level mixture components carry no ages by themselves.  Ages come from a
*river model*: one Gaussian mixture fitted to every length measured anywhere
in the stratum in that year (both stages, eligible reefs or not).  Each river
component m contributes an upper cutoff at its q-th quantile
(mean + z_q * sd, q = 0.8 by default), with zero closing the scale from
below.  A reef component whose mean lands in the half-open interval
(cutoff[m-1], cutoff[m]] is called age m + 1; spat are age 1 by definition.
"""

from __future__ import annotations

from dataclasses import dataclass
from statistics import NormalDist

from .mixtures import FitConfig, MixtureFit, candidate_fits, select_model

RIVER_MIN_N = 50


def quantile_z(quantile: float) -> float:
    """Standard-normal z for an upper quantile in (0, 1)."""
    if not 0.0 < quantile < 1.0:
        raise ValueError(f"quantile must lie strictly inside (0, 1), got {quantile!r}")
    return NormalDist().inv_cdf(quantile)


@dataclass(frozen=True)
class RiverModel:
    """Stratum-year mixture plus the derived age cutoffs.

    ``cutoffs`` has length g + 1: a leading zero, then one upper cutoff per
    component in ascending-mean order.  Overlapping river components can make
    the sequence non-monotone; ``monotone`` flags that for diagnostics (ages
    are still assigned by first matching interval).
    """

    stratum_id: str
    year: int
    fit: MixtureFit
    cutoffs: tuple[float, ...]

    @property
    def g(self) -> int:
        return self.fit.g

    @property
    def monotone(self) -> bool:
        return all(a < b for a, b in zip(self.cutoffs, self.cutoffs[1:]))


def age_cutoffs(fit: MixtureFit, quantile: float = 0.8) -> tuple[float, ...]:
    """Cutoff sequence (0, q_1, ..., q_g) from a fitted mixture."""
    z = quantile_z(quantile)
    return (0.0,) + tuple(m + z * s for m, s in zip(fit.means, fit.sds))


def fit_river_model(
    stratum_id: str,
    year: int,
    lengths,
    config: FitConfig,
    quantile: float = 0.8,
    min_n: int = RIVER_MIN_N,
) -> RiverModel | None:
    """Fit the stratum-year model, or return None when data are too thin.

    Candidate fitting and selection follow the same rules as reef-level
    mixtures (both variance families, g up to ``config.g_max``, BIC with the
    parsimony tie-break at ``config.delta_bic``).
    """
    if len(lengths) < min_n:
        return None
    fit = select_model(candidate_fits(lengths, config), config.delta_bic)
    return RiverModel(stratum_id, year, fit, age_cutoffs(fit, quantile))


@dataclass
class AgedComponent:
    """One reef-level component row as it flows through ageing and linking.

    ``weight`` is the stage-adjusted share of the whole sample; spat rows
    have no raw mixture weight.  ``age`` is None for unaged live components
    (no river model, or a single-component one); ``cohort`` is filled by the
    linking stage.  Mutable on purpose: ageing and linking annotate in place.
    """

    stratum_id: str
    reef_id: str
    year: int
    kind: str  # "spat" or "live"
    mean_mm: float
    sd_mm: float
    weight: float
    raw_weight: float | None
    age: int | None = None
    cohort: str | None = None
    pooled_from: int = 1

    @property
    def key(self) -> tuple[str, str, int]:
        return (self.stratum_id, self.reef_id, self.year)


def assign_ages(components: list[AgedComponent], model: RiverModel | None) -> None:
    """Assign ages in place to one sample's components.

    Spat components get age 1.  Live components are aged by the first cutoff
    interval containing their mean; a mean beyond the last cutoff falls in
    the virtual interval past the model, age g + 2.  With no model, or a
    single-component one, live ages stay None.
    """
    for comp in components:
        if comp.kind == "spat":
            comp.age = 1
            continue
        if model is None or model.g < 2:
            comp.age = None
            continue
        q = model.cutoffs
        age = model.g + 2  # beyond every cutoff
        for m in range(1, len(q)):
            if q[m - 1] < comp.mean_mm <= q[m]:
                age = m + 1
                break
        comp.age = age


def pool_duplicates(
    components: list[AgedComponent], renormalize: bool = True
) -> list[AgedComponent]:
    """Merge live components of one sample that share an assigned age.

    The merged mean and variance are the moments of the weight-mixture of the
    duplicates: with weights w summing to 1, mean = sum(w * mu) and
    var = sum(w * (sd^2 + mu^2)) - mean^2.  By default the duplicates' raw
    mixture weights are renormalised to sum to 1 within the merged group;
    ``renormalize=False`` instead plugs the raw weights straight into those
    formulas (weights there sum to < 1, shrinking the pooled moments --
    retained as a switch for comparison against the renormalised default).

    Returns a new list sorted by ascending mean; unaged and spat rows pass
    through untouched.
    """
    groups: dict[int, list[AgedComponent]] = {}
    passthrough: list[AgedComponent] = []
    for comp in components:
        if comp.kind == "live" and comp.age is not None:
            groups.setdefault(comp.age, []).append(comp)
        else:
            passthrough.append(comp)

    merged: list[AgedComponent] = []
    for age in sorted(groups):
        members = groups[age]
        if len(members) == 1:
            merged.append(members[0])
            continue
        raws = [c.raw_weight for c in members]
        if any(r is None for r in raws):
            raise ValueError("live components must carry raw weights to pool")
        total_raw = sum(raws)
        if total_raw <= 0:
            raise ValueError(f"cannot pool age-{age} components with zero total weight")
        shares = [r / total_raw for r in raws] if renormalize else list(raws)
        mean = sum(s * c.mean_mm for s, c in zip(shares, members))
        second = sum(s * (c.sd_mm**2 + c.mean_mm**2) for s, c in zip(shares, members))
        var = max(second - mean * mean, 0.0)
        first = members[0]
        merged.append(
            AgedComponent(
                stratum_id=first.stratum_id,
                reef_id=first.reef_id,
                year=first.year,
                kind="live",
                mean_mm=mean,
                sd_mm=var**0.5,
                weight=sum(c.weight for c in members),
                raw_weight=total_raw,
                age=age,
                cohort=None,
                pooled_from=len(members),
            )
        )

    out = passthrough + merged
    out.sort(key=_pool_sort_key)
    return out


def _pool_sort_key(comp: AgedComponent):
    # Spat first, then live by mean; unaged live rows keep mean order too.
    return (comp.kind != "spat", comp.mean_mm, comp.age if comp.age is not None else -1)
