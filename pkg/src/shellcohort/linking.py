"""Cohort linking across survey years.

Every aged component starts under a provisional label
``<stratum>.<reef>.<year>.<age>``.  Scanning each reef's years in ascending
order, a component aged a in year t adopts the component aged a + 1 in year
t + 1 as its continuation -- provided that successor exists and its mean
length strictly exceeds the source's (shells only grow).  Overwriting the
successor's label propagates the chain's founding label forward, so a chain
ends up sharing the label of its first appearance.  Unaged components are
excluded from linking and instead get per-sample ``...NA.i`` labels.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, NamedTuple

from .aging import AgedComponent


class ChainMember(NamedTuple):
    """One year's appearance of a cohort."""

    year: int
    age: int
    mean_mm: float
    sd_mm: float
    weight: float


@dataclass(frozen=True)
class CohortChain:
    """A linked run of components tracking one birth-year class on one reef."""

    cohort: str
    stratum_id: str
    reef_id: str
    members: tuple[ChainMember, ...]

    @property
    def first_year(self) -> int:
        return self.members[0].year

    @property
    def last_year(self) -> int:
        return self.members[-1].year

    @property
    def terminal_age(self) -> int:
        return self.members[-1].age

    @property
    def chain_length(self) -> int:
        return len(self.members)

    @property
    def birth_year(self) -> int:
        """Calendar year the class was age 1 (spawned the season before age 1 sampling)."""
        return self.members[0].year - self.members[0].age + 1


class ComponentTable:
    """Indexed view over component rows for label assignment and linking.

    Aged rows must be unique per (stratum, reef, year, age); that uniqueness
    is what guarantees every component can be linked to by at most one
    predecessor.
    """

    def __init__(self, rows: Iterable[AgedComponent]):
        self.rows: list[AgedComponent] = list(rows)
        self._aged: dict[tuple[str, str, int, int], AgedComponent] = {}
        self._by_sample: dict[tuple[str, str, int], list[AgedComponent]] = {}
        for row in self.rows:
            self._by_sample.setdefault(row.key, []).append(row)
            if row.age is None:
                continue
            slot = (row.stratum_id, row.reef_id, row.year, row.age)
            if slot in self._aged:
                raise ValueError(
                    f"duplicate component for stratum={row.stratum_id!r} "
                    f"reef={row.reef_id!r} year={row.year} age={row.age}"
                )
            self._aged[slot] = row

    def reefs(self) -> list[tuple[str, str]]:
        return sorted({(r.stratum_id, r.reef_id) for r in self.rows})

    def reef_years(self, stratum_id: str, reef_id: str) -> list[int]:
        return sorted(
            {r.year for r in self.rows if (r.stratum_id, r.reef_id) == (stratum_id, reef_id)}
        )

    def sample_rows(self, key: tuple[str, str, int]) -> list[AgedComponent]:
        return list(self._by_sample.get(key, ()))

    def get_aged(self, stratum_id: str, reef_id: str, year: int, age: int):
        return self._aged.get((stratum_id, reef_id, year, age))


def initial_labels(table: ComponentTable) -> ComponentTable:
    """Stamp every aged row with its provisional stratum.reef.year.age label."""
    for row in table.rows:
        if row.age is not None:
            row.cohort = f"{row.stratum_id}.{row.reef_id}.{row.year}.{row.age}"
        else:
            row.cohort = None
    return table


def link_cohorts(table: ComponentTable) -> ComponentTable:
    """Propagate cohort labels forward through (year+1, age+1) successors.

    A link forms only when the successor's mean strictly exceeds the
    source's.  Years are scanned in ascending order so labels adopted in one
    step carry into the next.
    """
    for stratum_id, reef_id in table.reefs():
        for year in table.reef_years(stratum_id, reef_id):
            for row in sorted(
                table.sample_rows((stratum_id, reef_id, year)),
                key=lambda r: (r.age is None, r.age if r.age is not None else 0),
            ):
                if row.age is None:
                    continue
                successor = table.get_aged(stratum_id, reef_id, year + 1, row.age + 1)
                if successor is not None and successor.mean_mm > row.mean_mm:
                    successor.cohort = row.cohort
    return table


def relabel_unassigned(table: ComponentTable) -> ComponentTable:
    """Give unaged rows per-sample ``<stratum>.<reef>.<year>.NA.<i>`` labels.

    Within a sample, the index i counts unaged rows in ascending mean order,
    starting at 1.
    """
    by_sample: dict[tuple[str, str, int], list[AgedComponent]] = {}
    for row in table.rows:
        if row.age is None:
            by_sample.setdefault(row.key, []).append(row)
    for key in sorted(by_sample):
        rows = sorted(by_sample[key], key=lambda r: r.mean_mm)
        for i, row in enumerate(rows, start=1):
            row.cohort = f"{row.stratum_id}.{row.reef_id}.{row.year}.NA.{i}"
    return table


def cohort_summary(table: ComponentTable) -> list[CohortChain]:
    """Collect aged rows into chains, validating the growth invariants.

    Each chain must span consecutive years with ages incrementing by one and
    mean lengths strictly increasing; violations indicate a linking bug and
    raise RuntimeError.  Unaged (NA-labelled) rows are not chains and are
    omitted.  Chains are sorted by (stratum, reef, birth year, label).
    """
    groups: dict[tuple[str, str, str], list[AgedComponent]] = {}
    for row in table.rows:
        if row.age is None:
            continue
        if row.cohort is None:
            raise RuntimeError(f"aged component missing a cohort label: {row!r}")
        groups.setdefault((row.stratum_id, row.reef_id, row.cohort), []).append(row)

    chains = []
    for (stratum_id, reef_id, cohort), rows in groups.items():
        rows.sort(key=lambda r: r.year)
        members = tuple(
            ChainMember(r.year, r.age, r.mean_mm, r.sd_mm, r.weight) for r in rows
        )
        for a, b in zip(members, members[1:]):
            if b.year != a.year + 1:
                raise RuntimeError(
                    f"cohort {cohort!r}: gap or duplicate between years {a.year} and {b.year}"
                )
            if b.age != a.age + 1:
                raise RuntimeError(
                    f"cohort {cohort!r}: age jumps from {a.age} to {b.age} at year {b.year}"
                )
            if not b.mean_mm > a.mean_mm:
                raise RuntimeError(
                    f"cohort {cohort!r}: mean does not grow from {a.year} to {b.year}"
                )
        chains.append(CohortChain(cohort, stratum_id, reef_id, members))
    chains.sort(key=lambda c: (c.stratum_id, c.reef_id, c.birth_year, c.cohort))
    return chains
