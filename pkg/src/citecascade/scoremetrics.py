"""Bibliometric measures: h-index, citation-threshold profiles, field/year
percentile normalization, and citation burst detection.

Burst detection uses a two-state rate automaton over a yearly count series:
a base state emitting at the series mean and a burst state emitting at
`ratio` times the mean. Emission cost is the Poisson negative log
likelihood; switching base->burst costs gamma * ln(series length), switching
back is free, and the automaton starts in the base state. The minimum-cost
state sequence is found by dynamic programming; maximal burst-state runs
become intervals whose strength is the emission cost saved versus staying
in the base state.
"""

from __future__ import annotations

import logging
import math
from bisect import bisect_left, bisect_right
from dataclasses import dataclass
from typing import Iterable, Mapping

from .corpus import CitationStore
from .errors import NotNormalizableError

logger = logging.getLogger(__name__)

THRESHOLDS = (1, 10, 100, 1_000, 10_000, 100_000)


@dataclass(frozen=True)
class ThresholdProfile:
    set_size: int
    counts_at: dict[int, int]
    h_index: int


@dataclass(frozen=True)
class CohortPercentile:
    pub_id: str
    cohort: tuple[str, int]
    percentile: float


@dataclass(frozen=True)
class BurstInterval:
    start_year: int
    end_year: int
    strength: float


def h_index(citations: Iterable[int]) -> int:
    """Largest h such that at least h values are >= h."""
    counts = sorted(citations, reverse=True)
    h = 0
    for i, c in enumerate(counts, 1):
        if c >= i:
            h = i
        else:
            break
    return h


def threshold_profile(store: CitationStore, ids: Iterable[str]) -> ThresholdProfile:
    """Counts of set members at each citation threshold, plus the set h-index."""
    cites = [store.require(pub_id).times_cited for pub_id in sorted(set(ids))]
    counts_at = {t: sum(1 for c in cites if c >= t) for t in THRESHOLDS}
    return ThresholdProfile(set_size=len(cites), counts_at=counts_at, h_index=h_index(cites))


def cohort_percentile(store: CitationStore, pub_id: str) -> CohortPercentile:
    """Citation percentile of a record within its (primary FOR, year) cohort.

    Percentile is 100 * mean_rank / cohort_size with ascending ranks and the
    mean-rank convention for ties. Records without a field of research (or,
    for quarantined data, a year) are not normalizable.
    """
    pub = store.require(pub_id)
    primary = pub.primary_for()
    if primary is None or pub.year is None:
        raise NotNormalizableError(f"{pub_id}: no field of research or year; cannot cohort")
    key = (primary.code, pub.year)
    cohort = store.cohorts.get(key, ())
    if not cohort:
        raise NotNormalizableError(f"{pub_id}: cohort {key} is empty")
    lo = bisect_left(cohort, pub.times_cited)
    hi = bisect_right(cohort, pub.times_cited)
    mean_rank = (lo + 1 + hi) / 2.0
    return CohortPercentile(pub_id=pub_id, cohort=key, percentile=100.0 * mean_rank / len(cohort))


def normalize_filter(store: CitationStore, ids: Iterable[str], cutoff: float = 50.0) -> set[str]:
    """Keep ids whose cohort percentile is >= cutoff (ties at cutoff kept).

    Non-normalizable records are kept; their count is logged as a warning.
    """
    kept: set[str] = set()
    not_normalizable = 0
    for pub_id in sorted(set(ids)):
        try:
            if cohort_percentile(store, pub_id).percentile >= cutoff:
                kept.add(pub_id)
        except NotNormalizableError:
            not_normalizable += 1
            kept.add(pub_id)
    if not_normalizable:
        logger.warning("normalize_filter kept %d non-normalizable record(s)", not_normalizable)
    return kept


# ---------------------------------------------------------------------------
# burst detection

_BASE, _BURST = 0, 1


def _emission_cost(rate: float, count: int) -> float:
    """Poisson negative log likelihood of `count` at `rate`."""
    return rate - count * math.log(rate) + math.lgamma(count + 1)


def burst_costs(
    counts: list[int], gamma: float, ratio: float
) -> tuple[list[tuple[float, float]], float]:
    """Per-year (base, burst) emission costs and the base->burst switch cost.

    Exposed so an exhaustive checker can score state sequences with exactly
    the same arithmetic the detector uses.
    """
    n = len(counts)
    mean = sum(counts) / n
    base_rate = mean
    burst_rate = ratio * mean
    emissions = [(_emission_cost(base_rate, c), _emission_cost(burst_rate, c)) for c in counts]
    return emissions, gamma * math.log(n)


def burst_detect(
    yearly_counts: Mapping[int, int], gamma: float = 1.0, ratio: float = 2.0
) -> list[BurstInterval]:
    """Burst intervals of a yearly count series.

    Years between the first and last key are filled with zero counts. An
    all-zero (or empty) series yields no bursts. Strength of an interval is
    the summed emission-cost difference base minus burst over its years.
    """
    if ratio <= 1.0:
        raise ValueError("ratio must be > 1")
    if not yearly_counts:
        return []
    for year, count in yearly_counts.items():
        if count < 0:
            raise ValueError(f"negative count for year {year}")
    y0, y1 = min(yearly_counts), max(yearly_counts)
    years = list(range(y0, y1 + 1))
    counts = [yearly_counts.get(y, 0) for y in years]
    if sum(counts) == 0:
        return []

    emissions, switch_cost = burst_costs(counts, gamma, ratio)
    n = len(counts)

    # Viterbi over the two states; the automaton starts in the base state.
    cost = [emissions[0][_BASE], switch_cost + emissions[0][_BURST]]
    back: list[tuple[int, int]] = []
    for t in range(1, n):
        # into base: leaving burst is free; ties prefer base
        prev_base = cost[_BASE] if cost[_BASE] <= cost[_BURST] else cost[_BURST]
        from_base = _BASE if cost[_BASE] <= cost[_BURST] else _BURST
        # into burst: entering from base pays the switch cost
        enter = cost[_BASE] + switch_cost
        stay = cost[_BURST]
        prev_burst = enter if enter <= stay else stay
        from_burst = _BASE if enter <= stay else _BURST
        back.append((from_base, from_burst))
        cost = [prev_base + emissions[t][_BASE], prev_burst + emissions[t][_BURST]]

    state = _BASE if cost[_BASE] <= cost[_BURST] else _BURST
    states = [state]
    for t in range(n - 2, -1, -1):
        state = back[t][state]
        states.append(state)
    states.reverse()

    intervals: list[BurstInterval] = []
    t = 0
    while t < n:
        if states[t] == _BURST:
            start = t
            while t < n and states[t] == _BURST:
                t += 1
            strength = sum(emissions[i][_BASE] - emissions[i][_BURST] for i in range(start, t))
            intervals.append(
                BurstInterval(start_year=years[start], end_year=years[t - 1], strength=strength)
            )
        else:
            t += 1
    return intervals
