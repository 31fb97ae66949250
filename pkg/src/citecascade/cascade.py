"""Cascading forward/backward citation expansion.

An expansion grows a seed set generation by generation. A forward step
collects, for each frontier article, the articles citing it; a backward
step collects the articles on its reference list. Each frontier article
retains at most `per_article_limit` new articles, ranked by the selection
key (ties broken by id ascending), so a forward run from one seed with
limit L is bounded by L + L^2 + ... + L^k articles after k steps.

Termination: the step budget, an empty frontier, a publication-year floor,
an h-index ceiling on the accumulated set, or a population cap (which
truncates the overflowing generation by selection rank). Articles already
collected are never re-admitted, but every traversed citation link is kept
in the edge list, including links back into earlier generations.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

from .corpus import CitationStore, Publication
from .errors import CascadeError, FetchError, NotNormalizableError, UnknownIdError
from .scoremetrics import cohort_percentile, h_index

logger = logging.getLogger(__name__)

FORWARD = "forward"
BACKWARD = "backward"

SELECTION_KEYS = ("times_cited", "altmetric", "rcr", "percentile")

STOP_REASONS = (
    "steps_exhausted",
    "empty_frontier",
    "year_floor",
    "h_index_ceiling",
    "population_cap",
)


@dataclass(frozen=True)
class ExpansionSpec:
    direction: str
    max_steps: int
    per_article_limit: int = 10
    selection_key: str = "times_cited"
    min_year: int | None = None
    h_index_ceiling: int | None = None
    max_population: int | None = None
    include_stubs: bool = True  # backward steps may admit unresolved references

    def __post_init__(self):
        if self.direction not in (FORWARD, BACKWARD):
            raise ValueError(f"direction must be '{FORWARD}' or '{BACKWARD}'")
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")
        if self.per_article_limit < 1:
            raise ValueError("per_article_limit must be >= 1")
        if self.selection_key not in SELECTION_KEYS:
            raise ValueError(f"selection_key must be one of {SELECTION_KEYS}")


@dataclass
class ExpansionTrace:
    """Generations G0..Gm (disjoint), discovery index, and traversed links.

    Edges are (citing_id, cited_id, generation) triples; generation is the
    step that traversed the link. `incomplete` marks traces cut short by a
    remote failure.
    """

    generations: list[frozenset[str]] = field(default_factory=list)
    first_seen: dict[str, int] = field(default_factory=dict)
    edges: list[tuple[str, str, int]] = field(default_factory=list)
    stop_reason: str | None = None
    incomplete: bool = False

    def members(self) -> set[str]:
        out: set[str] = set()
        for gen in self.generations:
            out |= gen
        return out


class _LocalView:
    """Store-backed lookups for the expansion loop."""

    def __init__(self, store: CitationStore, spec: ExpansionSpec):
        self.store = store
        self.spec = spec

    def check_seed(self, pub_id: str) -> None:
        if not self.store.is_known(pub_id):
            raise UnknownIdError(pub_id)

    def citers(self, pub_id: str) -> list[str]:
        return list(self.store.citing_index.get(pub_id, ()))

    def references(self, pub_id: str) -> list[str]:
        rec = self.store.records.get(pub_id)
        if rec is None:
            return []  # stubs carry no reference list
        refs = rec.reference_ids
        if not self.spec.include_stubs:
            refs = tuple(r for r in refs if r in self.store.records)
        return list(refs)

    def rank_value(self, pub_id: str) -> float:
        rec = self.store.records.get(pub_id)
        if rec is None:
            return 0.0
        key = self.spec.selection_key
        if key == "times_cited":
            return float(rec.times_cited)
        if key == "altmetric":
            return float(rec.altmetric or 0)
        if key == "rcr":
            return float(rec.rcr or 0.0)
        try:
            return cohort_percentile(self.store, pub_id).percentile
        except NotNormalizableError:
            return 0.0

    def year(self, pub_id: str) -> int | None:
        rec = self.store.records.get(pub_id)
        return rec.year if rec else None

    def times_cited(self, pub_id: str) -> int:
        rec = self.store.records.get(pub_id)
        return rec.times_cited if rec else 0


def _rank_truncate(view, candidates: list[str], limit: int | None) -> list[str]:
    ranked = sorted(set(candidates), key=lambda c: (-view.rank_value(c), c))
    return ranked if limit is None else ranked[:limit]


def _expand_article(view, article: str, seen: set[str], limit: int | None, forward: bool):
    """(selected new articles, links into already-seen articles)."""
    candidates = view.citers(article) if forward else view.references(article)
    fresh = [c for c in candidates if c not in seen]
    already = sorted(c for c in set(candidates) & seen if c != article)
    return _rank_truncate(view, fresh, limit), already


def forward_step(
    store: CitationStore,
    frontier: set[str],
    seen: set[str],
    limit: int | None = 10,
    key: str = "times_cited",
) -> set[str]:
    """One forward step: per frontier article, its top-`limit` unseen citers.

    Ranking is by the selection key descending with id tie-break; unknown
    selection values count as 0. Returns the union over the frontier.
    """
    spec = ExpansionSpec(direction=FORWARD, max_steps=1, selection_key=key)
    view = _LocalView(store, spec)
    out: set[str] = set()
    for article in sorted(frontier):
        selected, _ = _expand_article(view, article, seen, limit, forward=True)
        out.update(selected)
    return out


def backward_step(
    store: CitationStore,
    frontier: set[str],
    seen: set[str],
    limit: int | None = 10,
    key: str = "times_cited",
    include_stubs: bool = True,
) -> set[str]:
    """One backward step over reference lists; mirror of forward_step.

    Stubs rank with key value 0 and are included unless include_stubs is
    False.
    """
    spec = ExpansionSpec(
        direction=BACKWARD, max_steps=1, selection_key=key, include_stubs=include_stubs
    )
    view = _LocalView(store, spec)
    out: set[str] = set()
    for article in sorted(frontier):
        selected, _ = _expand_article(view, article, seen, limit, forward=False)
        out.update(selected)
    return out


class _Runner:
    """Generation loop shared by local and remote expansion."""

    def __init__(self, view, seeds: set[str], spec: ExpansionSpec):
        if not seeds:
            raise CascadeError("seed set is empty")
        for seed in sorted(seeds):
            view.check_seed(seed)
        self.view = view
        self.spec = spec
        self.generations: list[frozenset[str]] = [frozenset(seeds)]
        self.first_seen: dict[str, int] = {s: 0 for s in sorted(seeds)}
        self.edges: list[tuple[str, str, int]] = []
        self.seen: set[str] = set(seeds)
        self.stop_reason: str | None = None

    def trace(self) -> ExpansionTrace:
        return ExpansionTrace(
            generations=list(self.generations),
            first_seen=dict(self.first_seen),
            edges=list(self.edges),
            stop_reason=self.stop_reason,
            incomplete=self.stop_reason is None,
        )

    def _record_edges(self, per_article: dict[str, tuple[list[str], list[str]]],
                      retained: set[str], gen_index: int, forward: bool) -> None:
        for article in sorted(per_article):
            selected, already = per_article[article]
            for target in selected:
                if target not in retained:
                    continue
                link = (target, article) if forward else (article, target)
                self.edges.append((link[0], link[1], gen_index))
            for target in already:
                link = (target, article) if forward else (article, target)
                self.edges.append((link[0], link[1], gen_index))

    def run(self) -> ExpansionTrace:
        spec = self.spec
        forward = spec.direction == FORWARD
        for step in range(1, spec.max_steps + 1):
            frontier = self.generations[-1]
            per_article: dict[str, tuple[list[str], list[str]]] = {}
            fresh: set[str] = set()
            for article in sorted(frontier):
                selected, already = _expand_article(
                    self.view, article, self.seen, spec.per_article_limit, forward
                )
                per_article[article] = (selected, already)
                fresh.update(selected)

            if not fresh:
                self.stop_reason = "empty_frontier"
                break

            if spec.min_year is not None:
                kept = {
                    c for c in fresh
                    if self.view.year(c) is None or self.view.year(c) >= spec.min_year
                }
                if not kept:
                    self.stop_reason = "year_floor"
                    break
                fresh = kept

            hit_population_cap = False
            if spec.max_population is not None:
                budget = spec.max_population - len(self.seen)
                if len(fresh) >= budget:
                    hit_population_cap = True
                    if budget <= 0:
                        self.stop_reason = "population_cap"
                        break
                    if len(fresh) > budget:
                        fresh = set(_rank_truncate(self.view, sorted(fresh), budget))

            generation = frozenset(fresh)
            self.generations.append(generation)
            for member in sorted(generation):
                self.first_seen[member] = step
            self.seen |= generation
            self._record_edges(per_article, fresh, step, forward)

            if hit_population_cap:
                self.stop_reason = "population_cap"
                break
            if spec.h_index_ceiling is not None:
                accumulated_h = h_index(self.view.times_cited(x) for x in self.seen)
                if accumulated_h > spec.h_index_ceiling:
                    self.stop_reason = "h_index_ceiling"
                    break
        else:
            self.stop_reason = "steps_exhausted"
        return self.trace()


def run(store: CitationStore, seeds: set[str], spec: ExpansionSpec) -> ExpansionTrace:
    """Run a cascading expansion over the local store.

    Deterministic: identical inputs yield identical traces. Seeds must be
    known to the store (ingested records or stubs).
    """
    return _Runner(_LocalView(store, spec), set(seeds), spec).run()


# ---------------------------------------------------------------------------
# remote expansion


class RemoteExpansionError(CascadeError):
    """A remote fetch failed mid-run; carries the partial trace and records."""

    def __init__(self, message: str, trace: ExpansionTrace, records: list[Publication]):
        super().__init__(message)
        self.trace = trace
        self.records = records


class _RemoteView:
    """Fetch-backed lookups; every retrieved record is cached for ingestion."""

    def __init__(self, cfg, spec: ExpansionSpec):
        from . import fetch as fetchmod

        if spec.selection_key == "percentile":
            raise CascadeError("selection key 'percentile' needs a local store with cohorts")
        self._fetch = fetchmod
        self.cfg = cfg
        self.spec = spec
        self.cache: dict[str, Publication] = {}
        self.missing: set[str] = set()  # ids the source could not resolve

    def _lookup(self, pub_id: str) -> Publication | None:
        if pub_id in self.cache:
            return self.cache[pub_id]
        if pub_id in self.missing:
            return None
        found = self._fetch.fetch_all(self.cfg, self._fetch.id_query_for(pub_id))
        if not found:
            self.missing.add(pub_id)
            return None
        self.cache[pub_id] = found[0]
        return found[0]

    def check_seed(self, pub_id: str) -> None:
        if self._lookup(pub_id) is None:
            raise UnknownIdError(pub_id)

    def citers(self, pub_id: str) -> list[str]:
        pubs = self._fetch.fetch_all(self.cfg, self._fetch.citing_query_for(pub_id))
        out = []
        for pub in pubs:
            self.cache.setdefault(pub.id, pub)
            out.append(pub.id)
        return out

    def references(self, pub_id: str) -> list[str]:
        rec = self._lookup(pub_id)
        if rec is None:
            return []
        refs = list(rec.reference_ids)
        resolved = [rid for rid in refs if self._lookup(rid) is not None]
        return refs if self.spec.include_stubs else resolved

    def rank_value(self, pub_id: str) -> float:
        rec = self.cache.get(pub_id)
        if rec is None:
            return 0.0
        key = self.spec.selection_key
        if key == "times_cited":
            return float(rec.times_cited)
        if key == "altmetric":
            return float(rec.altmetric or 0)
        return float(rec.rcr or 0.0)

    def year(self, pub_id: str) -> int | None:
        rec = self.cache.get(pub_id)
        return rec.year if rec else None

    def times_cited(self, pub_id: str) -> int:
        rec = self.cache.get(pub_id)
        return rec.times_cited if rec else 0


def run_remote(cfg, seeds: set[str], spec: ExpansionSpec) -> tuple[ExpansionTrace, list[Publication]]:
    """Run an expansion against a remote source (or its recorded fixture).

    Semantics match `run` over a store holding the same records. Returns
    the trace plus every fetched publication, ready for ingestion. A fetch
    failure raises RemoteExpansionError carrying the partial trace (marked
    incomplete) and the records fetched so far.
    """
    view = _RemoteView(cfg, spec)
    runner = _Runner(view, set(seeds), spec)
    try:
        trace = runner.run()
    except FetchError as exc:
        partial = runner.trace()
        fetched = [view.cache[k] for k in sorted(view.cache)]
        raise RemoteExpansionError(
            f"remote expansion aborted after {len(partial.generations) - 1} step(s): {exc}",
            partial,
            fetched,
        ) from exc
    return trace, [view.cache[k] for k in sorted(view.cache)]


def trace_to_jsonable(trace: ExpansionTrace) -> dict:
    return {
        "schema": "trace@1",
        "generations": [sorted(gen) for gen in trace.generations],
        "first_seen": dict(sorted(trace.first_seen.items())),
        "edges": [[a, b, g] for a, b, g in trace.edges],
        "stop_reason": trace.stop_reason,
        "incomplete": trace.incomplete,
    }


def trace_from_jsonable(doc: dict) -> ExpansionTrace:
    return ExpansionTrace(
        generations=[frozenset(gen) for gen in doc["generations"]],
        first_seen={k: int(v) for k, v in doc["first_seen"].items()},
        edges=[(a, b, int(g)) for a, b, g in doc["edges"]],
        stop_reason=doc.get("stop_reason"),
        incomplete=bool(doc.get("incomplete", False)),
    )
