"""Publication data model, JSONL ingestion, and bidirectional citation indexes.

The corpus file format is JSON Lines, one record object per line, with the
field names: id, doi, title, year, journal:{title, issn:[...]},
FOR:[{code,name}], times_cited, altmetric, relative_citation_ratio,
reference_ids:[...], authors:[...]. Unknown fields are ignored.

Records without a usable publication year are quarantined (kept for
reporting, never indexed). Self-references and duplicated reference entries
are dropped at ingest and surface as validation issues.
"""

from __future__ import annotations

import json
import logging
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from .errors import IngestError, UnknownIdError

logger = logging.getLogger(__name__)

YEAR_MIN = 1800
YEAR_MAX = 2100

ISSUE_KINDS = (
    "missing_year",
    "missing_title",
    "dangling_reference",
    "duplicate_id",
    "self_reference",
)


@dataclass(frozen=True)
class Venue:
    journal_title: str = ""
    issn: tuple[str, ...] = ()


@dataclass(frozen=True)
class ForField:
    code: str
    name: str


@dataclass(frozen=True)
class Publication:
    """One scholarly record as carried by the corpus."""

    id: str
    title: str = ""
    doi: str | None = None
    year: int | None = None
    venue: Venue = field(default_factory=Venue)
    for_fields: tuple[ForField, ...] = ()
    times_cited: int = 0
    altmetric: int | None = None
    rcr: float | None = None
    reference_ids: tuple[str, ...] = ()
    authors: tuple[str, ...] = ()

    def primary_for(self) -> ForField | None:
        """First field-of-research entry; used as the cohorting field."""
        return self.for_fields[0] if self.for_fields else None

    def to_dict(self) -> dict:
        """Serialize back to the corpus JSONL shape."""
        return {
            "id": self.id,
            "doi": self.doi,
            "title": self.title,
            "year": self.year,
            "journal": {"title": self.venue.journal_title, "issn": list(self.venue.issn)},
            "FOR": [{"code": f.code, "name": f.name} for f in self.for_fields],
            "times_cited": self.times_cited,
            "altmetric": self.altmetric,
            "relative_citation_ratio": self.rcr,
            "reference_ids": list(self.reference_ids),
            "authors": list(self.authors),
        }


@dataclass(frozen=True)
class ValidationIssue:
    record_id: str
    kind: str
    detail: str


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise ValueError(msg)


def publication_from_dict(obj: dict) -> Publication:
    """Build a Publication from a corpus/wire record dict.

    Raises ValueError naming the offending field on schema violations.
    Missing optional fields default; a missing or null year stays None
    (quarantine happens at store construction, not here).
    """
    _require(isinstance(obj, dict), "record is not an object")
    pid = obj.get("id")
    _require(isinstance(pid, str) and pid != "", "id: missing or empty")

    doi = obj.get("doi")
    _require(doi is None or isinstance(doi, str), "doi: not a string")

    title = obj.get("title", "")
    _require(isinstance(title, str), "title: not a string")

    year = obj.get("year")
    if year is not None:
        _require(isinstance(year, int) and not isinstance(year, bool), "year: not an integer")

    journal = obj.get("journal") or {}
    _require(isinstance(journal, dict), "journal: not an object")
    jtitle = journal.get("title", "")
    _require(isinstance(jtitle, str), "journal.title: not a string")
    issn = journal.get("issn", [])
    _require(
        isinstance(issn, list) and all(isinstance(x, str) for x in issn),
        "journal.issn: not a list of strings",
    )

    fors = obj.get("FOR", [])
    _require(isinstance(fors, list), "FOR: not a list")
    for_fields = []
    for entry in fors:
        _require(
            isinstance(entry, dict)
            and isinstance(entry.get("code"), str)
            and isinstance(entry.get("name"), str),
            "FOR: entries need string code and name",
        )
        for_fields.append(ForField(code=entry["code"], name=entry["name"]))

    times_cited = obj.get("times_cited", 0)
    _require(
        isinstance(times_cited, int) and not isinstance(times_cited, bool) and times_cited >= 0,
        "times_cited: not a nonnegative integer",
    )

    altmetric = obj.get("altmetric")
    if altmetric is not None:
        _require(
            isinstance(altmetric, int) and not isinstance(altmetric, bool) and altmetric >= 0,
            "altmetric: not a nonnegative integer",
        )

    rcr = obj.get("relative_citation_ratio")
    if rcr is not None:
        _require(
            isinstance(rcr, (int, float)) and not isinstance(rcr, bool) and rcr >= 0,
            "relative_citation_ratio: not a nonnegative number",
        )
        rcr = float(rcr)

    refs = obj.get("reference_ids", [])
    _require(
        isinstance(refs, list) and all(isinstance(x, str) and x for x in refs),
        "reference_ids: not a list of nonempty strings",
    )

    authors = obj.get("authors", [])
    _require(
        isinstance(authors, list) and all(isinstance(x, str) for x in authors),
        "authors: not a list of strings",
    )

    return Publication(
        id=pid,
        doi=doi,
        title=title,
        year=year,
        venue=Venue(journal_title=jtitle, issn=tuple(issn)),
        for_fields=tuple(for_fields),
        times_cited=times_cited,
        altmetric=altmetric,
        rcr=rcr,
        reference_ids=tuple(refs),
        authors=tuple(authors),
    )


@dataclass
class CitationStore:
    """Indexed corpus. Immutable after construction; safe for concurrent reads.

    citing_index is the exact transpose of the reference relation over
    ingested records: B in citing_index[A] iff A in records[B].reference_ids.
    Index keys include stubs (ids referenced but absent from records).
    """

    records: dict[str, Publication] = field(default_factory=dict)
    citing_index: dict[str, tuple[str, ...]] = field(default_factory=dict)
    stubs: frozenset[str] = frozenset()
    cohorts: dict[tuple[str, int], tuple[int, ...]] = field(default_factory=dict)
    quarantined: dict[str, Publication] = field(default_factory=dict)
    ingest_issues: tuple[ValidationIssue, ...] = ()
    malformed: tuple[tuple[int, str], ...] = ()

    def __len__(self) -> int:
        return len(self.records)

    def require(self, pub_id: str) -> Publication:
        rec = self.records.get(pub_id)
        if rec is None:
            raise UnknownIdError(pub_id)
        return rec

    def is_known(self, pub_id: str) -> bool:
        """True for ingested records and for stubs seen in reference lists."""
        return pub_id in self.records or pub_id in self.stubs


def build_store(
    publications: Iterable[Publication],
    malformed: Iterable[tuple[int, str]] = (),
    extra_issues: Iterable[ValidationIssue] = (),
) -> CitationStore:
    """Construct the indexed store from parsed publications.

    Applies the ingest cleaning rules: duplicate record ids keep the first
    occurrence, reference lists are deduplicated keeping first occurrence,
    self-references are dropped, and records without an in-range year are
    quarantined. Every dropped element leaves a ValidationIssue.
    """
    records: dict[str, Publication] = {}
    quarantined: dict[str, Publication] = {}
    issues: list[ValidationIssue] = list(extra_issues)

    for pub in publications:
        if pub.id in records or pub.id in quarantined:
            issues.append(
                ValidationIssue(pub.id, "duplicate_id", "record id already ingested; duplicate dropped")
            )
            continue

        refs: list[str] = []
        seen_refs: set[str] = set()
        for rid in pub.reference_ids:
            if rid == pub.id:
                issues.append(
                    ValidationIssue(pub.id, "self_reference", "reference to own id dropped")
                )
                continue
            if rid in seen_refs:
                issues.append(
                    ValidationIssue(pub.id, "duplicate_id", f"reference {rid} listed more than once")
                )
                continue
            seen_refs.add(rid)
            refs.append(rid)
        if len(refs) != len(pub.reference_ids):
            pub = Publication(
                id=pub.id,
                title=pub.title,
                doi=pub.doi,
                year=pub.year,
                venue=pub.venue,
                for_fields=pub.for_fields,
                times_cited=pub.times_cited,
                altmetric=pub.altmetric,
                rcr=pub.rcr,
                reference_ids=tuple(refs),
                authors=pub.authors,
            )

        if pub.year is None or not (YEAR_MIN <= pub.year <= YEAR_MAX):
            detail = "no publication year" if pub.year is None else f"year {pub.year} out of range"
            issues.append(ValidationIssue(pub.id, "missing_year", detail))
            quarantined[pub.id] = pub
            continue

        if not pub.title.strip():
            issues.append(ValidationIssue(pub.id, "missing_title", "empty title"))

        records[pub.id] = pub

    citing: defaultdict[str, list[str]] = defaultdict(list)
    for pub in records.values():
        for rid in pub.reference_ids:
            citing[rid].append(pub.id)
    citing_index = {rid: tuple(sorted(citers)) for rid, citers in citing.items()}

    stubs = frozenset(rid for rid in citing_index if rid not in records)

    cohort_acc: defaultdict[tuple[str, int], list[int]] = defaultdict(list)
    for pub in records.values():
        primary = pub.primary_for()
        if primary is not None and pub.year is not None:
            cohort_acc[(primary.code, pub.year)].append(pub.times_cited)
    cohorts = {key: tuple(sorted(vals)) for key, vals in cohort_acc.items()}

    return CitationStore(
        records=records,
        citing_index=citing_index,
        stubs=stubs,
        cohorts=cohorts,
        quarantined=quarantined,
        ingest_issues=tuple(issues),
        malformed=tuple(malformed),
    )


def ingest_jsonl(path: str | Path, max_malformed_fraction: float = 0.10) -> CitationStore:
    """Ingest a JSONL corpus file into an indexed store.

    Malformed lines (bad JSON, non-object, missing id, schema violations)
    are reported with their line number; the run aborts when their fraction
    exceeds max_malformed_fraction. Blank lines are ignored.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise IngestError(f"cannot read corpus file {path}: {exc}") from exc

    publications: list[Publication] = []
    malformed: list[tuple[int, str]] = []
    total = 0
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        total += 1
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            malformed.append((lineno, f"invalid JSON: {exc.msg}"))
            continue
        try:
            publications.append(publication_from_dict(obj))
        except ValueError as exc:
            malformed.append((lineno, str(exc)))

    if malformed:
        for lineno, reason in malformed:
            logger.warning("%s:%d: malformed record skipped: %s", path, lineno, reason)
        if total and len(malformed) / total > max_malformed_fraction:
            preview = "; ".join(f"line {ln}: {msg}" for ln, msg in malformed[:5])
            raise IngestError(
                f"{len(malformed)}/{total} lines malformed "
                f"(> {max_malformed_fraction:.0%} threshold): {preview}"
            )

    store = build_store(publications, malformed=malformed)
    if store.quarantined:
        logger.warning(
            "%d record(s) quarantined for missing/out-of-range year", len(store.quarantined)
        )
    return store


def citing_of(store: CitationStore, pub_id: str) -> set[str]:
    """Ids of ingested records whose reference list contains pub_id.

    Unknown ids yield the empty set; the result never contains pub_id.
    """
    return set(store.citing_index.get(pub_id, ()))


def references_of(store: CitationStore, pub_id: str) -> list[str]:
    """Reference ids of an ingested record, in stored order, stubs included."""
    return list(store.require(pub_id).reference_ids)


def validate(store: CitationStore) -> list[ValidationIssue]:
    """All validation issues for the store, deterministically ordered.

    Combines ingest-time issues with dangling-reference issues derived from
    the stub set (one per (record, target) pair). Ordered by record_id,
    then kind, then detail.
    """
    issues = list(store.ingest_issues)
    for pub in store.records.values():
        for rid in pub.reference_ids:
            if rid in store.stubs:
                issues.append(
                    ValidationIssue(pub.id, "dangling_reference", f"reference {rid} not found in corpus")
                )
    issues.sort(key=lambda i: (i.record_id, i.kind, i.detail))
    return issues


def store_to_jsonable(store: CitationStore) -> dict:
    """Serializable form of the store; indexes are rebuilt on load."""
    return {
        "schema": "store@1",
        "records": [store.records[k].to_dict() for k in sorted(store.records)],
        "quarantined": [store.quarantined[k].to_dict() for k in sorted(store.quarantined)],
        "issues": [
            {"record_id": i.record_id, "kind": i.kind, "detail": i.detail}
            for i in store.ingest_issues
        ],
        "malformed": [[ln, msg] for ln, msg in store.malformed],
    }


def store_from_jsonable(doc: dict) -> CitationStore:
    """Rebuild a store from its serialized form.

    Records are re-indexed from scratch; the recorded ingest issues replace
    the (empty) issue list the rebuild would produce, so validate() output
    round-trips.
    """
    records = [publication_from_dict(obj) for obj in doc.get("records", [])]
    quarantined = [publication_from_dict(obj) for obj in doc.get("quarantined", [])]
    issues = tuple(
        ValidationIssue(e["record_id"], e["kind"], e["detail"]) for e in doc.get("issues", [])
    )
    malformed = tuple((int(ln), str(msg)) for ln, msg in doc.get("malformed", []))
    store = build_store(records + quarantined)
    return CitationStore(
        records=store.records,
        citing_index=store.citing_index,
        stubs=store.stubs,
        cohorts=store.cohorts,
        quarantined=store.quarantined,
        ingest_issues=issues,
        malformed=malformed,
    )
