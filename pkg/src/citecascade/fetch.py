"""Remote retrieval of publication pages with pagination, retry, and replay.

The wire protocol is a POST whose body is the canonical query text with
`limit <page_limit>` and `skip <offset>` appended; the response is JSON of
the shape {"items": {"publications": [...]}, "_stats": {"total_count": N}}.

Three modes: `live` talks to the endpoint, `record` talks to it and appends
each (query, skip) -> (status, body) entry to a fixture archive, `replay`
answers purely from the archive and treats a missing key as an error, never
as a reason to go to the network. Archives are JSONL files of
{"query", "skip", "status", "body"} rows, making offline tests exact.
"""

from __future__ import annotations

import json
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path

import requests

from .corpus import Publication, publication_from_dict
from .dslq import DslQuery, Predicate, ResultPage, format as format_query, strip_paging
from .errors import FetchError, PaginationError, ReplayMissError

logger = logging.getLogger(__name__)

MODES = ("live", "replay", "record")


@dataclass(frozen=True)
class RetryPolicy:
    max_attempts: int = 3
    backoff_ms: int = 100

    def __post_init__(self):
        if self.max_attempts < 1:
            raise ValueError("max_attempts must be >= 1")
        if self.backoff_ms < 0:
            raise ValueError("backoff_ms must be >= 0")


@dataclass(frozen=True)
class SourceConfig:
    endpoint_url: str = ""
    auth_token: str | None = None
    page_limit: int = 1000
    max_records: int | None = None
    retry: RetryPolicy = field(default_factory=RetryPolicy)
    mode: str = "live"
    archive_path: Path | None = None

    def __post_init__(self):
        if not 1 <= self.page_limit <= 1000:
            raise ValueError("page_limit must be in [1, 1000]")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.mode in ("replay", "record") and self.archive_path is None:
            raise ValueError(f"mode {self.mode!r} needs archive_path")


class FixtureArchive:
    """Recorded (query, skip) -> (status, body) responses, stored as JSONL."""

    def __init__(self):
        self.entries: dict[tuple[str, int], tuple[int, str]] = {}

    def add(self, query: str, skip: int, status: int, body: str) -> None:
        self.entries[(query, skip)] = (status, body)

    def get(self, query: str, skip: int) -> tuple[int, str]:
        try:
            return self.entries[(query, skip)]
        except KeyError:
            raise ReplayMissError(
                f"no recorded response for skip={skip} query={query!r}"
            ) from None

    @classmethod
    def load(cls, path: str | Path) -> "FixtureArchive":
        archive = cls()
        path = Path(path)
        if not path.exists():
            return archive
        for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
            if not line.strip():
                continue
            try:
                row = json.loads(line)
                archive.add(row["query"], int(row["skip"]), int(row["status"]), row["body"])
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise FetchError(f"{path}:{lineno}: bad archive row: {exc}") from exc
        return archive

    def save(self, path: str | Path) -> None:
        rows = []
        for (query, skip) in sorted(self.entries):
            status, body = self.entries[(query, skip)]
            rows.append(
                json.dumps(
                    {"query": query, "skip": skip, "status": status, "body": body},
                    ensure_ascii=False,
                )
            )
        Path(path).write_text("\n".join(rows) + ("\n" if rows else ""), encoding="utf-8")


def canonical_query_text(query: DslQuery) -> str:
    """Archive key: the query with paging stripped, canonically formatted."""
    return format_query(strip_paging(query))


def _wire_body(canonical: str, limit: int, skip: int) -> str:
    body = f"{canonical} limit {limit}"
    if skip:
        body += f" skip {skip}"
    return body


def _parse_page(body: str) -> ResultPage:
    try:
        doc = json.loads(body)
    except json.JSONDecodeError as exc:
        raise FetchError(f"malformed body: not JSON ({exc.msg})") from exc
    if not isinstance(doc, dict):
        raise FetchError("malformed body at $: expected an object")
    items = doc.get("items")
    if not isinstance(items, dict):
        raise FetchError("malformed body at items: expected an object")
    pubs = items.get("publications")
    if not isinstance(pubs, list):
        raise FetchError("malformed body at items.publications: expected a list")
    for i, entry in enumerate(pubs):
        if not isinstance(entry, dict):
            raise FetchError(f"malformed body at items.publications[{i}]: expected an object")
    stats = doc.get("_stats")
    if not isinstance(stats, dict):
        raise FetchError("malformed body at _stats: expected an object")
    total = stats.get("total_count")
    if not isinstance(total, int) or isinstance(total, bool) or total < 0:
        raise FetchError("malformed body at _stats.total_count: expected a nonnegative integer")
    return ResultPage(items=pubs, total_count=total, raw_body=body)


class _Session:
    """One fetch run: loaded archive plus a shared HTTP session."""

    def __init__(self, cfg: SourceConfig):
        self.cfg = cfg
        self.archive: FixtureArchive | None = None
        if cfg.mode in ("replay", "record"):
            self.archive = FixtureArchive.load(cfg.archive_path)
        self.http = requests.Session() if cfg.mode in ("live", "record") else None

    def _http_post(self, body: str) -> tuple[int, str]:
        headers = {"Content-Type": "text/plain; charset=utf-8"}
        if self.cfg.auth_token:
            headers["Authorization"] = f"Bearer {self.cfg.auth_token}"
        response = self.http.post(self.cfg.endpoint_url, data=body.encode("utf-8"),
                                  headers=headers, timeout=30)
        return response.status_code, response.text

    def _raw_response(self, canonical: str, skip: int) -> tuple[int, str]:
        if self.cfg.mode == "replay":
            return self.archive.get(canonical, skip)
        status, text = self._http_post(_wire_body(canonical, self.cfg.page_limit, skip))
        if self.cfg.mode == "record":
            self.archive.add(canonical, skip, status, text)
            self.archive.save(self.cfg.archive_path)
        return status, text

    def request_page(self, query: DslQuery, skip: int) -> ResultPage:
        if skip < 0:
            raise ValueError("skip must be >= 0")
        canonical = canonical_query_text(query)
        attempts = self.cfg.retry.max_attempts
        last_error: Exception | None = None
        for attempt in range(1, attempts + 1):
            try:
                status, body = self._raw_response(canonical, skip)
            except requests.RequestException as exc:
                last_error = exc
                logger.warning("transport error (attempt %d/%d): %s", attempt, attempts, exc)
            else:
                if 200 <= status < 300:
                    return _parse_page(body)
                if status >= 500:
                    last_error = FetchError(f"server error {status}")
                    logger.warning("status %d (attempt %d/%d)", status, attempt, attempts)
                else:
                    raise FetchError(f"request rejected with status {status}: {body[:200]}")
            if attempt < attempts and self.cfg.retry.backoff_ms:
                time.sleep(self.cfg.retry.backoff_ms / 1000.0)
        raise FetchError(f"request failed after {attempts} attempt(s): {last_error}")


def request_page(cfg: SourceConfig, query: DslQuery, skip: int = 0) -> ResultPage:
    """Fetch one page for the query at the given offset.

    The query's own limit/skip are ignored on the wire; the page size comes
    from cfg.page_limit. Transient failures (transport errors, 5xx) are
    retried per cfg.retry; other failures raise immediately.
    """
    return _Session(cfg).request_page(query, skip)


def fetch_all(cfg: SourceConfig, query: DslQuery) -> list[Publication]:
    """Fetch every match by paging skip = 0, L, 2L, ... and bridge to records.

    Output is deduplicated by id keeping the first occurrence. Paging stops
    when total_count is reached, a short page arrives, or cfg.max_records is
    hit (truncation is logged). A total_count that drifts between pages
    aborts with a diagnostic.
    """
    session = _Session(cfg)
    limit = cfg.page_limit
    skip = 0
    total: int | None = None
    rows_received = 0
    duplicates = 0
    seen_ids: set[str] = set()
    out: list[Publication] = []

    while True:
        page = session.request_page(query, skip)
        if total is None:
            total = page.total_count
        elif page.total_count != total:
            raise PaginationError(
                f"total_count drifted from {total} to {page.total_count} at skip={skip}; "
                "source changed mid-pagination"
            )
        if total == 0:
            return []

        rows_received += len(page.items)
        for i, item in enumerate(page.items):
            try:
                pub = publication_from_dict(item)
            except ValueError as exc:
                raise FetchError(f"malformed body at items.publications[{i}]: {exc}") from exc
            if pub.id in seen_ids:
                duplicates += 1
                continue
            seen_ids.add(pub.id)
            out.append(pub)
            if cfg.max_records is not None and len(out) >= cfg.max_records:
                logger.warning(
                    "max_records cap (%d) hit with %d of %d rows fetched; result truncated",
                    cfg.max_records, rows_received, total,
                )
                if duplicates:
                    logger.info("%d duplicate record(s) dropped while paging", duplicates)
                return out

        if rows_received >= total:
            break
        if not page.items or len(page.items) < limit:
            raise PaginationError(
                f"source reported total_count={total} but supplied only {rows_received} row(s)"
            )
        skip += limit

    if duplicates:
        logger.info("%d duplicate record(s) dropped while paging", duplicates)
    return out


def citing_query_for(pub_id: str) -> DslQuery:
    """Query matching every record whose reference list contains pub_id."""
    if not pub_id:
        raise ValueError("pub_id must be nonempty")
    return DslQuery(predicates=(Predicate("references", "eq", pub_id),), projection="all")


def id_query_for(pub_id: str) -> DslQuery:
    """Query resolving a single record by its id."""
    if not pub_id:
        raise ValueError("pub_id must be nonempty")
    return DslQuery(predicates=(Predicate("id", "eq", pub_id),), projection="all")
