from __future__ import annotations

import json
import random
from pathlib import Path

import pytest

from citecascade import corpus


def record(
    pid: str,
    year: int | None = 2000,
    refs: list[str] | None = None,
    cited: int = 0,
    title: str = "",
    for_fields: list[tuple[str, str]] | None = None,
    altmetric: int | None = None,
    rcr: float | None = None,
    journal: str = "",
    issn: list[str] | None = None,
    authors: list[str] | None = None,
    doi: str | None = None,
) -> dict:
    """A corpus record dict in the JSONL field layout."""
    return {
        "id": pid,
        "doi": doi,
        "title": title or f"Study {pid}",
        "year": year,
        "journal": {"title": journal, "issn": issn or []},
        "FOR": [{"code": code, "name": name} for code, name in (for_fields or [])],
        "times_cited": cited,
        "altmetric": altmetric,
        "relative_citation_ratio": rcr,
        "reference_ids": refs or [],
        "authors": authors or [],
    }


def write_corpus(path: Path, records: list[dict]) -> Path:
    path.write_text(
        "\n".join(json.dumps(r, ensure_ascii=False) for r in records) + "\n", encoding="utf-8"
    )
    return path


def store_of(records: list[dict]) -> corpus.CitationStore:
    return corpus.build_store([corpus.publication_from_dict(r) for r in records])


def random_corpus(rng: random.Random, n: int, max_refs: int = 6) -> list[dict]:
    """Random citation graph; records reference only earlier (older) records."""
    records = []
    for i in range(n):
        pid = f"pub.{i:04d}"
        year = 1980 + (i * 37) % 40
        n_refs = rng.randint(0, min(max_refs, i))
        refs = sorted(rng.sample([f"pub.{j:04d}" for j in range(i)], n_refs)) if n_refs else []
        records.append(
            record(
                pid,
                year=year,
                refs=refs,
                cited=rng.randint(0, 50),
                for_fields=[(f"{8 + rng.randint(0, 2):02d}01", "Field")],
            )
        )
    return records


@pytest.fixture
def chain_store() -> corpus.CitationStore:
    """A <- B <- C citation chain (B cites A, C cites B)."""
    return store_of(
        [
            record("A", year=1990, cited=2),
            record("B", year=2000, refs=["A"], cited=1),
            record("C", year=2010, refs=["B"], cited=0),
        ]
    )


FIXTURES = Path(__file__).parent / "fixtures"
