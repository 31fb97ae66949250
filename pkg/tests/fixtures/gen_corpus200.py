"""Regenerates corpus200.jsonl, the bundled end-to-end pipeline fixture.

Deterministic: a fixed seed drives a 200-record citation graph whose links
point from newer to older records, with a mild preference for low indexes
so the first record accumulates citers. times_cited is the in-corpus citer
count plus noise standing in for citations from outside the corpus, so
selection ranks spread across the timeline. Includes a few unresolved
references and one record without a year.

Run from the repository root:  python3 tests/fixtures/gen_corpus200.py
"""

from __future__ import annotations

import json
import random
from pathlib import Path

N = 200
SEED = 7

TOPICS = {
    "0801": (
        "Artificial Intelligence",
        ["semantic indexing", "matrix factorization", "recommender system",
         "collaborative filtering", "latent factors", "ranking models"],
    ),
    "0806": (
        "Information Systems",
        ["citation analysis", "research evaluation", "bibliometric mapping",
         "impact indicators", "scholarly data", "science mapping"],
    ),
    "0104": (
        "Statistics",
        ["network inference", "community detection", "graph clustering",
         "random graphs", "spectral methods", "link prediction"],
    ),
}

JOURNALS = [
    ("Journal of Knowledge Networks", ["1111-2222"]),
    ("Data Science Letters", ["3333-4444", "3333-4445"]),
    ("Computational Review", ["5555-6666"]),
]

SURNAMES = ["Ahmed", "Brown", "Chen", "Diaz", "Ekwueme", "Fischer", "Garcia",
            "Huang", "Ivanova", "Jensen", "Kim", "Lopez", "Moreau", "Nakamura"]


def main() -> None:
    rng = random.Random(SEED)
    codes = sorted(TOPICS)
    refs_of: dict[int, list[str]] = {}
    topic_of: dict[int, str] = {}

    for i in range(1, N + 1):
        topic_of[i] = codes[(i - 1) % 3] if i > 3 else codes[0]

    for i in range(1, N + 1):
        n_refs = 0 if i == 1 else rng.randint(min(2, i - 1), min(7, i - 1))
        pool = list(range(1, i))
        # bias towards older records and same-topic neighbours
        weights = [
            (3.0 if j <= 5 else 1.0) * (2.0 if topic_of[j] == topic_of[i] else 1.0) / j**0.3
            for j in pool
        ]
        chosen: set[int] = set()
        while len(chosen) < n_refs and pool:
            chosen.add(rng.choices(pool, weights=weights, k=1)[0])
        refs = sorted(f"pub.{j:04d}" for j in chosen)
        if rng.random() < 0.05:
            refs.append(f"pub.9{i:03d}")  # unresolved reference
        refs_of[i] = refs

    cited_by: dict[str, int] = {}
    for refs in refs_of.values():
        for rid in refs:
            cited_by[rid] = cited_by.get(rid, 0) + 1

    records = []
    for i in range(1, N + 1):
        pid = f"pub.{i:04d}"
        code = topic_of[i]
        name, phrases = TOPICS[code]
        lead = rng.choice(phrases)
        tail = rng.choice(phrases)
        title = f"{lead.title()} approaches for {tail} in large corpora"
        year = 1990 + min(28, (i - 1) * 29 // N + rng.randint(0, 1))
        journal, issn = JOURNALS[i % len(JOURNALS)]
        rec = {
            "id": pid,
            "doi": f"10.5555/{i:04d}",
            "title": title,
            "year": None if i == 199 else year,
            "journal": {"title": journal, "issn": issn},
            "FOR": [{"code": code, "name": f"{code} {name}"}],
            "times_cited": cited_by.get(pid, 0) + rng.randint(0, 25),
            "altmetric": rng.randint(0, 40) if rng.random() < 0.4 else None,
            "relative_citation_ratio": round(rng.uniform(0.1, 4.0), 2)
            if rng.random() < 0.5 else None,
            "reference_ids": refs_of[i],
            "authors": rng.sample(SURNAMES, rng.randint(1, 3)),
        }
        records.append(rec)

    out = Path(__file__).parent / "corpus200.jsonl"
    out.write_text(
        "\n".join(json.dumps(r, ensure_ascii=False) for r in records) + "\n", encoding="utf-8"
    )
    print(f"wrote {out} ({len(records)} records)")


if __name__ == "__main__":
    main()
