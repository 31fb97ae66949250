from __future__ import annotations

import random

import pytest

from citecascade import dslq
from citecascade.dslq import DslQuery, Predicate, SortSpec, TextSearch
from citecascade.errors import DslEvaluationError, DslParseError

from conftest import record, store_of

CITING_TITLE_QUERY = (
    'search publications in title_only for "emerging trends" '
    'where references = "pub.1001131784" '
    "return publications[title+year] sort by year"
)

ISSN_QUERY = (
    'search publications where issn in ["0138-9130", "1588-2861"] '
    "and times_cited>0 and references is not empty return publications[all]"
)

FOR_QUERY = (
    'search publications where FOR.name="1109 Neurosciences" return\n'
    "publications[title+times_cited+altmetric+year] sort by altmetric limit 1"
)


def test_parse_citing_title_query():
    q = dslq.parse(CITING_TITLE_QUERY)
    assert q.text_search == TextSearch(scope="title_only", phrase="emerging trends")
    assert q.predicates == (Predicate("references", "eq", "pub.1001131784"),)
    assert q.projection == ("title", "year")
    assert q.sort == SortSpec(field="year", descending=False)
    assert q.limit == 20 and q.skip == 0


def test_parse_issn_query():
    q = dslq.parse(ISSN_QUERY)
    assert q.predicates == (
        Predicate("issn", "in_set", ("0138-9130", "1588-2861")),
        Predicate("times_cited", "gt", 0),
        Predicate("references", "is_not_empty"),
    )
    assert q.projection == "all"
    assert q.text_search is None and q.sort is None


def test_parse_for_query():
    q = dslq.parse(FOR_QUERY)
    assert q.predicates == (Predicate("FOR.name", "eq", "1109 Neurosciences"),)
    assert q.projection == ("title", "times_cited", "altmetric", "year")
    assert q.sort == SortSpec(field="altmetric", descending=True)
    assert q.limit == 1


def test_parse_errors_carry_offset_and_expectation():
    with pytest.raises(DslParseError) as err:
        dslq.parse("search publications return journals[all]")
    assert "publications" in str(err.value)
    assert err.value.offset == len("search publications return ")

    with pytest.raises(DslParseError, match="unterminated"):
        dslq.parse('search publications in title_only for "oops')


def test_limit_bounds_rejected_at_parse():
    with pytest.raises(DslParseError, match="limit"):
        dslq.parse("search publications return publications[all] limit 1001")
    with pytest.raises(DslParseError, match="limit"):
        dslq.parse("search publications return publications[all] limit 0")
    q = dslq.parse("search publications return publications[all] limit 1000")
    assert q.limit == 1000


def test_trailing_garbage_rejected():
    with pytest.raises(DslParseError, match="end of query"):
        dslq.parse("search publications return publications[all] bogus")


def test_format_minimal_query():
    assert dslq.format(DslQuery()) == "search publications return publications[all]"


def test_format_escapes_strings():
    q = DslQuery(predicates=(Predicate("title", "eq", 'say "hi" \\ there'),))
    assert dslq.parse(dslq.format(q)) == q


# -- generated round-trip -----------------------------------------------------

FIELDS_SCALAR = ["title", "year", "times_cited", "altmetric", "doi", "id"]
FIELDS_LIST = ["references", "issn", "FOR.name", "authors"]
PROJECTION_FIELDS = ["title", "year", "times_cited", "altmetric", "id", "doi", "authors"]


def random_query(rng: random.Random) -> DslQuery:
    text_search = None
    if rng.random() < 0.4:
        scope = rng.choice(["title_only", "full_data"])
        phrase = rng.choice(["emerging trends", 'quo "ted"', "a\\b", "x y z"])
        text_search = TextSearch(scope=scope, phrase=phrase)
    predicates = []
    for _ in range(rng.randint(0, 3)):
        roll = rng.random()
        if roll < 0.3:
            predicates.append(
                Predicate(rng.choice(FIELDS_SCALAR + FIELDS_LIST), "eq",
                          rng.choice(["pub.1", "some value", str(rng.randint(0, 9))]))
            )
        elif roll < 0.5:
            predicates.append(
                Predicate(rng.choice(["times_cited", "year", "altmetric"]),
                          rng.choice(["gt", "lt"]), rng.randint(0, 500))
            )
        elif roll < 0.75:
            values = tuple(f"val-{rng.randint(0, 99)}" for _ in range(rng.randint(1, 3)))
            predicates.append(Predicate(rng.choice(FIELDS_LIST), "in_set", values))
        else:
            predicates.append(Predicate(rng.choice(FIELDS_LIST), "is_not_empty"))
    projection = "all"
    if rng.random() < 0.5:
        count = rng.randint(1, 4)
        projection = tuple(rng.sample(PROJECTION_FIELDS, count))
    sort = None
    if rng.random() < 0.5:
        sort = SortSpec(
            field=rng.choice(["year", "times_cited", "altmetric", "title"]),
            descending=rng.random() < 0.5,
        )
    limit = rng.choice([20, 1, 7, 1000])
    skip = rng.choice([0, 0, 5, 40])
    return DslQuery(
        text_search=text_search,
        predicates=tuple(predicates),
        projection=projection,
        sort=sort,
        limit=limit,
        skip=skip,
    )


def test_round_trip_generated_queries():
    rng = random.Random(777)
    for _ in range(300):
        q = random_query(rng)
        assert dslq.parse(dslq.format(q)) == q


# -- evaluation ---------------------------------------------------------------


@pytest.fixture
def five_record_store():
    return store_of(
        [
            record("p1", cited=0, title="Mapping hotspots"),
            record("p2", cited=3, title="Emerging Trends in networks", refs=["p1"]),
            record("p3", cited=7, title="A review of emerging trends", refs=["p1", "p2"]),
            record("p4", cited=0, title="Collective dynamics"),
            record("p5", cited=1, title="Trends in research foci", altmetric=12),
        ]
    )


def test_evaluate_no_match(five_record_store):
    page = dslq.evaluate(five_record_store, dslq.parse(
        'search publications where references = "zzz" return publications[all]'
    ))
    assert page.items == [] and page.total_count == 0


def test_evaluate_references_and_counts(five_record_store):
    page = dslq.evaluate(five_record_store, dslq.parse(
        'search publications where references = "p1" return publications[id]'
    ))
    assert [i["id"] for i in page.items] == ["p2", "p3"]
    assert page.total_count == 2


def test_evaluate_times_cited_gt_sorted_by_id(five_record_store):
    page = dslq.evaluate(five_record_store, dslq.parse(
        "search publications where times_cited>0 return publications[id+times_cited]"
    ))
    assert page.total_count == 3
    assert [i["id"] for i in page.items] == ["p2", "p3", "p5"]


def test_default_page_size_twenty():
    records = [record(f"r{i:02d}", cited=i) for i in range(25)]
    store = store_of(records)
    page = dslq.evaluate(store, dslq.parse("search publications return publications[id]"))
    assert len(page.items) == 20
    assert page.total_count == 25


def test_text_search_case_insensitive_containment(five_record_store):
    page = dslq.evaluate(five_record_store, dslq.parse(
        'search publications in title_only for "emerging trends" return publications[id]'
    ))
    assert [i["id"] for i in page.items] == ["p2", "p3"]


def test_sort_descending_missing_values_last(five_record_store):
    page = dslq.evaluate(five_record_store, dslq.parse(
        "search publications return publications[id+altmetric] sort by altmetric"
    ))
    ids = [i["id"] for i in page.items]
    assert ids[0] == "p5"  # only record with an altmetric value
    assert ids[1:] == ["p1", "p2", "p3", "p4"]  # absent values tie, id ascending


def test_paging_algebra(five_record_store):
    base = "search publications return publications[id] sort by times_cited desc"
    unpaged = dslq.evaluate(
        five_record_store, dslq.parse(base + " limit 1000")
    ).items
    stitched = []
    for skip in range(0, 5, 2):
        page = dslq.evaluate(five_record_store, dslq.parse(base + f" limit 2 skip {skip}"))
        assert page.total_count == 5
        stitched.extend(page.items)
    assert stitched == unpaged


def test_evaluate_is_deterministic(five_record_store):
    q = dslq.parse("search publications return publications[all] sort by times_cited")
    first = dslq.page_to_body(dslq.evaluate(five_record_store, q))
    second = dslq.page_to_body(dslq.evaluate(five_record_store, q))
    assert first == second


def test_unknown_fields_rejected(five_record_store):
    with pytest.raises(DslEvaluationError, match="unknown"):
        dslq.evaluate(five_record_store, dslq.parse(
            "search publications return publications[frobnitz]"
        ))
    with pytest.raises(DslEvaluationError, match="unknown"):
        dslq.evaluate(five_record_store, dslq.parse(
            "search publications return publications[all] sort by frobnitz"
        ))
    with pytest.raises(DslEvaluationError, match="unknown"):
        dslq.evaluate(five_record_store, dslq.parse(
            'search publications where frobnitz = "x" return publications[all]'
        ))


def test_projection_shapes(five_record_store):
    page = dslq.evaluate(five_record_store, dslq.parse(
        'search publications where id = "p5" return publications[title+year+altmetric]'
    ))
    assert page.items == [{"title": "Trends in research foci", "year": 2000, "altmetric": 12}]
    full = dslq.evaluate(five_record_store, dslq.parse(
        'search publications where id = "p5" return publications[all]'
    ))
    assert full.items[0]["id"] == "p5"
    assert full.items[0]["journal"] == {"title": "", "issn": []}


def test_issn_and_for_predicates():
    store = store_of(
        [
            record("a", issn=["0138-9130"], cited=1, refs=["b"]),
            record("b", issn=["9999-0000"], for_fields=[("1109", "1109 Neurosciences")]),
        ]
    )
    page = dslq.evaluate(store, dslq.parse(ISSN_QUERY))
    assert [i["id"] for i in page.items] == ["a"]
    page = dslq.evaluate(store, dslq.parse(
        'search publications where FOR.name="1109 Neurosciences" return publications[id]'
    ))
    assert [i["id"] for i in page.items] == ["b"]
