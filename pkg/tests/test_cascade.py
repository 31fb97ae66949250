from __future__ import annotations

import random
from pathlib import Path

import pytest

from citecascade import cascade, corpus, dslq, fetch
from citecascade.cascade import (
    BACKWARD,
    FORWARD,
    ExpansionSpec,
    RemoteExpansionError,
    backward_step,
    forward_step,
    run,
    run_remote,
)
from citecascade.errors import CascadeError, UnknownIdError

from conftest import random_corpus, record, store_of


def fwd_spec(**kw) -> ExpansionSpec:
    base = dict(direction=FORWARD, max_steps=2, per_article_limit=10)
    base.update(kw)
    return ExpansionSpec(**base)


# -- single steps -----------------------------------------------------------------


def test_forward_step_empty_frontier(chain_store):
    assert forward_step(chain_store, set(), set()) == set()


def test_forward_step_rank_and_truncate():
    store = store_of(
        [
            record("A", cited=1),
            record("B", cited=5, refs=["A"]),
            record("C", cited=9, refs=["A"]),
            record("D", cited=9, refs=["A"]),
        ]
    )
    assert forward_step(store, {"A"}, set(), limit=2) == {"C", "D"}


def test_forward_step_seen_excluded():
    store = store_of([record("A"), record("B", refs=["A"])])
    assert forward_step(store, {"A"}, {"B"}) == set()


def test_backward_step_empty_frontier(chain_store):
    assert backward_step(chain_store, set(), set()) == set()


def test_backward_step_chain(chain_store):
    assert backward_step(chain_store, {"C"}, set()) == {"B"}


def test_backward_step_twelve_references_keeps_top_ten():
    refs = [record(f"r{i:02d}", cited=i) for i in range(12)]
    store = store_of(refs + [record("B", refs=[r["id"] for r in refs])])
    got = backward_step(store, {"B"}, set(), limit=10)
    assert got == {f"r{i:02d}" for i in range(2, 12)}


def test_backward_step_stub_handling():
    store = store_of([record("B", refs=["known", "ghost"]), record("known", cited=3)])
    assert backward_step(store, {"B"}, set()) == {"known", "ghost"}
    assert backward_step(store, {"B"}, set(), include_stubs=False) == {"known"}


@pytest.mark.parametrize("seed", [61, 62, 63])
def test_single_step_duality(seed):
    rng = random.Random(seed)
    store = store_of(random_corpus(rng, rng.randint(30, 300)))
    ids = sorted(store.records)
    for a in ids:
        fwd = forward_step(store, {a}, set(), limit=None)
        for b in fwd:
            assert a in backward_step(store, {b}, set(), limit=None)
    for b in ids:
        bwd = backward_step(store, {b}, set(), limit=None, include_stubs=False)
        for a in bwd:
            assert b in forward_step(store, {a}, set(), limit=None)


# -- run ---------------------------------------------------------------------------


def test_run_chain_forward(chain_store):
    trace = run(chain_store, {"A"}, fwd_spec())
    assert [sorted(g) for g in trace.generations] == [["A"], ["B"], ["C"]]
    assert trace.stop_reason == "steps_exhausted"
    assert trace.first_seen == {"A": 0, "B": 1, "C": 2}
    assert ("B", "A", 1) in trace.edges and ("C", "B", 2) in trace.edges
    assert not trace.incomplete


def test_run_empty_frontier(chain_store):
    trace = run(chain_store, {"C"}, fwd_spec(max_steps=3))
    assert trace.generations == [frozenset({"C"})]
    assert trace.stop_reason == "empty_frontier"


def test_run_unknown_seed(chain_store):
    with pytest.raises(UnknownIdError):
        run(chain_store, {"nope"}, fwd_spec())
    with pytest.raises(CascadeError):
        run(chain_store, set(), fwd_spec())


def test_run_year_floor():
    store = store_of(
        [
            record("new", year=2000, refs=["mid"]),
            record("mid", year=1960, refs=["old"]),
            record("old", year=1940),
        ]
    )
    spec = ExpansionSpec(direction=BACKWARD, max_steps=5, min_year=1950)
    trace = run(store, {"new"}, spec)
    assert trace.members() == {"new", "mid"}
    assert trace.stop_reason == "year_floor"


def test_run_year_floor_partial_filter_continues():
    store = store_of(
        [
            record("new", year=2000, refs=["mid", "old"]),
            record("mid", year=1960, refs=[]),
            record("old", year=1940),
        ]
    )
    spec = ExpansionSpec(direction=BACKWARD, max_steps=5, min_year=1950)
    trace = run(store, {"new"}, spec)
    assert trace.members() == {"new", "mid"}
    assert trace.stop_reason == "empty_frontier"


def test_run_h_index_ceiling():
    # two highly cited citers push the accumulated h-index over 1
    store = store_of(
        [
            record("seed", cited=0),
            record("c1", cited=50, refs=["seed"]),
            record("c2", cited=50, refs=["seed"]),
            record("c3", cited=50, refs=["c1"]),
        ]
    )
    spec = fwd_spec(max_steps=5, h_index_ceiling=1)
    trace = run(store, {"seed"}, spec)
    assert trace.stop_reason == "h_index_ceiling"
    assert len(trace.generations) == 2  # stops right after the offending step


def test_run_population_cap_truncates_by_rank():
    citers = [record(f"c{i}", cited=i, refs=["seed"]) for i in range(6)]
    store = store_of([record("seed")] + citers)
    trace = run(store, {"seed"}, fwd_spec(max_population=4))
    assert trace.stop_reason == "population_cap"
    # budget of 3 new: the three most-cited citers
    assert trace.generations[1] == frozenset({"c5", "c4", "c3"})
    assert len(trace.members()) == 4


def test_run_population_cap_exact_fit_stops():
    citers = [record(f"c{i}", cited=i, refs=["seed"]) for i in range(3)]
    store = store_of([record("seed")] + citers)
    trace = run(store, {"seed"}, fwd_spec(max_population=4))
    assert trace.stop_reason == "population_cap"
    assert len(trace.members()) == 4


def test_run_edges_include_links_to_seen():
    # diamond: B and C cite A; D cites both B and C
    store = store_of(
        [
            record("A"),
            record("B", refs=["A"], cited=2),
            record("C", refs=["A"], cited=1),
            record("D", refs=["B", "C"], cited=0),
        ]
    )
    trace = run(store, {"A"}, fwd_spec(max_steps=2))
    assert trace.generations[1] == frozenset({"B", "C"})
    assert trace.generations[2] == frozenset({"D"})
    # D was reached via B; its link to already-seen C is still recorded
    assert ("D", "B", 2) in trace.edges
    assert ("D", "C", 2) in trace.edges


def test_run_generations_disjoint_and_monotone():
    rng = random.Random(71)
    store = store_of(random_corpus(rng, 150))
    seeds = set(sorted(store.records)[:3])
    trace = run(store, seeds, fwd_spec(max_steps=4, per_article_limit=3))
    seen: set[str] = set()
    for gen in trace.generations:
        assert not (gen & seen)
        seen |= gen
    for member, gen_idx in trace.first_seen.items():
        assert member in trace.generations[gen_idx]


@pytest.mark.parametrize("limit,steps", [(2, 3), (10, 2)])
def test_run_population_bound(limit, steps):
    rng = random.Random(81)
    store = store_of(random_corpus(rng, 200))
    seeds = set(sorted(store.records)[:1])
    trace = run(store, seeds, fwd_spec(max_steps=steps, per_article_limit=limit))
    bound = sum(limit**i for i in range(1, steps + 1))
    assert len(trace.members() - seeds) <= bound


def test_run_determinism():
    rng = random.Random(91)
    store = store_of(random_corpus(rng, 150))
    seeds = set(sorted(store.records)[:2])
    spec = fwd_spec(max_steps=3, per_article_limit=2, selection_key="times_cited")
    first = run(store, seeds, spec)
    second = run(store, seeds, spec)
    assert cascade.trace_to_jsonable(first) == cascade.trace_to_jsonable(second)


def test_percentile_selection_key():
    store = store_of(
        [
            record("seed"),
            record("hot", cited=90, refs=["seed"], for_fields=[("08", "F")], year=2001),
            record("cold", cited=1, refs=["seed"], for_fields=[("08", "F")], year=2001),
        ]
    )
    trace = run(store, {"seed"}, fwd_spec(per_article_limit=1, selection_key="percentile"))
    assert trace.generations[1] == frozenset({"hot"})


def test_trace_serialization_round_trip(chain_store):
    trace = run(chain_store, {"A"}, fwd_spec())
    doc = cascade.trace_to_jsonable(trace)
    back = cascade.trace_from_jsonable(doc)
    assert back.generations == trace.generations
    assert back.first_seen == trace.first_seen
    assert back.edges == trace.edges
    assert back.stop_reason == trace.stop_reason


# -- remote runs --------------------------------------------------------------------


def archive_for_store(store: corpus.CitationStore, path: Path, page_limit: int = 1000):
    """Record every query run_remote would issue, served from the local store."""
    archive = fetch.FixtureArchive()

    def add(query):
        canonical = fetch.canonical_query_text(query)
        total = None
        skip = 0
        while True:
            page = dslq.evaluate(
                store, dslq.DslQuery(predicates=query.predicates, limit=page_limit, skip=skip)
            )
            archive.add(canonical, skip, 200, dslq.page_to_body(page))
            total = page.total_count
            skip += page_limit
            if skip >= max(total, 1):
                break

    for pid in store.records:
        add(fetch.citing_query_for(pid))
        add(fetch.id_query_for(pid))
    for stub in store.stubs:
        add(fetch.citing_query_for(stub))
        add(fetch.id_query_for(stub))
    archive.save(path)
    return archive


def replay_cfg(path: Path, **kw) -> fetch.SourceConfig:
    return fetch.SourceConfig(mode="replay", archive_path=path, **kw)


def test_run_remote_matches_local_chain(tmp_path, chain_store):
    path = tmp_path / "archive.jsonl"
    archive_for_store(chain_store, path)
    spec = fwd_spec()
    local = run(chain_store, {"A"}, spec)
    remote_trace, pubs = run_remote(replay_cfg(path), {"A"}, spec)
    assert cascade.trace_to_jsonable(remote_trace) == cascade.trace_to_jsonable(local)
    assert {p.id for p in pubs} == {"A", "B", "C"}


def test_run_remote_matches_local_random(tmp_path):
    rng = random.Random(101)
    store = store_of(random_corpus(rng, 60, max_refs=4))
    path = tmp_path / "archive.jsonl"
    archive_for_store(store, path)
    seeds = set(sorted(store.records)[:2])
    for direction, steps in ((FORWARD, 3), (BACKWARD, 2)):
        spec = ExpansionSpec(direction=direction, max_steps=steps, per_article_limit=3)
        local = run(store, seeds, spec)
        remote_trace, _ = run_remote(replay_cfg(path), seeds, spec)
        assert cascade.trace_to_jsonable(remote_trace) == cascade.trace_to_jsonable(local)


def test_run_remote_empty_citers(tmp_path, chain_store):
    path = tmp_path / "archive.jsonl"
    archive_for_store(chain_store, path)
    trace, _ = run_remote(replay_cfg(path), {"C"}, fwd_spec())
    assert trace.generations == [frozenset({"C"})]
    assert trace.stop_reason == "empty_frontier"


def test_run_remote_failure_keeps_partial_trace(tmp_path, chain_store):
    path = tmp_path / "archive.jsonl"
    archive = archive_for_store(chain_store, path)
    # poison the step-2 query so the replay fails mid-run
    del archive.entries[(fetch.canonical_query_text(fetch.citing_query_for("B")), 0)]
    archive.save(path)
    with pytest.raises(RemoteExpansionError) as err:
        run_remote(replay_cfg(path), {"A"}, fwd_spec(max_steps=3))
    partial = err.value.trace
    assert partial.incomplete
    assert [sorted(g) for g in partial.generations] == [["A"], ["B"]]
    assert {p.id for p in err.value.records} >= {"A", "B"}


def test_run_remote_unknown_seed(tmp_path, chain_store):
    path = tmp_path / "archive.jsonl"
    archive = archive_for_store(chain_store, path)
    empty = dslq.page_to_body(dslq.ResultPage(items=[], total_count=0))
    archive.add(fetch.canonical_query_text(fetch.id_query_for("zz")), 0, 200, empty)
    archive.save(path)
    with pytest.raises(UnknownIdError):
        run_remote(replay_cfg(path), {"zz"}, fwd_spec())


def test_run_remote_rejects_percentile_key(tmp_path, chain_store):
    path = tmp_path / "archive.jsonl"
    archive_for_store(chain_store, path)
    with pytest.raises(CascadeError, match="percentile"):
        run_remote(replay_cfg(path), {"A"}, fwd_spec(selection_key="percentile"))
