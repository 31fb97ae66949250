"""Command-line surface: composable pipeline stages over JSON artifacts.

    cascade ingest    corpus JSONL -> store artifact + validation summary
    cascade query     run a DSL query, print the wire-shaped result page
    cascade expand    cascading expansion -> trace artifact
    cascade metrics   h | profile | normalize | burst
    cascade net       co-citation network from citers or a trace -> net artifact
    cascade cluster   modularity clustering (+ labels) -> clusters artifact
    cascade sva       structural variation report -> sva artifact (+ DOT)
    cascade overlay   background/foreground comparison -> overlay artifact
    cascade export    net artifact -> graphml | dot | json

Exit codes: 0 success, 1 usage error, 2 data error. `--store` accepts either
a raw corpus JSONL or a store artifact produced by `ingest`. A JSON config
file (`--config`) supplies defaults for any long flag; the auth token for
live sources comes from CASCADE_AUTH_TOKEN.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from collections import Counter
from pathlib import Path

from . import artifacts, cascade, conet, corpus, dslq, exports, fetch, scoremetrics, structvar
from .errors import ArtifactError, CascadeError

logger = logging.getLogger(__name__)

AUTH_TOKEN_ENV = "CASCADE_AUTH_TOKEN"


class _Parser(argparse.ArgumentParser):
    """argparse with usage failures mapped to exit status 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


# ---------------------------------------------------------------------------
# shared input helpers


def _load_store(path: str) -> corpus.CitationStore:
    """Load a store artifact, or fall back to ingesting a corpus JSONL."""
    text = Path(path).read_text(encoding="utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError:
        doc = None
    if isinstance(doc, dict) and doc.get("schema") == artifacts.SCHEMAS["store"]:
        return corpus.store_from_jsonable(doc)
    return corpus.ingest_jsonl(path)


def _parse_ids(raw: str) -> list[str]:
    """Comma-separated ids, or @file with one id per line."""
    if raw.startswith("@"):
        lines = Path(raw[1:]).read_text(encoding="utf-8").splitlines()
        return [line.strip() for line in lines if line.strip()]
    return [part.strip() for part in raw.split(",") if part.strip()]


def _trace_citers(store: corpus.CitationStore, trace: cascade.ExpansionTrace) -> list[str]:
    """Trace members usable as citing articles (ingested records only)."""
    return sorted(m for m in trace.members() if m in store.records)


def _resolve_citers(args, store: corpus.CitationStore) -> list[str]:
    if getattr(args, "citers", None):
        return sorted(set(_parse_ids(args.citers)))
    if getattr(args, "trace", None):
        doc = artifacts.load_artifact(args.trace, artifacts.SCHEMAS["trace"])
        return _trace_citers(store, cascade.trace_from_jsonable(doc))
    raise CascadeError("need --citers or --trace to define the citing set")


def _source_config(args) -> fetch.SourceConfig:
    spec = args.source
    mode, _, path = spec.partition(":")
    if mode not in fetch.MODES:
        raise CascadeError(f"--source must be live, replay:<file>, or record:<file>, got {spec!r}")
    if mode in ("replay", "record") and not path:
        raise CascadeError(f"--source {mode} needs a file: {mode}:<file>")
    return fetch.SourceConfig(
        endpoint_url=getattr(args, "endpoint", "") or "",
        auth_token=os.environ.get(AUTH_TOKEN_ENV),
        page_limit=args.page_limit,
        max_records=getattr(args, "max_records", None),
        mode=mode,
        archive_path=Path(path) if path else None,
    )


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _maybe_manifest(args, inputs: list, outputs: list) -> None:
    if getattr(args, "manifest", None):
        config = {
            k: (str(v) if isinstance(v, Path) else v)
            for k, v in vars(args).items()
            if k not in ("func", "manifest") and not callable(v)
        }
        artifacts.write_manifest(args.manifest, sys.argv, config, inputs, outputs)


# ---------------------------------------------------------------------------
# subcommands


def cmd_ingest(args) -> int:
    store = corpus.ingest_jsonl(args.corpus, max_malformed_fraction=args.max_malformed)
    issues = corpus.validate(store)
    if args.out:
        artifacts.save_artifact(args.out, corpus.store_to_jsonable(store))
    by_kind = Counter(issue.kind for issue in issues)
    summary = {
        "records": len(store.records),
        "quarantined": len(store.quarantined),
        "stubs": len(store.stubs),
        "malformed_lines": len(store.malformed),
        "issues": dict(sorted(by_kind.items())),
    }
    print(json.dumps(summary, sort_keys=True, indent=2))
    if args.show_issues:
        for issue in issues:
            print(f"{issue.record_id}\t{issue.kind}\t{issue.detail}")
    _maybe_manifest(args, [args.corpus], [args.out] if args.out else [])
    return 0


def cmd_query(args) -> int:
    store = _load_store(args.store)
    text = args.dsl if args.dsl is not None else sys.stdin.read()
    query = dslq.parse(text)
    page = dslq.evaluate(store, query)
    _emit(dslq.page_to_body(page), args.out)
    _maybe_manifest(args, [args.store], [args.out] if args.out else [])
    return 0


def _expansion_spec(args) -> cascade.ExpansionSpec:
    direction = {"fwd": cascade.FORWARD, "bwd": cascade.BACKWARD}[args.direction]
    return cascade.ExpansionSpec(
        direction=direction,
        max_steps=args.steps,
        per_article_limit=args.limit,
        selection_key=args.key,
        min_year=args.min_year,
        h_index_ceiling=args.h_ceiling,
        max_population=args.max_pop,
        include_stubs=not args.no_stubs,
    )


def cmd_expand(args) -> int:
    seeds = set(_parse_ids(args.seeds))
    spec = _expansion_spec(args)
    inputs = []
    if args.source:
        cfg = _source_config(args)
        trace, pubs = cascade.run_remote(cfg, seeds, spec)
        if args.records_out:
            lines = [json.dumps(p.to_dict(), sort_keys=True, ensure_ascii=False) for p in pubs]
            Path(args.records_out).write_text("\n".join(lines) + "\n", encoding="utf-8")
    else:
        if not args.store:
            raise CascadeError("expand needs --store (local) or --source (remote)")
        store = _load_store(args.store)
        trace = cascade.run(store, seeds, spec)
        inputs.append(args.store)
    artifacts.save_artifact(args.out, cascade.trace_to_jsonable(trace))
    print(
        f"stop_reason={trace.stop_reason} generations={len(trace.generations)} "
        f"population={len(trace.members())}"
    )
    outputs = [args.out] + ([args.records_out] if args.source and args.records_out else [])
    _maybe_manifest(args, inputs, outputs)
    return 0


def cmd_metrics_h(args) -> int:
    store = _load_store(args.store)
    ids = _parse_ids(args.ids)
    cites = [store.require(i).times_cited for i in ids]
    print(scoremetrics.h_index(cites))
    return 0


def cmd_metrics_profile(args) -> int:
    store = _load_store(args.store)
    profile = scoremetrics.threshold_profile(store, _parse_ids(args.ids))
    headers = ["Size"] + [f">={t}" for t in scoremetrics.THRESHOLDS] + ["h-index"]
    values = (
        [profile.set_size]
        + [profile.counts_at[t] for t in scoremetrics.THRESHOLDS]
        + [profile.h_index]
    )
    widths = [max(len(h), len(str(v))) for h, v in zip(headers, values)]
    print("  ".join(h.rjust(w) for h, w in zip(headers, widths)))
    print("  ".join(str(v).rjust(w) for v, w in zip(values, widths)))
    if args.out:
        doc = {
            "set_size": profile.set_size,
            "counts_at": {str(t): c for t, c in sorted(profile.counts_at.items())},
            "h_index": profile.h_index,
        }
        Path(args.out).write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n")
    return 0


def cmd_metrics_normalize(args) -> int:
    store = _load_store(args.store)
    kept = scoremetrics.normalize_filter(store, _parse_ids(args.ids), cutoff=args.cutoff)
    text = "\n".join(sorted(kept)) + ("\n" if kept else "")
    _emit(text, args.out)
    return 0


def _node_yearly_counts(store: corpus.CitationStore, node: str) -> dict[int, int]:
    counts: Counter[int] = Counter()
    for citer in store.citing_index.get(node, ()):
        year = store.records[citer].year
        if year is not None:
            counts[year] += 1
    return dict(counts)


def cmd_metrics_burst(args) -> int:
    if args.series or args.series_file:
        raw = args.series if args.series else Path(args.series_file).read_text(encoding="utf-8")
        series = {int(year): int(count) for year, count in json.loads(raw).items()}
        intervals = scoremetrics.burst_detect(series, gamma=args.gamma, ratio=args.ratio)
        doc = [
            {"start_year": b.start_year, "end_year": b.end_year, "strength": b.strength}
            for b in intervals
        ]
        _emit(json.dumps(doc, indent=2) + "\n", args.out)
        return 0
    if args.store and args.net:
        store = _load_store(args.store)
        net = exports.network_from_jsonable(
            artifacts.load_artifact(args.net, artifacts.SCHEMAS["net"])
        )
        strengths: dict[str, float] = {}
        for node in net.sorted_nodes():
            intervals = scoremetrics.burst_detect(
                _node_yearly_counts(store, node), gamma=args.gamma, ratio=args.ratio
            ) if store.citing_index.get(node) else []
            if intervals:
                strengths[node] = max(b.strength for b in intervals)
        artifact = {"schema": artifacts.SCHEMAS["bursts"], "strengths": strengths}
        if args.out:
            artifacts.save_artifact(args.out, artifact)
        else:
            print(artifacts.dumps_canonical(artifact), end="")
        return 0
    raise CascadeError("burst needs --series/--series-file, or --store with --net")


def cmd_net(args) -> int:
    store = _load_store(args.store)
    citers = _resolve_citers(args, store)
    if not citers:
        raise CascadeError("citing set is empty")
    years = [store.require(c).year for c in citers]
    start = args.start if args.start is not None else min(y for y in years if y is not None)
    end = args.end if args.end is not None else max(y for y in years if y is not None)
    cap = None if args.cap in (None, "none") else int(args.cap)
    plan = conet.SlicePlan(
        start_year=start, end_year=end, slice_length=args.slice_len, per_slice_node_cap=cap
    )
    net = conet.build(store, citers, plan)
    if args.largest_component:
        net, fraction = conet.largest_component(net)
        net.meta["component_fraction"] = fraction
    artifacts.save_artifact(args.out, exports.network_to_jsonable(net))
    print(f"nodes={len(net.nodes)} edges={len(net.edges)}")
    _maybe_manifest(args, [args.store] + ([args.trace] if args.trace else []), [args.out])
    return 0


def cmd_cluster(args) -> int:
    net = exports.network_from_jsonable(artifacts.load_artifact(args.net, artifacts.SCHEMAS["net"]))
    clusters = conet.cluster(net)
    if args.store and (args.citers or args.trace):
        store = _load_store(args.store)
        clusters = conet.label_clusters(clusters, store, _resolve_citers(args, store))
    artifacts.save_artifact(args.out, exports.clusters_to_jsonable(clusters))
    sizes = Counter(clusters.partition.values())
    print(f"clusters={len(sizes)} modularity={clusters.modularity:.4f}")
    _maybe_manifest(args, [args.net], [args.out])
    return 0


def cmd_sva(args) -> int:
    store = _load_store(args.store)
    baseline = exports.network_from_jsonable(
        artifacts.load_artifact(args.net, artifacts.SCHEMAS["net"])
    )
    clusters = exports.clusters_from_jsonable(
        artifacts.load_artifact(args.clusters, artifacts.SCHEMAS["clusters"])
    )
    report = structvar.sva_run(
        store, _parse_ids(args.candidates), baseline, clusters, top_n=args.top
    )
    doc = {
        "schema": artifacts.SCHEMAS["sva"],
        "top": [
            {
                "id": c.article_id,
                "delta_q": c.delta_q,
                "divergence": c.centrality_divergence,
                "times_cited": c.times_cited,
                "in_baseline": c.in_baseline,
                "novel": [[u, v] for u, v in c.novel_links],
                "existing": [[u, v] for u, v in c.existing_links],
            }
            for c in report.top
        ],
        "correlation_r": report.correlation_r,
    }
    artifacts.save_artifact(args.out, doc)
    if args.dot:
        Path(args.dot).write_text(exports.sva_to_dot(baseline, report), encoding="utf-8")
    shown = report.correlation_r if report.correlation_r is not None else "undefined"
    print(f"candidates={len(report.candidates)} correlation_r={shown}")
    _maybe_manifest(args, [args.store, args.net, args.clusters],
                    [args.out] + ([args.dot] if args.dot else []))
    return 0


def cmd_overlay(args) -> int:
    base = exports.network_from_jsonable(artifacts.load_artifact(args.base, artifacts.SCHEMAS["net"]))
    fore = exports.network_from_jsonable(artifacts.load_artifact(args.fore, artifacts.SCHEMAS["net"]))
    report = structvar.overlay(base, fore)
    doc = {
        "schema": artifacts.SCHEMAS["overlay"],
        "node_classes": dict(sorted(report.node_classes.items())),
        "edge_classes": {f"{u}|{v}": cls for (u, v), cls in sorted(report.edge_classes.items())},
        "node_counts": report.node_counts,
        "edge_counts": report.edge_counts,
    }
    artifacts.save_artifact(args.out, doc)
    if args.merged:
        merged = structvar.merge_overlay(base, fore)
        artifacts.save_artifact(args.merged, exports.network_to_jsonable(merged))
    print(f"nodes={report.node_counts} edges={report.edge_counts}")
    _maybe_manifest(args, [args.base, args.fore],
                    [args.out] + ([args.merged] if args.merged else []))
    return 0


def cmd_export(args) -> int:
    net = exports.network_from_jsonable(artifacts.load_artifact(args.net, artifacts.SCHEMAS["net"]))
    clusters = None
    if args.clusters:
        clusters = exports.clusters_from_jsonable(
            artifacts.load_artifact(args.clusters, artifacts.SCHEMAS["clusters"])
        )
    bursts = None
    if args.bursts:
        doc = artifacts.load_artifact(args.bursts, artifacts.SCHEMAS["bursts"])
        bursts = {k: float(v) for k, v in doc.get("strengths", {}).items()}
    _emit(exports.render(net, args.format, clusters, bursts), args.out)
    inputs = [args.net] + [p for p in (args.clusters, args.bursts) if p]
    _maybe_manifest(args, inputs, [args.out] if args.out else [])
    return 0


# ---------------------------------------------------------------------------
# parser assembly


def _add_manifest(sub) -> None:
    sub.add_argument("--manifest", help="write a run manifest to this path")


def build_parser() -> _Parser:
    parser = _Parser(prog="cascade", description=__doc__.splitlines()[0])
    parser.add_argument("--config", help="JSON file with default values for long flags")
    parser.add_argument("--verbose", action="store_true", help="log at DEBUG level")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("ingest", help="ingest a corpus JSONL into a store artifact")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", help="store artifact path")
    p.add_argument("--max-malformed", type=float, default=0.10,
                   help="abort when this fraction of lines is malformed")
    p.add_argument("--show-issues", action="store_true")
    _add_manifest(p)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("query", help="evaluate a DSL query against a store")
    p.add_argument("--store", required=True)
    p.add_argument("--dsl", help="query text (default: read stdin)")
    p.add_argument("--out")
    _add_manifest(p)
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("expand", help="run a cascading citation expansion")
    p.add_argument("--store", help="local corpus or store artifact")
    p.add_argument("--source", help="live | replay:<file> | record:<file>")
    p.add_argument("--endpoint", help="endpoint URL for live/record sources")
    p.add_argument("--page-limit", type=int, default=1000)
    p.add_argument("--max-records", type=int)
    p.add_argument("--seeds", required=True, help="comma-separated ids or @file")
    p.add_argument("--direction", choices=("fwd", "bwd"), required=True)
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--limit", type=int, default=10, help="per-article selection limit")
    p.add_argument("--key", choices=cascade.SELECTION_KEYS, default="times_cited")
    p.add_argument("--min-year", type=int)
    p.add_argument("--h-ceiling", type=int)
    p.add_argument("--max-pop", type=int)
    p.add_argument("--no-stubs", action="store_true",
                   help="exclude unresolved references from backward steps")
    p.add_argument("--records-out", help="write remotely fetched records as JSONL")
    p.add_argument("--out", required=True, help="trace artifact path")
    _add_manifest(p)
    p.set_defaults(func=cmd_expand)

    p = sub.add_parser("metrics", help="bibliometric measures")
    msub = p.add_subparsers(dest="metric", required=True, metavar="MEASURE")

    m = msub.add_parser("h", help="h-index of an id set")
    m.add_argument("--store", required=True)
    m.add_argument("--ids", required=True)
    m.set_defaults(func=cmd_metrics_h)

    m = msub.add_parser("profile", help="citation-threshold profile of an id set")
    m.add_argument("--store", required=True)
    m.add_argument("--ids", required=True)
    m.add_argument("--out")
    m.set_defaults(func=cmd_metrics_profile)

    m = msub.add_parser("normalize", help="field/year percentile filter")
    m.add_argument("--store", required=True)
    m.add_argument("--ids", required=True)
    m.add_argument("--cutoff", type=float, default=50.0)
    m.add_argument("--out")
    m.set_defaults(func=cmd_metrics_normalize)

    m = msub.add_parser("burst", help="citation burst detection")
    m.add_argument("--series", help="inline JSON map year -> count")
    m.add_argument("--series-file", help="JSON file with a year -> count map")
    m.add_argument("--store", help="with --net: per-node burst strengths")
    m.add_argument("--net", help="network artifact whose nodes get burst scores")
    m.add_argument("--gamma", type=float, default=1.0)
    m.add_argument("--ratio", type=float, default=2.0)
    m.add_argument("--out")
    m.set_defaults(func=cmd_metrics_burst)

    p = sub.add_parser("net", help="build a time-sliced co-citation network")
    p.add_argument("--store", required=True)
    p.add_argument("--citers", help="comma-separated ids or @file")
    p.add_argument("--trace", help="trace artifact; members become the citing set")
    p.add_argument("--start", type=int, help="window start year (default: data min)")
    p.add_argument("--end", type=int, help="window end year (default: data max)")
    p.add_argument("--slice-len", type=int, default=1)
    p.add_argument("--cap", default="50", help="per-slice node cap, or 'none'")
    p.add_argument("--largest-component", action="store_true")
    p.add_argument("--out", required=True)
    _add_manifest(p)
    p.set_defaults(func=cmd_net)

    p = sub.add_parser("cluster", help="modularity clustering of a network artifact")
    p.add_argument("--net", required=True)
    p.add_argument("--store", help="with --citers/--trace: label clusters from titles")
    p.add_argument("--citers")
    p.add_argument("--trace")
    p.add_argument("--out", required=True)
    _add_manifest(p)
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("sva", help="structural variation analysis")
    p.add_argument("--store", required=True)
    p.add_argument("--net", required=True, help="baseline network artifact")
    p.add_argument("--clusters", required=True, help="baseline partition artifact")
    p.add_argument("--candidates", required=True, help="comma-separated ids or @file")
    p.add_argument("--top", type=int, default=10)
    p.add_argument("--dot", help="also write a styled DOT of candidate links")
    p.add_argument("--out", required=True)
    _add_manifest(p)
    p.set_defaults(func=cmd_sva)

    p = sub.add_parser("overlay", help="compare background and foreground networks")
    p.add_argument("--base", required=True, help="background (expanded-set) network")
    p.add_argument("--fore", required=True, help="foreground (original-set) network")
    p.add_argument("--merged", help="write the union network with overlay classes")
    p.add_argument("--out", required=True)
    _add_manifest(p)
    p.set_defaults(func=cmd_overlay)

    p = sub.add_parser("export", help="render a network artifact")
    p.add_argument("--net", required=True)
    p.add_argument("--clusters")
    p.add_argument("--bursts")
    p.add_argument("--format", choices=exports.FORMATS, required=True)
    p.add_argument("--out")
    _add_manifest(p)
    p.set_defaults(func=cmd_export)

    return parser


def _apply_config(parser: argparse.ArgumentParser, config: dict) -> None:
    """Use config values as defaults; configured flags stop being required.

    Defaults are installed on every subparser as well: subcommands parse
    into a fresh namespace, so top-level defaults alone would be lost.
    """
    defaults = {key.replace("-", "_"): value for key, value in config.items()}
    stack: list[argparse.ArgumentParser] = [parser]
    while stack:
        current = stack.pop()
        current.set_defaults(**defaults)
        for action in current._actions:
            if isinstance(action, argparse._SubParsersAction):
                stack.extend(action.choices.values())
            elif action.dest in defaults:
                action.required = False


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()

    if "--config" in argv:
        config_path = argv[argv.index("--config") + 1]
        try:
            config = json.loads(Path(config_path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            sys.stderr.write(f"cascade: error: cannot read config {config_path}: {exc}\n")
            return 1
        _apply_config(parser, config)

    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except (CascadeError, ArtifactError) as exc:
        sys.stderr.write(f"cascade: error: {exc}\n")
        return 2
    except OSError as exc:
        sys.stderr.write(f"cascade: error: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
