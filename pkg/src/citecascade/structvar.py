"""Structural variation analysis and original-vs-expanded overlay comparison.

Overlay classification compares a background network (built from the
expanded set) against a foreground network (built from the original set):
elements in both are `shared`, foreground-only elements are `original`,
background-only elements are `expansion_only`.

SVA scores candidate citing articles by how much the co-citation links they
would introduce restructure a fixed baseline: the modularity change under
the frozen baseline partition, and the Kullback-Leibler divergence between
the baseline's betweenness-centrality distributions after and before adding
the candidate's novel links (epsilon-smoothed, unweighted shortest paths).
Candidates are ranked by absolute modularity change.
"""

from __future__ import annotations

import logging
import math
import statistics
from collections import defaultdict
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Mapping, Sequence

import networkx as nx

from .conet import ClusterSet, CoCitationNetwork, EdgeData, EdgeKey, NodeData, edge_key
from .corpus import CitationStore, references_of

logger = logging.getLogger(__name__)

KL_EPSILON = 1e-9

OVERLAY_SHARED = "shared"
OVERLAY_ORIGINAL = "original"
OVERLAY_EXPANSION = "expansion_only"


@dataclass
class OverlayReport:
    node_classes: dict[str, str]
    edge_classes: dict[EdgeKey, str]
    node_counts: dict[str, int]
    edge_counts: dict[str, int]


@dataclass(frozen=True)
class SvaCandidate:
    article_id: str
    novel_links: tuple[EdgeKey, ...]
    existing_links: tuple[EdgeKey, ...]
    delta_q: float
    centrality_divergence: float
    times_cited: int
    in_baseline: bool


@dataclass
class SvaReport:
    candidates: list[SvaCandidate]
    top_n: int = 10
    correlation_r: float | None = None

    @property
    def top(self) -> list[SvaCandidate]:
        return self.candidates[: self.top_n]


def _classify(in_base: bool, in_fore: bool) -> str:
    if in_base and in_fore:
        return OVERLAY_SHARED
    return OVERLAY_ORIGINAL if in_fore else OVERLAY_EXPANSION


def overlay(base: CoCitationNetwork, fore: CoCitationNetwork) -> OverlayReport:
    """Classify nodes and edges of the background/foreground pair.

    Classes are also written into both networks' provenance maps (each for
    the elements it contains) so exports can style them.
    """
    node_classes: dict[str, str] = {}
    for name in sorted(set(base.nodes) | set(fore.nodes)):
        node_classes[name] = _classify(name in base.nodes, name in fore.nodes)
    edge_classes: dict[EdgeKey, str] = {}
    for key in sorted(set(base.edges) | set(fore.edges)):
        edge_classes[key] = _classify(key in base.edges, key in fore.edges)

    for net in (base, fore):
        for name in net.nodes:
            net.node_provenance[name] = node_classes[name]
        for key in net.edges:
            net.edge_provenance[key] = edge_classes[key]

    def counts(classes: Mapping) -> dict[str, int]:
        out = {OVERLAY_SHARED: 0, OVERLAY_ORIGINAL: 0, OVERLAY_EXPANSION: 0}
        for cls in classes.values():
            out[cls] += 1
        return out

    return OverlayReport(
        node_classes=node_classes,
        edge_classes=edge_classes,
        node_counts=counts(node_classes),
        edge_counts=counts(edge_classes),
    )


def merge_overlay(base: CoCitationNetwork, fore: CoCitationNetwork) -> CoCitationNetwork:
    """Union network with overlay provenance set; for styled exports."""
    report = overlay(base, fore)
    merged = CoCitationNetwork(meta={"overlay": True})
    for source in (base, fore):
        for name in source.sorted_nodes():
            if name not in merged.nodes:
                data = source.nodes[name]
                merged.nodes[name] = NodeData(
                    year=data.year,
                    times_cited=data.times_cited,
                    total_cocitations=data.total_cocitations,
                )
        for key in source.sorted_edges():
            if key not in merged.edges:
                data = source.edges[key]
                merged.edges[key] = EdgeData(
                    weight=data.weight,
                    per_slice=dict(data.per_slice),
                    first_slice=data.first_slice,
                )
    merged.node_provenance = dict(report.node_classes)
    merged.edge_provenance = dict(report.edge_classes)
    return merged


def candidate_links(
    store: CitationStore, article_id: str, baseline: CoCitationNetwork
) -> tuple[list[EdgeKey], list[EdgeKey]]:
    """(novel, existing) reference pairs of an article over baseline nodes.

    Only references that are baseline nodes participate; pairs present as
    baseline edges are existing, the rest novel. Articles with fewer than
    two baseline-resident references yield two empty lists.
    """
    refs = sorted(set(references_of(store, article_id)) & set(baseline.nodes))
    novel: list[EdgeKey] = []
    existing: list[EdgeKey] = []
    for u, v in combinations(refs, 2):
        key = edge_key(u, v)
        (existing if key in baseline.edges else novel).append(key)
    return novel, existing


# ---------------------------------------------------------------------------
# modularity change


def _partition_accumulators(
    baseline: CoCitationNetwork, partition: Mapping[str, int]
) -> tuple[float, dict[int, float], dict[int, float]]:
    """Total weight m plus per-cluster intra weight and weighted degree."""
    m = float(baseline.total_weight())
    intra: defaultdict[int, float] = defaultdict(float)
    degree: defaultdict[int, float] = defaultdict(float)
    for key in baseline.sorted_edges():
        u, v = key
        w = float(baseline.edges[key].weight)
        cu, cv = partition[u], partition[v]
        if cu == cv:
            intra[cu] += w
        degree[cu] += w
        degree[cv] += w
    return m, dict(intra), dict(degree)


def _q_from_accumulators(m: float, intra: Mapping[int, float], degree: Mapping[int, float]) -> float:
    if m == 0.0:
        return 0.0
    q = 0.0
    for c in sorted(degree):
        q += intra.get(c, 0.0) / m - (degree[c] / (2.0 * m)) ** 2
    return q


def _delta_q(
    m: float,
    intra: Mapping[int, float],
    degree: Mapping[int, float],
    partition: Mapping[str, int],
    novel: Sequence[EdgeKey],
) -> float:
    """Q(baseline) - Q(baseline + novel links at weight 1), partition fixed."""
    if not novel:
        return 0.0
    q_before = _q_from_accumulators(m, intra, degree)
    intra2 = dict(intra)
    degree2 = dict(degree)
    for u, v in novel:
        cu, cv = partition[u], partition[v]
        if cu == cv:
            intra2[cu] = intra2.get(cu, 0.0) + 1.0
        degree2[cu] = degree2.get(cu, 0.0) + 1.0
        degree2[cv] = degree2.get(cv, 0.0) + 1.0
    q_after = _q_from_accumulators(m + len(novel), intra2, degree2)
    return q_before - q_after


def delta_modularity(
    baseline: CoCitationNetwork, partition: ClusterSet | Mapping[str, int], novel: Sequence[EdgeKey]
) -> float:
    """Modularity drop caused by adding the novel links at weight 1.

    The baseline partition is held fixed; positive values mean the links
    bridge clusters. Cluster accumulators are updated incrementally rather
    than rescanning the augmented graph.
    """
    assignment = partition.partition if isinstance(partition, ClusterSet) else partition
    m, intra, degree = _partition_accumulators(baseline, assignment)
    return _delta_q(m, intra, degree, assignment, novel)


# ---------------------------------------------------------------------------
# centrality divergence


def _baseline_graph(baseline: CoCitationNetwork) -> nx.Graph:
    graph = nx.Graph()
    graph.add_nodes_from(baseline.sorted_nodes())
    graph.add_edges_from(baseline.sorted_edges())
    return graph


def _kl_divergence(p_weights: Sequence[float], q_weights: Sequence[float]) -> float:
    p_total = sum(p_weights)
    q_total = sum(q_weights)
    div = 0.0
    for pw, qw in zip(p_weights, q_weights):
        p = pw / p_total
        q = qw / q_total
        div += p * math.log(p / q)
    return div if div > 0.0 else 0.0


def _divergence_on(
    graph: nx.Graph, before: Mapping[str, float], novel: Sequence[EdgeKey]
) -> float:
    augmented = graph.copy()
    augmented.add_edges_from(novel)
    after = nx.betweenness_centrality(augmented, normalized=False)
    nodes = sorted(graph.nodes)
    return _kl_divergence(
        [after[v] + KL_EPSILON for v in nodes], [before[v] + KL_EPSILON for v in nodes]
    )


def centrality_divergence(baseline: CoCitationNetwork, novel: Sequence[EdgeKey]) -> float:
    """KL divergence of betweenness distributions after vs before novel links.

    Betweenness uses the unweighted view of the baseline; distributions are
    epsilon-smoothed before normalization. Always >= 0; exactly 0.0 for an
    empty novel list.
    """
    if not novel:
        return 0.0
    graph = _baseline_graph(baseline)
    before = nx.betweenness_centrality(graph, normalized=False)
    return _divergence_on(graph, before, novel)


def sva_run(
    store: CitationStore,
    citer_candidates: Iterable[str],
    baseline: CoCitationNetwork,
    partition: ClusterSet,
    top_n: int = 10,
) -> SvaReport:
    """Score candidate articles against a fixed baseline network + partition.

    Ranking is by absolute modularity change (descending), then id. The
    correlation is Pearson's r between centrality divergence and the
    candidate's global citation count, over candidates with positive
    divergence; it is undefined (None) below 3 qualifying candidates or
    under zero variance.
    """
    assignment = partition.partition
    m, intra, degree = _partition_accumulators(baseline, assignment)
    graph = _baseline_graph(baseline)
    before = nx.betweenness_centrality(graph, normalized=False)

    candidates: list[SvaCandidate] = []
    for article_id in sorted(set(citer_candidates)):
        pub = store.require(article_id)
        novel, existing = candidate_links(store, article_id, baseline)
        delta = _delta_q(m, intra, degree, assignment, novel)
        divergence = _divergence_on(graph, before, novel) if novel else 0.0
        candidates.append(
            SvaCandidate(
                article_id=article_id,
                novel_links=tuple(novel),
                existing_links=tuple(existing),
                delta_q=delta,
                centrality_divergence=divergence,
                times_cited=pub.times_cited,
                in_baseline=article_id in baseline.nodes,
            )
        )

    candidates.sort(key=lambda c: (-abs(c.delta_q), c.article_id))

    qualifying = [c for c in candidates if c.centrality_divergence > 0.0]
    correlation = None
    if len(qualifying) >= 3:
        try:
            correlation = statistics.correlation(
                [c.centrality_divergence for c in qualifying],
                [float(c.times_cited) for c in qualifying],
            )
        except statistics.StatisticsError:
            logger.warning("correlation undefined: zero variance among qualifying candidates")
    return SvaReport(candidates=candidates, top_n=top_n, correlation_r=correlation)
