"""Time-sliced co-citation networks: construction, largest component,
modularity clustering, cluster labeling from citer titles, and per-year
edge frames.

A network is built from a set of citing articles. The analysis window is
cut into fixed-length year slices; within each slice the most-cited
references among that slice's citers become nodes (optionally capped), and
every pair of references co-occurring in one citer's reference list adds 1
to the pair's edge weight. Slice networks are then merged by summing
weights, keeping per-slice provenance on every edge.

Clustering is greedy modularity agglomeration over the weighted graph with
fully deterministic ordering: nodes are processed in id order and ties are
never broken randomly, so identical inputs always give identical
partitions. Cluster ids are assigned by descending cluster size, #0 being
the largest.
"""

from __future__ import annotations

import logging
import math
import re
from collections import Counter, defaultdict
from dataclasses import dataclass, field, replace
from itertools import combinations
from typing import Iterable, Mapping

from .corpus import CitationStore
from .errors import CascadeError

logger = logging.getLogger(__name__)

EdgeKey = tuple[str, str]


def edge_key(u: str, v: str) -> EdgeKey:
    """Canonical unordered pair key; loops are rejected."""
    if u == v:
        raise ValueError(f"self-loop on {u!r}")
    return (u, v) if u < v else (v, u)


@dataclass(frozen=True)
class SlicePlan:
    start_year: int
    end_year: int
    slice_length: int = 1
    per_slice_node_cap: int | None = 50

    def __post_init__(self):
        if self.start_year > self.end_year:
            raise ValueError("start_year must be <= end_year")
        if self.slice_length < 1:
            raise ValueError("slice_length must be >= 1")
        if self.per_slice_node_cap is not None and self.per_slice_node_cap < 1:
            raise ValueError("per_slice_node_cap must be >= 1 or None")

    def slice_start(self, year: int) -> int:
        return self.start_year + ((year - self.start_year) // self.slice_length) * self.slice_length

    def contains(self, year: int) -> bool:
        return self.start_year <= year <= self.end_year


@dataclass
class EdgeData:
    weight: int
    per_slice: dict[int, int] = field(default_factory=dict)
    first_slice: int = 0


@dataclass
class NodeData:
    year: int | None = None
    times_cited: int = 0
    total_cocitations: int = 0


@dataclass
class CoCitationNetwork:
    """Weighted undirected graph over cited references.

    Edges are keyed by the sorted id pair; node/edge provenance classes are
    filled by overlay comparison (original / expansion_only / shared).
    """

    nodes: dict[str, NodeData] = field(default_factory=dict)
    edges: dict[EdgeKey, EdgeData] = field(default_factory=dict)
    node_provenance: dict[str, str] = field(default_factory=dict)
    edge_provenance: dict[EdgeKey, str] = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    def sorted_nodes(self) -> list[str]:
        return sorted(self.nodes)

    def sorted_edges(self) -> list[EdgeKey]:
        return sorted(self.edges)

    def total_weight(self) -> int:
        return sum(e.weight for e in self.edges.values())

    @classmethod
    def from_weighted_edges(
        cls,
        weighted_edges: Iterable[tuple[str, str, int]],
        nodes: Iterable[str] = (),
        slice_year: int = 0,
    ) -> "CoCitationNetwork":
        """Build a bare network from (u, v, weight) triples (tests, tooling)."""
        net = cls()
        for u, v, w in weighted_edges:
            key = edge_key(u, v)
            data = net.edges.get(key)
            if data is None:
                net.edges[key] = EdgeData(weight=w, per_slice={slice_year: w}, first_slice=slice_year)
            else:
                data.weight += w
                data.per_slice[slice_year] = data.per_slice.get(slice_year, 0) + w
        for name in nodes:
            net.nodes.setdefault(name, NodeData())
        for u, v in net.edges:
            net.nodes.setdefault(u, NodeData())
            net.nodes.setdefault(v, NodeData())
        _recompute_cocitation_totals(net)
        return net


@dataclass
class ClusterSet:
    partition: dict[str, int]
    modularity: float
    labels: dict[int, list[str]] = field(default_factory=dict)


def _recompute_cocitation_totals(net: CoCitationNetwork) -> None:
    totals: Counter[str] = Counter()
    for (u, v), data in net.edges.items():
        totals[u] += data.weight
        totals[v] += data.weight
    for name, node in net.nodes.items():
        node.total_cocitations = totals.get(name, 0)


def build(store: CitationStore, citers: Iterable[str], plan: SlicePlan) -> CoCitationNetwork:
    """Co-citation network over the references of the given citing articles.

    Citers must be ingested records; those outside the plan's year window
    are ignored. Within each slice only the `per_slice_node_cap` references
    most cited by that slice's citers become nodes (ties broken by id).
    """
    citer_ids = sorted(set(citers))
    by_slice: defaultdict[int, list[str]] = defaultdict(list)
    for cid in citer_ids:
        pub = store.require(cid)
        if pub.year is None or not plan.contains(pub.year):
            continue
        by_slice[plan.slice_start(pub.year)].append(cid)

    net = CoCitationNetwork(
        meta={
            "start_year": plan.start_year,
            "end_year": plan.end_year,
            "slice_length": plan.slice_length,
            "per_slice_node_cap": plan.per_slice_node_cap,
            "citer_count": sum(len(v) for v in by_slice.values()),
        }
    )

    for slice_start in sorted(by_slice):
        slice_citers = by_slice[slice_start]
        freq: Counter[str] = Counter()
        for cid in slice_citers:
            freq.update(store.records[cid].reference_ids)
        if not freq:
            continue
        ranked = sorted(freq, key=lambda r: (-freq[r], r))
        if plan.per_slice_node_cap is not None:
            ranked = ranked[: plan.per_slice_node_cap]
        selected = set(ranked)

        for name in ranked:
            if name not in net.nodes:
                rec = store.records.get(name)
                net.nodes[name] = NodeData(
                    year=rec.year if rec else None,
                    times_cited=rec.times_cited if rec else 0,
                )

        for cid in slice_citers:
            refs = sorted(r for r in store.records[cid].reference_ids if r in selected)
            for u, v in combinations(refs, 2):
                key = (u, v)
                data = net.edges.get(key)
                if data is None:
                    net.edges[key] = EdgeData(
                        weight=1, per_slice={slice_start: 1}, first_slice=slice_start
                    )
                else:
                    data.weight += 1
                    data.per_slice[slice_start] = data.per_slice.get(slice_start, 0) + 1

    _recompute_cocitation_totals(net)
    return net


def largest_component(net: CoCitationNetwork) -> tuple[CoCitationNetwork, float]:
    """Induced subnetwork on the largest connected component.

    Isolated nodes count as their own components. Ties between equal-sized
    components go to the one containing the smallest id. The fraction is
    component nodes over total nodes (0.0 for an empty network).
    """
    if not net.nodes:
        return CoCitationNetwork(meta=dict(net.meta)), 0.0

    adjacency: defaultdict[str, set[str]] = defaultdict(set)
    for u, v in net.edges:
        adjacency[u].add(v)
        adjacency[v].add(u)

    unvisited = set(net.nodes)
    components: list[set[str]] = []
    for start in net.sorted_nodes():
        if start not in unvisited:
            continue
        comp = {start}
        unvisited.discard(start)
        queue = [start]
        while queue:
            current = queue.pop()
            for neigh in adjacency.get(current, ()):
                if neigh in unvisited:
                    unvisited.discard(neigh)
                    comp.add(neigh)
                    queue.append(neigh)
        components.append(comp)

    best = min(components, key=lambda c: (-len(c), min(c)))
    sub = CoCitationNetwork(meta=dict(net.meta))
    for name in sorted(best):
        sub.nodes[name] = replace(net.nodes[name])
        if name in net.node_provenance:
            sub.node_provenance[name] = net.node_provenance[name]
    for key in net.sorted_edges():
        u, v = key
        if u in best and v in best:
            data = net.edges[key]
            sub.edges[key] = EdgeData(
                weight=data.weight, per_slice=dict(data.per_slice), first_slice=data.first_slice
            )
            if key in net.edge_provenance:
                sub.edge_provenance[key] = net.edge_provenance[key]
    _recompute_cocitation_totals(sub)
    return sub, len(best) / len(net.nodes)


# ---------------------------------------------------------------------------
# modularity and clustering


def modularity(net: CoCitationNetwork, partition: Mapping[str, int]) -> float:
    """Weighted modularity Q = sum_c (e_c/m - (d_c/2m)^2) of a partition.

    e_c sums intra-cluster edge weights (each edge once), d_c sums weighted
    degrees, m is the total edge weight. Zero-weight networks score 0.0.
    """
    m = net.total_weight()
    if m == 0:
        return 0.0
    intra: defaultdict[int, float] = defaultdict(float)
    degree: defaultdict[int, float] = defaultdict(float)
    for key in net.sorted_edges():
        u, v = key
        w = net.edges[key].weight
        cu, cv = partition[u], partition[v]
        if cu == cv:
            intra[cu] += w
        degree[cu] += w
        degree[cv] += w
    q = 0.0
    for c in sorted(degree):
        q += intra.get(c, 0.0) / m - (degree[c] / (2.0 * m)) ** 2
    return q


def _louvain_level(adj: dict[str, dict[str, float]], m: float) -> dict[str, str]:
    """One Louvain pass; returns node -> community label (a member node id).

    Nodes are scanned in id order until no move improves modularity. Ties
    keep the current community, then prefer the smallest community label.
    """
    nodes = sorted(adj)
    community = {v: v for v in nodes}
    # weighted degree; a self-loop counts twice
    k = {v: sum(w for u, w in adj[v].items() if u != v) + 2.0 * adj[v].get(v, 0.0) for v in nodes}
    sigma_tot = dict(k)

    moved = True
    while moved:
        moved = False
        for v in nodes:
            current = community[v]
            link_to: defaultdict[str, float] = defaultdict(float)
            for u, w in adj[v].items():
                if u != v:
                    link_to[community[u]] += w
            sigma_tot[current] -= k[v]

            # staying put is the baseline; a move must strictly improve, and
            # equal-gain candidates never displace an earlier (smaller) label
            best_comm = current
            best_gain = link_to.get(current, 0.0) - sigma_tot[current] * k[v] / (2.0 * m)
            for comm in sorted(link_to):
                if comm == current:
                    continue
                gain = link_to[comm] - sigma_tot[comm] * k[v] / (2.0 * m)
                if gain > best_gain + 1e-12:
                    best_gain = gain
                    best_comm = comm

            sigma_tot[best_comm] += k[v]
            if best_comm != current:
                community[v] = best_comm
                moved = True
    return community


def _aggregate(
    adj: dict[str, dict[str, float]], community: dict[str, str]
) -> dict[str, dict[str, float]]:
    """Collapse communities into single nodes; intra weights become self-loops."""
    # canonical label: smallest member id
    members: defaultdict[str, list[str]] = defaultdict(list)
    for v, c in community.items():
        members[c].append(v)
    canon = {c: min(vs) for c, vs in members.items()}

    agg: dict[str, dict[str, float]] = {canon[c]: {} for c in members}
    for v in sorted(adj):
        cv = canon[community[v]]
        for u, w in adj[v].items():
            cu = canon[community[u]]
            if v == u:
                agg[cv][cv] = agg[cv].get(cv, 0.0) + w
            elif v < u:
                if cv == cu:
                    agg[cv][cv] = agg[cv].get(cv, 0.0) + w
                else:
                    agg[cv][cu] = agg[cv].get(cu, 0.0) + w
                    agg[cu][cv] = agg[cu].get(cv, 0.0) + w
    return agg


def cluster(net: CoCitationNetwork) -> ClusterSet:
    """Partition the network by greedy modularity agglomeration.

    Deterministic: no randomness anywhere, node order fixed by id. Cluster
    ids are assigned by descending size (then smallest member id), so #0 is
    always the largest cluster. The reported Q is evaluated from scratch on
    the final partition.
    """
    if not net.nodes:
        raise CascadeError("cannot cluster an empty network")

    m = float(net.total_weight())
    if m == 0.0:
        assignment = {v: i for i, v in enumerate(net.sorted_nodes())}
        return ClusterSet(partition=assignment, modularity=0.0)

    adj: dict[str, dict[str, float]] = {v: {} for v in net.nodes}
    for (u, v), data in net.edges.items():
        adj[u][v] = adj[u].get(v, 0.0) + float(data.weight)
        adj[v][u] = adj[v].get(u, 0.0) + float(data.weight)

    mapping = {v: v for v in net.nodes}  # original node -> current super-node
    while True:
        community = _louvain_level(adj, m)
        if len(set(community.values())) == len(adj):
            break  # every community is a singleton: no merge happened
        members: defaultdict[str, list[str]] = defaultdict(list)
        for v, c in community.items():
            members[c].append(v)
        canon = {c: min(vs) for c, vs in members.items()}
        mapping = {orig: canon[community[mapping[orig]]] for orig in mapping}
        adj = _aggregate(adj, community)

    groups: defaultdict[str, list[str]] = defaultdict(list)
    for orig, super_node in mapping.items():
        groups[super_node].append(orig)
    ordered = sorted(groups.values(), key=lambda g: (-len(g), min(g)))
    partition = {v: idx for idx, group in enumerate(ordered) for v in group}

    q = modularity(net, partition)
    if q < 0.0:
        # never worse than the trivial one-cluster partition (Q = 0)
        partition = {v: 0 for v in net.nodes}
        q = modularity(net, partition)
    return ClusterSet(partition=partition, modularity=q)


# ---------------------------------------------------------------------------
# cluster labeling

_STOPWORDS = frozenset(
    """
    a an and are as at be been being but by can could do does for from had has
    have how if in into is it its may might more most not of on or our so such
    than that the their them then there these this those to upon via was we
    were what when which while who will with would
    """.split()
)

_TOKEN_RE = re.compile(r"[a-z0-9][a-z0-9\-]*")


def _title_terms(title: str) -> set[str]:
    """Content unigrams and adjacent-content bigrams of a title."""
    tokens = _TOKEN_RE.findall(title.lower())
    terms: set[str] = set()
    for i, tok in enumerate(tokens):
        if tok in _STOPWORDS or tok.isdigit():
            continue
        terms.add(tok)
        if i + 1 < len(tokens):
            nxt = tokens[i + 1]
            if nxt not in _STOPWORDS and not nxt.isdigit():
                terms.add(f"{tok} {nxt}")
    return terms


def _log_likelihood_ratio(k11: int, k12: int, k21: int, k22: int) -> float:
    """Dunning G^2 for a 2x2 contingency table."""
    total = k11 + k12 + k21 + k22
    if total == 0:
        return 0.0

    def term(observed: int, row: int, col: int) -> float:
        if observed == 0:
            return 0.0
        expected = row * col / total
        return observed * math.log(observed / expected)

    r1, r2 = k11 + k12, k21 + k22
    c1, c2 = k11 + k21, k12 + k22
    return 2.0 * (term(k11, r1, c1) + term(k12, r1, c2) + term(k21, r2, c1) + term(k22, r2, c2))


def label_clusters(
    cluster_set: ClusterSet, store: CitationStore, citers: Iterable[str], top_n: int = 3
) -> ClusterSet:
    """Label each cluster with representative terms from its citers' titles.

    A citing article belongs to a cluster's citer set when at least two of
    its references fall in that cluster (it contributes a co-citation edge
    there). Terms are ranked by the log-likelihood ratio of cluster-citer
    document frequency against the full citer set, with frequency and
    phrase length as tie-breakers.
    """
    citer_ids = sorted(set(citers))
    cluster_citers: defaultdict[int, list[str]] = defaultdict(list)
    for cid in citer_ids:
        pub = store.require(cid)
        per_cluster: Counter[int] = Counter()
        for rid in pub.reference_ids:
            if rid in cluster_set.partition:
                per_cluster[cluster_set.partition[rid]] += 1
        for cluster_id, count in per_cluster.items():
            if count >= 2:
                cluster_citers[cluster_id].append(cid)

    title_terms = {cid: _title_terms(store.records[cid].title) for cid in citer_ids}
    corpus_df: Counter[str] = Counter()
    for terms in title_terms.values():
        corpus_df.update(terms)
    n_corpus = len(citer_ids)

    labels: dict[int, list[str]] = {}
    for cluster_id in sorted(set(cluster_set.partition.values())):
        members = cluster_citers.get(cluster_id, [])
        if not members:
            labels[cluster_id] = []
            continue
        cluster_df: Counter[str] = Counter()
        for cid in members:
            cluster_df.update(title_terms[cid])
        n_cluster = len(members)
        scored = []
        for term, k11 in cluster_df.items():
            k12 = corpus_df[term] - k11
            k21 = n_cluster - k11
            k22 = (n_corpus - n_cluster) - k12
            score = _log_likelihood_ratio(k11, k12, k21, k22)
            scored.append((-score, -k11, -len(term.split()), term))
        scored.sort()
        labels[cluster_id] = [entry[3] for entry in scored[:top_n]]

    return ClusterSet(
        partition=dict(cluster_set.partition), modularity=cluster_set.modularity, labels=labels
    )


def step_frames(net: CoCitationNetwork) -> list[tuple[int, list[EdgeKey]]]:
    """Edges grouped by the slice year in which they gained weight.

    An edge appears in every frame whose slice holds positive weight for it;
    frames are ordered by year.
    """
    frames: defaultdict[int, list[EdgeKey]] = defaultdict(list)
    for key in net.sorted_edges():
        for slice_year, weight in net.edges[key].per_slice.items():
            if weight > 0:
                frames[slice_year].append(key)
    return [(year, frames[year]) for year in sorted(frames)]
