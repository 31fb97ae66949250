"""Network export: GraphML, DOT, and the JSON artifact form.

Exports are bit-stable for identical inputs: nodes are written in id order
and edges in sorted pair order. Node attributes: year, times_cited,
total_cocitations, plus cluster id, burst strength, and overlay class when
available. Edge attributes: weight, first_slice, overlay class. In DOT,
expansion-only edges render dashed and original-set edges bold, mirroring
the background/foreground line-style convention.
"""

from __future__ import annotations

from xml.sax.saxutils import escape, quoteattr

from .conet import ClusterSet, CoCitationNetwork, EdgeData, NodeData
from .structvar import OVERLAY_EXPANSION, OVERLAY_ORIGINAL, SvaReport

FORMATS = ("graphml", "dot", "json")


def network_to_jsonable(
    net: CoCitationNetwork,
    clusters: ClusterSet | None = None,
    bursts: dict[str, float] | None = None,
) -> dict:
    nodes = {}
    for name in net.sorted_nodes():
        data = net.nodes[name]
        entry: dict = {
            "year": data.year,
            "times_cited": data.times_cited,
            "total_cocitations": data.total_cocitations,
        }
        if clusters is not None and name in clusters.partition:
            entry["cluster"] = clusters.partition[name]
        if bursts and name in bursts:
            entry["burst"] = bursts[name]
        if name in net.node_provenance:
            entry["overlay"] = net.node_provenance[name]
        nodes[name] = entry
    edges = []
    for key in net.sorted_edges():
        data = net.edges[key]
        entry = {
            "u": key[0],
            "v": key[1],
            "weight": data.weight,
            "per_slice": {str(year): w for year, w in sorted(data.per_slice.items())},
            "first_slice": data.first_slice,
        }
        if key in net.edge_provenance:
            entry["overlay"] = net.edge_provenance[key]
        edges.append(entry)
    return {"schema": "net@1", "nodes": nodes, "edges": edges, "meta": dict(net.meta)}


def network_from_jsonable(doc: dict) -> CoCitationNetwork:
    net = CoCitationNetwork(meta=dict(doc.get("meta", {})))
    for name, entry in doc.get("nodes", {}).items():
        net.nodes[name] = NodeData(
            year=entry.get("year"),
            times_cited=int(entry.get("times_cited", 0)),
            total_cocitations=int(entry.get("total_cocitations", 0)),
        )
        if "overlay" in entry:
            net.node_provenance[name] = entry["overlay"]
    for entry in doc.get("edges", []):
        key = (entry["u"], entry["v"])
        net.edges[key] = EdgeData(
            weight=int(entry["weight"]),
            per_slice={int(y): int(w) for y, w in entry.get("per_slice", {}).items()},
            first_slice=int(entry.get("first_slice", 0)),
        )
        if "overlay" in entry:
            net.edge_provenance[key] = entry["overlay"]
    return net


def clusters_to_jsonable(clusters: ClusterSet) -> dict:
    return {
        "schema": "clusters@1",
        "partition": dict(sorted(clusters.partition.items())),
        "modularity": clusters.modularity,
        "labels": {str(cid): terms for cid, terms in sorted(clusters.labels.items())},
    }


def clusters_from_jsonable(doc: dict) -> ClusterSet:
    return ClusterSet(
        partition={k: int(v) for k, v in doc["partition"].items()},
        modularity=float(doc["modularity"]),
        labels={int(cid): list(terms) for cid, terms in doc.get("labels", {}).items()},
    )


# ---------------------------------------------------------------------------
# GraphML

_GRAPHML_KEYS = (
    ("d_year", "node", "year", "int"),
    ("d_cited", "node", "times_cited", "int"),
    ("d_cocit", "node", "total_cocitations", "int"),
    ("d_cluster", "node", "cluster", "int"),
    ("d_burst", "node", "burst", "double"),
    ("d_noverlay", "node", "overlay", "string"),
    ("d_weight", "edge", "weight", "int"),
    ("d_first", "edge", "first_slice", "int"),
    ("d_eoverlay", "edge", "overlay", "string"),
)


def to_graphml(
    net: CoCitationNetwork,
    clusters: ClusterSet | None = None,
    bursts: dict[str, float] | None = None,
) -> str:
    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        '<graphml xmlns="http://graphml.graphdrawing.org/xmlns">',
    ]
    for key_id, domain, name, kind in _GRAPHML_KEYS:
        lines.append(
            f'  <key id="{key_id}" for="{domain}" attr.name="{name}" attr.type="{kind}"/>'
        )
    lines.append('  <graph edgedefault="undirected">')

    def data(key_id: str, value) -> str:
        return f'      <data key="{key_id}">{escape(str(value))}</data>'

    for name in net.sorted_nodes():
        node = net.nodes[name]
        lines.append(f"    <node id={quoteattr(name)}>")
        if node.year is not None:
            lines.append(data("d_year", node.year))
        lines.append(data("d_cited", node.times_cited))
        lines.append(data("d_cocit", node.total_cocitations))
        if clusters is not None and name in clusters.partition:
            lines.append(data("d_cluster", clusters.partition[name]))
        if bursts and name in bursts:
            lines.append(data("d_burst", repr(bursts[name])))
        if name in net.node_provenance:
            lines.append(data("d_noverlay", net.node_provenance[name]))
        lines.append("    </node>")
    for key in net.sorted_edges():
        edge = net.edges[key]
        lines.append(f"    <edge source={quoteattr(key[0])} target={quoteattr(key[1])}>")
        lines.append(data("d_weight", edge.weight))
        lines.append(data("d_first", edge.first_slice))
        if key in net.edge_provenance:
            lines.append(data("d_eoverlay", net.edge_provenance[key]))
        lines.append("    </edge>")
    lines.append("  </graph>")
    lines.append("</graphml>")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# DOT


def _dot_quote(name: str) -> str:
    return '"' + name.replace("\\", "\\\\").replace('"', '\\"') + '"'


def to_dot(
    net: CoCitationNetwork,
    clusters: ClusterSet | None = None,
    bursts: dict[str, float] | None = None,
) -> str:
    lines = ["graph cocitation {"]
    for name in net.sorted_nodes():
        node = net.nodes[name]
        attrs = []
        if node.year is not None:
            attrs.append(f"year={node.year}")
        attrs.append(f"times_cited={node.times_cited}")
        attrs.append(f"total_cocitations={node.total_cocitations}")
        if clusters is not None and name in clusters.partition:
            attrs.append(f"cluster={clusters.partition[name]}")
        if bursts and name in bursts:
            attrs.append(f"burst={bursts[name]!r}")
        if name in net.node_provenance:
            attrs.append(f"overlay={net.node_provenance[name]}")
        lines.append(f"  {_dot_quote(name)} [{', '.join(attrs)}];")
    for key in net.sorted_edges():
        edge = net.edges[key]
        attrs = [f"weight={edge.weight}", f"first_slice={edge.first_slice}"]
        cls = net.edge_provenance.get(key)
        if cls is not None:
            attrs.append(f"overlay={cls}")
            if cls == OVERLAY_EXPANSION:
                attrs.append("style=dashed")
            elif cls == OVERLAY_ORIGINAL:
                attrs.append("style=bold")
        lines.append(f"  {_dot_quote(key[0])} -- {_dot_quote(key[1])} [{', '.join(attrs)}];")
    lines.append("}")
    return "\n".join(lines) + "\n"


def sva_to_dot(baseline: CoCitationNetwork, report: SvaReport) -> str:
    """Baseline plus top-candidate links: novel dashed, existing solid."""
    lines = ["graph sva {"]
    for name in baseline.sorted_nodes():
        lines.append(f"  {_dot_quote(name)};")
    for key in baseline.sorted_edges():
        lines.append(
            f"  {_dot_quote(key[0])} -- {_dot_quote(key[1])} "
            f"[weight={baseline.edges[key].weight}, color=gray];"
        )
    for candidate in report.top:
        tag = _dot_quote(candidate.article_id)
        for u, v in candidate.existing_links:
            lines.append(
                f"  {_dot_quote(u)} -- {_dot_quote(v)} [style=solid, color=purple, source={tag}];"
            )
        for u, v in candidate.novel_links:
            lines.append(
                f"  {_dot_quote(u)} -- {_dot_quote(v)} [style=dashed, color=red, source={tag}];"
            )
    lines.append("}")
    return "\n".join(lines) + "\n"


def render(
    net: CoCitationNetwork,
    fmt: str,
    clusters: ClusterSet | None = None,
    bursts: dict[str, float] | None = None,
) -> str:
    from .artifacts import dumps_canonical

    if fmt == "graphml":
        return to_graphml(net, clusters, bursts)
    if fmt == "dot":
        return to_dot(net, clusters, bursts)
    if fmt == "json":
        return dumps_canonical(network_to_jsonable(net, clusters, bursts))
    raise ValueError(f"unknown export format {fmt!r}; expected one of {FORMATS}")
