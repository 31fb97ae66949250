"""Citation-graph analytics: cascading citation expansion, a search DSL,
co-citation network synthesis, modularity clustering, burst detection, and
structural variation analysis."""

__version__ = "0.1.0"

from .cascade import ExpansionSpec, ExpansionTrace, backward_step, forward_step, run, run_remote
from .conet import (
    ClusterSet,
    CoCitationNetwork,
    SlicePlan,
    build,
    cluster,
    label_clusters,
    largest_component,
    modularity,
    step_frames,
)
from .corpus import (
    CitationStore,
    Publication,
    ValidationIssue,
    citing_of,
    ingest_jsonl,
    references_of,
    validate,
)
from .dslq import DslQuery, Predicate, ResultPage, evaluate, format, parse
from .fetch import FixtureArchive, SourceConfig, citing_query_for, fetch_all, request_page
from .scoremetrics import (
    BurstInterval,
    CohortPercentile,
    ThresholdProfile,
    burst_detect,
    cohort_percentile,
    h_index,
    normalize_filter,
    threshold_profile,
)
from .structvar import (
    OverlayReport,
    SvaCandidate,
    SvaReport,
    candidate_links,
    centrality_divergence,
    delta_modularity,
    overlay,
    sva_run,
)

__all__ = [
    "BurstInterval",
    "CitationStore",
    "ClusterSet",
    "CoCitationNetwork",
    "CohortPercentile",
    "DslQuery",
    "ExpansionSpec",
    "ExpansionTrace",
    "FixtureArchive",
    "OverlayReport",
    "Predicate",
    "Publication",
    "ResultPage",
    "SlicePlan",
    "SourceConfig",
    "SvaCandidate",
    "SvaReport",
    "ThresholdProfile",
    "ValidationIssue",
    "backward_step",
    "build",
    "burst_detect",
    "candidate_links",
    "centrality_divergence",
    "citing_of",
    "citing_query_for",
    "cluster",
    "cohort_percentile",
    "delta_modularity",
    "evaluate",
    "fetch_all",
    "format",
    "forward_step",
    "h_index",
    "ingest_jsonl",
    "label_clusters",
    "largest_component",
    "modularity",
    "normalize_filter",
    "overlay",
    "parse",
    "references_of",
    "request_page",
    "run",
    "run_remote",
    "step_frames",
    "sva_run",
    "threshold_profile",
    "validate",
]
