"""Systemic risk for open-source ecosystems.

Simulates contributor departures cascading through a joint contributor and
dependency model, ranks contributors and libraries by systemic importance,
and evaluates developer-allocation interventions.
"""

__version__ = "0.1.0"

from .cascade import (  # noqa: F401
    CascadeResult,
    evaluate_topological,
    propagate,
    single_step,
)
from .ingest import (  # noqa: F401
    ContributorRecord,
    EcosystemSnapshot,
    LibraryRecord,
    SnapshotError,
    ValidationReport,
    break_cycles,
    load_snapshot,
    validate_snapshot,
)
from .intervention import (  # noqa: F401
    InterventionConfig,
    InterventionCurve,
    build_surplus,
    cumulative_reduction,
    intervention_sweep,
    rank_libraries,
)
from .metrics import (  # noqa: F401
    ImpactTable,
    RiskVector,
    RtsTable,
    all_contributor_impacts,
    contributor_impact,
    download_weighted_risks,
    library_risks,
    risk_transmission_scores,
    spearman_rank_correlation,
    top_share,
)
from .model import (  # noqa: F401
    EcosystemModel,
    NormalizedContributionMatrix,
    NormalizedDependencyMatrix,
    TopologicalOrder,
    build_contribution_matrix,
    build_dependency_matrix,
    build_model,
    topological_order,
)
from .production import ProductionFunction, failure, survival  # noqa: F401
