"""Expected Force graph analytics: centrality computation and SIR-based evaluation."""

from .graph import (
    Graph,
    RmatParams,
    build_graph,
    cluster_count,
    generate_rmat,
    load_edge_list,
    write_edge_list,
)
from .expected_force import (
    EFResult,
    cluster_degree,
    ef,
    ef_cluster_centric,
    ef_vertex_centric,
    entropy_from_histogram,
    write_ef_csv,
)
from .epidemic import (
    SimConfig,
    SimOutcome,
    SirParams,
    calibrate,
    epidemic_length,
    is_global_outbreak,
    outcome_record,
    run_replicates,
    run_sir,
    spreading_power,
    time_to_peak,
)
from .centrality import (
    CentralityScores,
    betweenness,
    degree_centrality,
    pagerank,
    write_scores_csv,
)
from .analysis import (
    EFBin,
    ExperimentReport,
    correlation_report,
    ef_bins,
    immunization_experiment,
    pearson,
    seeding_experiment,
    timing_report,
    write_report_csv,
    write_report_ndjson,
)

__version__ = "0.1.0"
