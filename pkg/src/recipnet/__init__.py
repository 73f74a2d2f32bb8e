"""Reciprocal preferential attachment networks: simulation and analysis.

A directed graph grows one node and one edge per step, attaching by
degree preference with offset delta; the receiving side reciprocates
instantaneously with a probability depending on both endpoints'
behavioral groups. This package simulates the graph, solves the limiting
edge-fraction fixed point, samples the limiting joint in/out-degree law
through a branching-process embedding, and verifies the predicted
power-law tail indices and ray concentration empirically.
"""

from .params import (
    BadDimensions,
    BadSimplex,
    GroupRates,
    ModelParams,
    NonPositiveDelta,
    NonProbability,
    ParameterError,
    group_rates,
    validate_params,
)
from .spectral import GroupOrder, GroupSpectral, all_spectra, order_groups, spectral
from .equilibrium import (
    ContractionReport,
    EquilibriumSolution,
    HReport,
    NoConvergence,
    RegularityReport,
    build_jstar,
    check_regularity,
    fixed_point_map,
    h_and_lambda,
    power_iteration,
    solve_equilibrium,
)
from .simulate import (
    DegreeHistogram,
    EdgeRecord,
    GraphState,
    ResourceLimit,
    SimConfig,
    SimResult,
    Trajectory,
    degree_histogram,
    init_graph,
    run,
    step,
)
from .branching import (
    EventBudgetExceeded,
    JointPmfEstimate,
    LimitPairSampler,
    MbiState,
    estimate_pkl,
    sample_limit_pair,
    sample_limit_pairs,
    simulate_mbi,
    simulate_mbi_batch,
)
from .embedding import (
    EmbeddingChainState,
    EnumerationTooLarge,
    EquivalenceReport,
    embedding_chain,
    enumerate_graph_law,
    verify_equivalence,
)
from .tails import (
    ConditionsUnmet,
    DegenerateTail,
    DegreeDataset,
    EmptySelection,
    GridMismatch,
    HillReport,
    HrvReport,
    InsufficientData,
    NonPositiveValues,
    PeelOptions,
    TailReport,
    angular_transform,
    compare_pmf,
    hill_estimator,
    hrv_peel,
    ray_distance,
    tail_report,
)

__version__ = "0.1.0"
