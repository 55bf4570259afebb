"""Query-efficient approximation schemes for two pairwise-label problems:
clustering into at most k parts under edge/non-edge disagreements, and
ordering tournament vertices to minimize backward arcs.  All input access
runs through query-counting oracles so approximation quality and query
footprint are both measurable against brute-force ground truth.
"""

from .errors import (
    BudgetExceededError,
    DuplicatePairError,
    EmptyCandidateError,
    InstanceFormatError,
    InvariantError,
    LpInfeasibleError,
    MalformedHeaderError,
    MissingPairError,
    PlanBudgetError,
    SelfLoopError,
    SimplexCycleError,
    UnknownConstantError,
)
from .instances import (
    Clustering,
    Constants,
    DESK,
    GroundTruth,
    LabeledGraph,
    MultiSample,
    Permutation,
    THEOREM_GRADE,
    Tournament,
    derive_seed,
    gen_planted_clustering,
    gen_planted_tournament,
    load_ground_truth,
    load_instance,
    query_direction,
    query_directions,
    query_label,
    query_labels,
    save_ground_truth,
    save_instance,
    transitive_tournament,
)
from .oracles import (
    brute_force_kcc,
    brute_force_mfast,
    kcc_cost,
    mfast_bucket_cost,
    mfast_cost,
    vertex_cost,
    vertex_cost_table,
)
from .estimator import (
    ClusterAlignment,
    CostTable,
    align_clusterings,
    draw_sample,
    estimate_vertex_costs,
    sample_degree_profile,
)
from .bucket import (
    BucketOrder,
    SampleEnsemble,
    bucket_from_permutation,
    cost_from_ensemble,
    cost_from_sample,
    extend_to_permutation,
    make_ensemble,
    move_vertex,
    pair_cost,
    vertex_cost_from_ensemble,
    vertex_cost_from_sample,
)
from .lp import (
    FractionalSolution,
    LpModel,
    LpRow,
    build_lp,
    build_lp_clustering,
    certify_rounding,
    repair_balance,
    round_assignment,
    round_lp,
    simplex_two_phase,
    solve_lp,
)
from .high_cost import (
    CandidateRecord,
    EnumerationPlan,
    dispatch_mfast,
    estimate_permutation_cost,
    kcc_high_ptas,
    mfast_high_ptas,
    pipeline_sizes,
)
from .kcc_ptas import (
    CostlySet,
    costly_set,
    dispatch_kcc,
    estimate_solution_cost,
    kcc_low_ptas,
)
from .reports import LevelRecord, SolveReport

__version__ = "0.1.0"
