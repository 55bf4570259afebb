"""Low-cost clustering scheme and the low/high dispatcher.

Every vertex goes to its argmin estimated cluster; clusters big enough to
trust are frozen and the union of the small ones is re-solved with one fewer
slot and a slightly tightened accuracy target.  Each level below the top runs
the full dispatcher again, so the high-cost test happens at every recursion
node.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .estimator import CostTable, draw_pair_sample, estimate_vertex_costs, _read_submatrix
from .high_cost import _kcc_high_assign
from .instances import Clustering, Constants, DESK, LabeledGraph, derive_seed
from .oracles import brute_force_kcc_matrix
from .reports import LevelRecord, SolveReport

__all__ = [
    "CostlySet",
    "costly_set",
    "kcc_low_ptas",
    "estimate_solution_cost",
    "dispatch_kcc",
]


@dataclass(frozen=True)
class CostlySet:
    """Vertices whose best estimated slot still looks expensive."""

    vertices: np.ndarray
    threshold: float


def costly_set(table: CostTable, constants: Constants = DESK) -> CostlySet:
    """Vertices with min_j estimated cost at or above c3*n/k^2."""
    threshold = constants.c3 * table.n / table.k**2
    verts = table.vertices[table.min_cost() >= threshold]
    return CostlySet(vertices=verts, threshold=threshold)


def _brute_assign(
    graph: LabeledGraph, ids: np.ndarray, k: int, constants: Constants
) -> np.ndarray:
    sub = _read_submatrix(graph, ids)
    assign, _ = brute_force_kcc_matrix(sub, k, budget_bits=constants.brute_kcc_budget)
    return assign


def _low_assign(
    graph: LabeledGraph,
    ids: np.ndarray,
    k: int,
    eps: float,
    constants: Constants,
    seed: int,
    trace: list[LevelRecord],
    dispatch_levels: bool,
) -> np.ndarray:
    n = ids.size
    if k == 1 or n == 0:
        trace.append(LevelRecord(n, k, eps, constants.beta(eps, max(k, 1)), k, [n], 0, 0))
        return np.zeros(n, dtype=np.intp)
    beta = constants.beta(eps, k)
    raw0, dedup0 = graph.queries.snapshot()
    table = estimate_vertex_costs(
        graph, k, beta, constants, derive_seed(seed, "estimate"), vertices=ids
    )
    raw_assign = table.assignment()
    sizes = np.bincount(raw_assign, minlength=k)
    order = np.lexsort((np.arange(k), -sizes))
    sorted_sizes = sizes[order]
    ell = int((sorted_sizes >= n / (2 * k)).sum())
    rank_of = np.empty(k, dtype=np.intp)
    rank_of[order] = np.arange(k)
    relabeled = rank_of[raw_assign]
    raw1, dedup1 = graph.queries.snapshot()
    trace.append(
        LevelRecord(
            n, k, eps, beta, ell, sorted_sizes.tolist(), raw1 - raw0, dedup1 - dedup0
        )
    )

    assign = relabeled.copy()
    rest_pos = np.flatnonzero(relabeled >= ell)
    if ell >= k or rest_pos.size == 0:
        return assign
    rest_ids = ids[rest_pos]
    k_rest = k - ell
    sub_eps = eps * (1.0 - 1.0 / k)
    if k_rest == 1:
        rest_assign = np.zeros(rest_pos.size, dtype=np.intp)
    elif rest_pos.size <= constants.base_n:
        rest_assign = _brute_assign(graph, rest_ids, k_rest, constants)
    elif dispatch_levels:
        rest_assign, _, _ = _dispatch_assign(
            graph, rest_ids, k_rest, sub_eps, constants, derive_seed(seed, "recurse"), trace
        )
    else:
        rest_assign = _low_assign(
            graph, rest_ids, k_rest, sub_eps, constants, derive_seed(seed, "recurse"),
            trace, dispatch_levels,
        )
    assign[rest_pos] = ell + rest_assign
    return assign


def kcc_low_ptas(
    graph: LabeledGraph,
    k: int,
    eps: float,
    constants: Constants = DESK,
    seed: int = 0,
    trace: list[LevelRecord] | None = None,
) -> Clustering:
    """Clustering for instances assumed low-cost (caller's responsibility).

    Recursion below the top level re-enters the dispatcher, so lower levels
    still test for the high-cost regime.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    if not 1 <= k:
        raise ValueError("k must be >= 1")
    levels = trace if trace is not None else []
    assign = _low_assign(
        graph, np.arange(graph.n), k, eps, constants, seed, levels, dispatch_levels=True
    )
    return Clustering(k, assign)


def _estimate_assign_cost(
    graph: LabeledGraph,
    ids: np.ndarray,
    assign_pos: np.ndarray,
    additive_target: float,
    constants: Constants,
    seed: int,
) -> float:
    n = ids.size
    total_pairs = n * (n - 1) // 2
    if total_pairs == 0:
        return 0.0
    q = math.ceil(constants.sample_multiplier * math.log(max(n, 2)) / additive_target**2)
    if q >= total_pairs:
        iu, ju = np.triu_indices(n, k=1)
        labels = graph.labels(ids[iu], ids[ju])
        same = assign_pos[iu] == assign_pos[ju]
        return float((same ^ labels).sum())
    iu, ju = draw_pair_sample(n, q, derive_seed(seed, "pairs"))
    labels = graph.labels(ids[iu], ids[ju])
    same = assign_pos[iu] == assign_pos[ju]
    return float(total_pairs) * float((same ^ labels).mean())


def estimate_solution_cost(
    graph: LabeledGraph,
    clustering: Clustering,
    additive_target: float,
    constants: Constants = DESK,
    seed: int = 0,
) -> float:
    """Disagreement count estimated from sampled pairs.

    ``additive_target`` is the tolerated absolute error as a fraction of n^2;
    a sample covering every pair degenerates to the exact count.
    """
    if additive_target <= 0:
        raise ValueError("additive_target must be positive")
    return _estimate_assign_cost(
        graph,
        np.arange(graph.n),
        clustering.assign,
        additive_target,
        constants,
        seed,
    )


def _dispatch_assign(
    graph: LabeledGraph,
    ids: np.ndarray,
    k: int,
    eps: float,
    constants: Constants,
    seed: int,
    trace: list[LevelRecord],
) -> tuple[np.ndarray, str, float | None]:
    n = ids.size
    if k == 1 or n <= 1:
        trace.append(LevelRecord(n, k, eps, constants.beta(eps, max(k, 1)), k, [n], 0, 0))
        return np.zeros(n, dtype=np.intp), "low", None
    gamma = constants.q_threshold(eps, k)
    high_assign, _records = _kcc_high_assign(
        graph, ids, k, eps, gamma, constants, None, derive_seed(seed, "high")
    )
    est = _estimate_assign_cost(
        graph, ids, high_assign, gamma, constants, derive_seed(seed, "estimate")
    )
    if est >= gamma * n * n:
        return high_assign, "high", est
    low = _low_assign(
        graph, ids, k, eps, constants, derive_seed(seed, "low"), trace, dispatch_levels=True
    )
    return low, "low", est


def dispatch_kcc(
    graph: LabeledGraph,
    k: int,
    eps: float,
    constants: Constants = DESK,
    seed: int = 0,
) -> tuple[Clustering, SolveReport]:
    """Full solve: run the high-cost pipeline, estimate its cost, branch.

    The report carries the branch, the high-candidate cost estimate, both
    query counters for the whole run, and the per-level recursion trace.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    raw0, dedup0 = graph.queries.snapshot()
    trace: list[LevelRecord] = []
    assign, branch, est = _dispatch_assign(
        graph, np.arange(graph.n), k, eps, constants, seed, trace
    )
    raw1, dedup1 = graph.queries.snapshot()
    report = SolveReport(
        problem="kcc",
        n=graph.n,
        k=k,
        eps=eps,
        branch=branch,
        cost_estimate=est,
        cost_exact=None,
        queries_raw=raw1 - raw0,
        queries_dedup=dedup1 - dedup0,
        seed=seed,
        trace=trace,
    )
    return Clustering(k, assign), report
