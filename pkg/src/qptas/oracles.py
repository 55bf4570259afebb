"""Exact cost functions and brute-force optimal solvers.

These are the ground truth the test suite measures everything against, plus
the desk-scale plug-in for the low-cost tournament branch.  By default they
read instances through the privileged (uncounted) accessors; solver code that
needs them inside a counted run must pass ``count_queries=True`` so the reads
land on the query counters.
"""

from __future__ import annotations

import numpy as np

from .errors import BudgetExceededError
from .instances import (
    Clustering,
    Constants,
    DESK,
    LabeledGraph,
    Permutation,
    Tournament,
)

__all__ = [
    "kcc_cost",
    "vertex_cost",
    "vertex_cost_table",
    "mfast_cost",
    "mfast_bucket_cost",
    "brute_force_kcc",
    "brute_force_kcc_matrix",
    "brute_force_mfast",
    "brute_force_mfast_matrix",
]


def _pair_view(matrix: np.ndarray) -> np.ndarray:
    iu, ju = np.triu_indices(matrix.shape[0], k=1)
    return matrix[iu, ju]


def kcc_cost(graph: LabeledGraph, clustering: Clustering) -> int:
    """Number of pairs on which the clustering disagrees with the labels."""
    if clustering.n != graph.n:
        raise ValueError("clustering and graph sizes differ")
    adj = graph.label_matrix()
    same = clustering.assign[:, None] == clustering.assign[None, :]
    return int(_pair_view(same ^ adj).sum())


def vertex_cost(graph: LabeledGraph, clustering: Clustering, v: int, j: int) -> int:
    """Cost contributed by v if it were moved to cluster j, all else fixed.

    Equals the missing edges inside the target cluster plus the present edges
    leaving it; summing over vertices at their own clusters double-counts
    every disagreeing pair.
    """
    if not 0 <= j < clustering.k:
        raise ValueError("cluster index out of range")
    adj = graph.label_matrix()
    member = clustering.assign == j
    member = member.copy()
    member[v] = False
    others = ~member
    others[v] = False
    deg_minus = int((member & ~adj[v]).sum())
    degout_plus = int((others & adj[v]).sum())
    return deg_minus + degout_plus


def vertex_cost_table(graph: LabeledGraph, clustering: Clustering) -> np.ndarray:
    """All vertex costs at once: entry (v, j) is ``vertex_cost(v, j)``."""
    adj = graph.label_matrix().astype(np.int64)
    onehot = np.zeros((clustering.n, clustering.k), dtype=np.int64)
    onehot[np.arange(clustering.n), clustering.assign] = 1
    deg_plus = adj @ onehot
    sizes = onehot.sum(axis=0)
    deg_total = adj.sum(axis=1, keepdims=True)
    deg_minus = (sizes[None, :] - onehot) - deg_plus
    degout_plus = deg_total - deg_plus
    return deg_minus + degout_plus


def mfast_cost(tournament: Tournament, pi: Permutation) -> int:
    """Number of arcs pointing backwards under the permutation."""
    if pi.n != tournament.n:
        raise ValueError("permutation and tournament sizes differ")
    arcs = tournament.direction_matrix()
    before = pi.ranks[:, None] < pi.ranks[None, :]
    return int((before & arcs.T).sum())


def mfast_bucket_cost(tournament: Tournament, sigma) -> int:
    """Backward arcs across bucket boundaries; same-bucket pairs cost nothing."""
    buckets = np.asarray(getattr(sigma, "sigma", sigma), dtype=np.intp)
    if buckets.size != tournament.n:
        raise ValueError("bucket order and tournament sizes differ")
    arcs = tournament.direction_matrix()
    before = buckets[:, None] < buckets[None, :]
    return int((before & arcs.T).sum())


# ---------------------------------------------------------------------------
# exhaustive search
# ---------------------------------------------------------------------------


def brute_force_kcc_matrix(
    adj: np.ndarray,
    k: int,
    pair_weight: np.ndarray | None = None,
    budget_bits: float = 24.0,
    chunk: int = 4096,
) -> tuple[np.ndarray, float]:
    """Optimal assignment into at most k clusters by exhaustive enumeration.

    Vertex 0 is pinned to cluster 0 (pure symmetry cut).  Ties break toward
    the lexicographically smallest assignment.  ``pair_weight`` multiplies a
    pair (u,v)'s disagreement by ``w[u]*w[v]``; copies of a vertex (weight)
    never pay against themselves.
    """
    n = adj.shape[0]
    if k < 1:
        raise ValueError("k must be >= 1")
    if n == 0:
        return np.zeros(0, dtype=np.intp), 0.0
    if k == 1:
        assign = np.zeros(n, dtype=np.intp)
        return assign, _weighted_cost(adj, assign, pair_weight)
    if n * np.log2(k) > budget_bits:
        raise BudgetExceededError(
            f"k^n enumeration over budget: {n}*log2({k}) > {budget_bits}"
        )
    w = np.ones(n) if pair_weight is None else np.asarray(pair_weight, dtype=np.float64)
    wa = (w[:, None] * w[None, :]) * adj
    np.fill_diagonal(wa, 0.0)
    total_edges = _pair_view(wa).sum()
    wsq = w * w

    total = k ** (n - 1)
    best_cost = np.inf
    best_assign = None
    powers = k ** np.arange(n - 1)[::-1]  # digit 1 most significant
    for start in range(0, total, chunk):
        idx = np.arange(start, min(start + chunk, total), dtype=np.int64)
        digits = np.zeros((idx.size, n), dtype=np.int8)
        rem = idx.copy()
        for pos in range(n - 1, 0, -1):
            digits[:, pos] = rem % k
            rem //= k
        cost = np.full(idx.size, total_edges)
        for j in range(k):
            x = (digits == j).astype(np.float64)
            s = x @ w
            sq = x @ wsq
            cost += (s * s - sq) / 2.0
            cost -= (x @ wa * x).sum(axis=1)
        pos = int(np.argmin(cost))
        if cost[pos] < best_cost - 1e-9:
            best_cost = float(cost[pos])
            best_assign = digits[pos].astype(np.intp)
    assert best_assign is not None
    del powers
    return best_assign, best_cost


def _weighted_cost(adj: np.ndarray, assign: np.ndarray, w: np.ndarray | None) -> float:
    n = adj.shape[0]
    weights = np.ones(n) if w is None else np.asarray(w, dtype=np.float64)
    ww = weights[:, None] * weights[None, :]
    same = assign[:, None] == assign[None, :]
    disagree = (same ^ adj.astype(bool)).astype(np.float64) * ww
    return float(_pair_view(disagree).sum())


def _read_label_matrix(graph: LabeledGraph, count_queries: bool) -> np.ndarray:
    if not count_queries:
        return np.asarray(graph.label_matrix(), dtype=bool)
    n = graph.n
    iu, ju = np.triu_indices(n, k=1)
    vals = graph.labels(iu, ju)
    adj = np.zeros((n, n), dtype=bool)
    adj[iu, ju] = vals
    adj[ju, iu] = vals
    return adj


def brute_force_kcc(
    graph: LabeledGraph,
    k: int,
    constants: Constants = DESK,
    count_queries: bool = False,
) -> tuple[Clustering, int]:
    """Globally optimal clustering into at most k clusters."""
    if graph.n * np.log2(max(k, 1)) > constants.brute_kcc_budget:
        raise BudgetExceededError(
            f"{graph.n}*log2({k}) exceeds budget {constants.brute_kcc_budget}"
        )
    adj = _read_label_matrix(graph, count_queries)
    assign, cost = brute_force_kcc_matrix(
        adj, k, budget_bits=constants.brute_kcc_budget
    )
    return Clustering(k, assign), int(round(cost))


def brute_force_mfast_matrix(arcs: np.ndarray) -> tuple[np.ndarray, int]:
    """Optimal vertex order by dynamic programming over suffix sets.

    Returns the lexicographically smallest optimal order.
    """
    n = arcs.shape[0]
    in_mask = [0] * n
    for v in range(n):
        m = 0
        for u in range(n):
            if u != v and arcs[u, v]:
                m |= 1 << u
        in_mask[v] = m
    size = 1 << n
    g = [0] * size
    for mask in range(1, size):
        best = None
        rest = mask
        while rest:
            a = (rest & -rest).bit_length() - 1
            rest &= rest - 1
            sub = mask & ~(1 << a)
            cand = (in_mask[a] & sub).bit_count() + g[sub]
            if best is None or cand < best:
                best = cand
        g[mask] = best
    order = []
    mask = size - 1
    while mask:
        rest = mask
        while rest:
            a = (rest & -rest).bit_length() - 1
            rest &= rest - 1
            sub = mask & ~(1 << a)
            if (in_mask[a] & sub).bit_count() + g[sub] == g[mask]:
                order.append(a)
                mask = sub
                break
    return np.array(order, dtype=np.intp), g[size - 1]


def brute_force_mfast(
    tournament: Tournament,
    constants: Constants = DESK,
    count_queries: bool = False,
) -> tuple[Permutation, int]:
    """Globally optimal permutation, for instances under the size cap."""
    n = tournament.n
    if n > constants.mfast_brute_cap:
        raise BudgetExceededError(
            f"n={n} exceeds exhaustive cap {constants.mfast_brute_cap}"
        )
    if count_queries:
        iu, ju = np.triu_indices(n, k=1)
        vals = tournament.directions(iu, ju)
        arcs = np.zeros((n, n), dtype=bool)
        arcs[iu, ju] = vals
        arcs[ju, iu] = ~vals
    else:
        arcs = np.asarray(tournament.direction_matrix(), dtype=bool)
    order, cost = brute_force_mfast_matrix(arcs)
    ranks = np.empty(n, dtype=np.intp)
    ranks[order] = np.arange(n)
    return Permutation(ranks), int(cost)
