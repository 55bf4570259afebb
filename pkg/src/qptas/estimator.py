"""Additive vertex-cost estimation from a clustered random sample.

Draw a multiset of vertices, cluster the induced (multiplicity-weighted)
subgraph optimally, then score every vertex of the instance against the
sample clusters.  The scaled scores approximate each vertex's cost toward
every cluster slot, which is all the low-cost clustering scheme consumes.
All input reads go through the counting accessors.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .errors import BudgetExceededError
from .instances import (
    Clustering,
    Constants,
    DESK,
    LabeledGraph,
    MultiSample,
    derive_seed,
)
from .oracles import brute_force_kcc_matrix

__all__ = [
    "CostTable",
    "ClusterAlignment",
    "draw_sample",
    "draw_pair_sample",
    "estimate_vertex_costs",
    "align_clusterings",
    "sample_degree_profile",
]


@dataclass(frozen=True)
class CostTable:
    """Estimated cost of every vertex against every cluster slot.

    ``tcost[row, j]`` scales the multiplicity-weighted disagreement counts by
    n/|S|, so entries live on the same scale as exact vertex costs and never
    exceed n.
    """

    k: int
    vertices: np.ndarray
    tcost: np.ndarray
    sample: MultiSample
    sample_members: np.ndarray
    member_assign: np.ndarray

    @property
    def n(self) -> int:
        return self.vertices.size

    def assignment(self) -> np.ndarray:
        """Argmin cluster per row; ties go to the lowest index."""
        return np.argmin(self.tcost, axis=1)

    def min_cost(self) -> np.ndarray:
        return self.tcost.min(axis=1)

    def to_text(self) -> str:
        lines = [
            " ".join(f"{x:.6g}" for x in row)
            for row in self.tcost
        ]
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class ClusterAlignment:
    """Index matching between two k-clusterings of the same vertex set."""

    mapping: np.ndarray
    good: frozenset
    bad: frozenset
    defects: np.ndarray

    def max_defect(self) -> int:
        return int(self.defects.max()) if self.defects.size else 0


def draw_sample(n: int, size: int, seed: int) -> MultiSample:
    """I.i.d. uniform vertex draws with repetitions, reproducible per seed."""
    if size < 1:
        raise ValueError("sample size must be >= 1")
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    return MultiSample(items=rng.integers(0, n, size=size), seed=seed)


def draw_pair_sample(n: int, q: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """q unordered pairs drawn uniformly with repetitions."""
    iu, ju = np.triu_indices(n, k=1)
    rng = np.random.default_rng(seed)
    pick = rng.integers(0, iu.size, size=q)
    return iu[pick], ju[pick]


def _local_search_assign(
    adj: np.ndarray,
    weights: np.ndarray,
    k: int,
    seed: int,
    restarts: int,
    sweeps: int,
) -> np.ndarray:
    """Best-move local search for the weighted disagreement objective.

    Deterministic given the seed; several random restarts, first best kept.
    """
    n = adj.shape[0]
    rng = np.random.default_rng(seed)
    wadj = adj * weights[None, :]
    wtotal = wadj.sum(axis=1)
    best_assign = None
    best_cost = np.inf
    for _ in range(max(1, restarts)):
        assign = rng.integers(0, k, size=n)
        onehot = np.zeros((n, k))
        onehot[np.arange(n), assign] = weights
        cluster_w = onehot.sum(axis=0)
        for _ in range(max(1, sweeps)):
            moved = False
            for v in range(n):
                inside = wadj[v] @ (onehot > 0)
                sizes = cluster_w.copy()
                sizes[assign[v]] -= weights[v]
                cost_j = (sizes - inside) + (wtotal[v] - inside)
                j = int(np.argmin(cost_j))
                if j != assign[v]:
                    onehot[v, assign[v]] = 0.0
                    onehot[v, j] = weights[v]
                    cluster_w[assign[v]] -= weights[v]
                    cluster_w[j] += weights[v]
                    assign[v] = j
                    moved = True
            if not moved:
                break
        cost = _weighted_disagreement(adj, assign, weights)
        if cost < best_cost - 1e-9:
            best_cost = cost
            best_assign = assign.copy()
    assert best_assign is not None
    return best_assign.astype(np.intp)


def _weighted_disagreement(adj: np.ndarray, assign: np.ndarray, w: np.ndarray) -> float:
    same = assign[:, None] == assign[None, :]
    ww = w[:, None] * w[None, :]
    dis = (same ^ adj.astype(bool)) * ww
    iu, ju = np.triu_indices(adj.shape[0], k=1)
    return float(dis[iu, ju].sum())


def _read_submatrix(graph: LabeledGraph, members: np.ndarray) -> np.ndarray:
    """Counted read of all pairs among ``members``; returns a dense block."""
    d = members.size
    sub = np.zeros((d, d), dtype=bool)
    if d >= 2:
        iu, ju = np.triu_indices(d, k=1)
        vals = graph.labels(members[iu], members[ju])
        sub[iu, ju] = vals
        sub[ju, iu] = vals
    return sub


def estimate_vertex_costs(
    graph: LabeledGraph,
    k: int,
    beta: float,
    constants: Constants = DESK,
    seed: int = 0,
    vertices: np.ndarray | None = None,
    full_sample: bool = False,
    sample_solver: str = "auto",
) -> CostTable:
    """Scaled per-vertex, per-cluster cost estimates from one clustered sample.

    The sample size is ``min(c * ln(n) * beta**-t_exponent, t_cap, 10n)``.
    The collapsed sample subgraph is clustered exactly when the enumeration
    fits ``sample_enum_budget`` bits; otherwise ``sample_solver`` decides:
    ``auto`` falls back to seeded local search, ``exact`` raises.  With
    ``full_sample=True`` the sample is every vertex once, which reproduces
    exact vertex costs against the optimal clustering.
    """
    if beta <= 0:
        raise ValueError("beta must be positive")
    if k < 1:
        raise ValueError("k must be >= 1")
    ids = np.arange(graph.n) if vertices is None else np.asarray(vertices, dtype=np.intp)
    n = ids.size
    if full_sample:
        sample = MultiSample(items=ids.copy(), seed=-1)
    else:
        positions = draw_sample(n, constants.sample_size(n, beta), derive_seed(seed, "sample"))
        sample = MultiSample(items=ids[positions.items], seed=positions.seed)
    members, mult = sample.multiplicities()
    d = members.size
    t = len(sample)

    sub = _read_submatrix(graph, members)
    weights = mult.astype(np.float64)
    if k == 1:
        member_assign = np.zeros(d, dtype=np.intp)
    elif d * np.log2(k) <= constants.sample_enum_budget:
        member_assign, _ = brute_force_kcc_matrix(
            sub, k, pair_weight=weights, budget_bits=constants.sample_enum_budget
        )
    elif sample_solver == "exact":
        raise BudgetExceededError(
            f"sample clustering enumeration over budget: {d}*log2({k})"
            f" > {constants.sample_enum_budget}"
        )
    else:
        member_assign = _local_search_assign(
            sub,
            weights,
            k,
            derive_seed(seed, "search"),
            constants.search_restarts,
            constants.search_sweeps,
        )

    # score every vertex against the weighted sample clusters
    us = np.repeat(ids, d)
    vs = np.tile(members, n)
    selfpair = us == vs
    labels = np.zeros(us.size, dtype=bool)
    if (~selfpair).any():
        labels[~selfpair] = graph.labels(us[~selfpair], vs[~selfpair])
    edge = labels.reshape(n, d).astype(np.float64)
    nonedge = (~labels & ~selfpair).reshape(n, d).astype(np.float64)
    wone = np.zeros((d, k))
    wone[np.arange(d), member_assign] = weights
    tdeg_minus = nonedge @ wone
    degout_plus = (edge @ weights)[:, None] - edge @ wone
    tcost = (n / t) * (tdeg_minus + degout_plus)
    return CostTable(
        k=k,
        vertices=ids,
        tcost=tcost,
        sample=sample,
        sample_members=members,
        member_assign=np.asarray(member_assign, dtype=np.intp),
    )


def sample_degree_profile(
    graph: LabeledGraph,
    sample: MultiSample,
    member_assign: Mapping[int, int] | np.ndarray,
    v: int,
    j: int,
) -> tuple[int, int]:
    """Multiplicity-weighted (non-edges into cluster j, edges out of it) for v.

    Occurrences of v itself never contribute, so no self pair is queried.
    """
    members, mult = sample.multiplicities()
    keep = members != v
    members, mult = members[keep], mult[keep]
    if members.size == 0:
        return 0, 0
    if isinstance(member_assign, Mapping):
        clusters = np.array([member_assign[int(u)] for u in members], dtype=np.intp)
    else:
        clusters = np.asarray(member_assign, dtype=np.intp)[members]
    labels = graph.labels(np.full(members.size, v, dtype=np.intp), members)
    in_j = clusters == j
    deg_minus = int((mult * (in_j & ~labels)).sum())
    degout_plus = int((mult * (~in_j & labels)).sum())
    return deg_minus, degout_plus


def align_clusterings(a: Clustering, b: Clustering) -> ClusterAlignment:
    """Match the clusters of two k-clusterings of one vertex set.

    Each cluster points to the cluster maximizing the intersection (lowest
    index on ties); mutual pairs are good matches, the rest are paired off in
    index order.  Defects are ``|A_j \\ B_{mapping[j]}|``.
    """
    if a.k != b.k:
        raise ValueError("clusterings must share k")
    if a.n != b.n:
        raise ValueError("clusterings must share the vertex set")
    k = a.k
    inter = np.zeros((k, k), dtype=np.int64)
    np.add.at(inter, (a.assign, b.assign), 1)
    a_to_b = np.argmax(inter, axis=1)
    b_to_a = np.argmax(inter, axis=0)
    good = frozenset(int(i) for i in range(k) if b_to_a[a_to_b[i]] == i)
    mapping = np.full(k, -1, dtype=np.intp)
    used = set()
    for i in sorted(good):
        mapping[i] = a_to_b[i]
        used.add(int(a_to_b[i]))
    free_b = [j for j in range(k) if j not in used]
    bad = frozenset(i for i in range(k) if i not in good)
    for i, j in zip(sorted(bad), free_b):
        mapping[i] = j
    a_sizes = np.bincount(a.assign, minlength=k)
    defects = a_sizes - inter[np.arange(k), mapping]
    return ClusterAlignment(mapping=mapping, good=good, bad=bad, defects=defects)
