"""Enumeration-plus-verification solvers for the high-cost regime.

One small shared sample is enumerated: each guess of its slot assignment is
hardwired into an LP, solved, rounded, and the candidates are scored with the
per-vertex verification ensemble; the best score wins.  Tournaments get the
bucket version with balance rows and a final extension to a permutation;
clusterings reuse the pipeline without balance rows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .bucket import (
    STRICT,
    BucketOrder,
    SampleEnsemble,
    bucket_from_permutation,
    cost_from_ensemble,
    extend_to_permutation,
    make_ensemble,
)
from .errors import BudgetExceededError, EmptyCandidateError, PlanBudgetError
from .estimator import draw_pair_sample, draw_sample
from .instances import (
    Clustering,
    Constants,
    DESK,
    LabeledGraph,
    MultiSample,
    Permutation,
    Tournament,
    derive_seed,
)
from .lp import build_lp, build_lp_clustering, repair_balance, round_assignment, round_lp, solve_lp
from .errors import LpInfeasibleError
from .oracles import brute_force_mfast
from .reports import SolveReport

__all__ = [
    "EnumerationPlan",
    "CandidateRecord",
    "pipeline_sizes",
    "mfast_high_ptas",
    "kcc_high_ptas",
    "dispatch_mfast",
    "estimate_permutation_cost",
]


@dataclass(frozen=True)
class EnumerationPlan:
    """How to walk the guess space of the enumeration sample.

    ``exhaustive`` lists every slot assignment of the distinct sample
    vertices (when that fits the budget); ``oracle_seeded`` lists the
    ground-truth assignment first plus ``budget - 1`` random decoys, which
    exercises the verification-based selection at sizes where exhaustive
    enumeration cannot run.
    """

    mode: str
    budget: int
    truth: Clustering | Permutation | None = None

    def __post_init__(self):
        if self.mode not in ("exhaustive", "oracle_seeded"):
            raise ValueError(f"unknown plan mode {self.mode!r}")
        if self.budget < 1:
            raise ValueError("plan budget must be >= 1")
        if self.mode == "oracle_seeded" and self.truth is None:
            raise ValueError("oracle_seeded plans need the planted solution")


@dataclass
class CandidateRecord:
    """Outcome of one enumeration guess."""

    guess_id: int
    status: str
    assignment: np.ndarray | None
    score: float | None
    repair_moves: int | None = None
    cost_exact: int | None = None


def pipeline_sizes(n: int, eps: float, gamma: float, constants: Constants) -> tuple[int, int, int]:
    """(buckets m, enumeration sample s, ensemble size p) at desk caps."""
    if eps <= 0 or gamma <= 0:
        raise ValueError("eps and gamma must be positive")
    m = int(min(max(2, round(constants.m_multiplier / (gamma * eps))), constants.m_cap, n))
    base = (eps * gamma) ** -2 * math.log(max(n, 2))
    s = int(max(1, min(math.ceil(constants.s_multiplier * base), constants.s_cap, 10 * n)))
    p = int(max(1, min(math.ceil(constants.p_multiplier * base), constants.p_cap, 10 * n)))
    return m, s, p


def _canonical(labels: np.ndarray) -> np.ndarray:
    """First-occurrence relabeling: cluster names in order of appearance."""
    mapping: dict[int, int] = {}
    out = np.empty(labels.size, dtype=np.intp)
    for i, lab in enumerate(labels):
        lab = int(lab)
        if lab not in mapping:
            mapping[lab] = len(mapping)
        out[i] = mapping[lab]
    return out


def _rgs_count(d: int, kmax: int) -> int:
    """Number of first-occurrence-canonical label strings of length d."""
    if d == 0:
        return 1
    # f[used] = number of completions given `used` labels so far
    counts = {1: 1}
    for _ in range(d - 1):
        nxt: dict[int, int] = {}
        for used, cnt in counts.items():
            nxt[used] = nxt.get(used, 0) + cnt * used
            if used < kmax:
                nxt[used + 1] = nxt.get(used + 1, 0) + cnt
        counts = nxt
    return sum(counts.values())


def _exhaustive_guesses(d: int, m: int, canonical: bool) -> list[np.ndarray]:
    if d == 0:
        return [np.zeros(0, dtype=np.intp)]
    if canonical:
        out: list[np.ndarray] = []

        def rec(prefix: list[int], used: int) -> None:
            if len(prefix) == d:
                out.append(np.array(prefix, dtype=np.intp))
                return
            top = min(used + 1, m)
            for lab in range(top):
                rec(prefix + [lab], max(used, lab + 1))

        rec([0], 1)
        return out
    out = []
    for flat in np.ndindex(*([m] * d)):
        out.append(np.array(flat, dtype=np.intp))
    return out


def _plan_guesses(
    plan: EnumerationPlan,
    members: np.ndarray,
    m: int,
    seed: int,
    canonical: bool,
    truth_labels: Callable[[np.ndarray], np.ndarray],
) -> list[np.ndarray]:
    d = members.size
    if plan.mode == "exhaustive":
        count = _rgs_count(d, m) if canonical else m**d
        if count > plan.budget:
            raise PlanBudgetError(
                f"exhaustive enumeration needs {count} guesses, budget {plan.budget}"
            )
        return _exhaustive_guesses(d, m, canonical)
    truth = truth_labels(members)
    truth = _canonical(truth) if canonical else truth
    rng = np.random.default_rng(seed)
    guesses = [np.asarray(truth, dtype=np.intp)]
    for _ in range(plan.budget - 1):
        decoy = rng.integers(0, m, size=d)
        guesses.append(_canonical(decoy) if canonical else decoy.astype(np.intp))
    return guesses


def _select_best(records: list[CandidateRecord]) -> CandidateRecord:
    scored = [r for r in records if r.status == "ok"]
    if not scored:
        raise EmptyCandidateError("every enumeration guess was infeasible")
    return min(scored, key=lambda r: (r.score, r.guess_id))


def mfast_high_ptas(
    tournament: Tournament,
    eps: float,
    gamma: float,
    constants: Constants = DESK,
    plan: EnumerationPlan | None = None,
    seed: int = 0,
    solver_method: str = "auto",
) -> tuple[Permutation, list[CandidateRecord]]:
    """Additive-approximation pipeline for tournaments assumed high-cost.

    Returns the extension of the best-scoring rounded bucket order plus the
    per-guess records (infeasible guesses are skipped, not fatal, unless all
    of them are).
    """
    n = tournament.n
    if plan is None:
        plan = EnumerationPlan("exhaustive", constants.plan_budget)
    m, s, p = pipeline_sizes(n, eps, gamma, constants)
    sample = draw_sample(n, s, derive_seed(seed, "sample"))
    ensemble = make_ensemble(n, p, derive_seed(seed, "ensemble"))
    members = sample.distinct()

    def truth_labels(mem: np.ndarray) -> np.ndarray:
        sigma_star = bucket_from_permutation(plan.truth, m)
        return sigma_star.sigma[mem]

    guesses = _plan_guesses(
        plan, members, m, derive_seed(seed, "plan"), canonical=False, truth_labels=truth_labels
    )
    records: list[CandidateRecord] = []
    for gid, labels in enumerate(guesses):
        guess = {int(v): int(b) for v, b in zip(members, labels)}
        model = build_lp(tournament, sample, guess, ensemble, m, gamma, eps, constants)
        try:
            frac = solve_lp(model, method=solver_method)
        except LpInfeasibleError:
            records.append(CandidateRecord(gid, "infeasible", None, None))
            continue
        rounded = round_lp(frac, derive_seed(seed, f"round{gid}"))
        repaired, moves = repair_balance(rounded)
        score = cost_from_ensemble(tournament, repaired, ensemble)
        records.append(CandidateRecord(gid, "ok", repaired.sigma, score, moves))
    best = _select_best(records)
    order = BucketOrder(m=m, sigma=best.assignment, mode=STRICT)
    return extend_to_permutation(order), records


def _clustering_ensemble_score(
    graph: LabeledGraph, ids: np.ndarray, assign_pos: np.ndarray, ensemble: SampleEnsemble
) -> float:
    """Ensemble estimate of the clustering disagreement cost on the subset."""
    n = ids.size
    p = ensemble.p
    pos_u = np.repeat(np.arange(n), p)
    pos_w = ensemble.items.reshape(-1)
    keep = pos_u != pos_w
    labels = np.zeros(pos_u.size, dtype=bool)
    if keep.any():
        labels[keep] = graph.labels(ids[pos_u[keep]], ids[pos_w[keep]])
    same = assign_pos[pos_u] == assign_pos[pos_w]
    disagree = ((same & ~labels) | (~same & labels)) & keep
    return float(n / (2 * p) * disagree.sum())


def _kcc_high_assign(
    graph: LabeledGraph,
    ids: np.ndarray,
    k: int,
    eps: float,
    gamma: float,
    constants: Constants,
    plan: EnumerationPlan | None,
    seed: int,
    solver_method: str = "auto",
) -> tuple[np.ndarray, list[CandidateRecord]]:
    n = ids.size
    if plan is None:
        plan = EnumerationPlan("exhaustive", constants.plan_budget)
    _, s, p = pipeline_sizes(n, eps, gamma, constants)
    positions = draw_sample(n, s, derive_seed(seed, "sample"))
    sample = MultiSample(items=ids[positions.items], seed=positions.seed)
    ensemble = make_ensemble(n, p, derive_seed(seed, "ensemble"))
    members = sample.distinct()

    def truth_labels(mem: np.ndarray) -> np.ndarray:
        return plan.truth.assign[mem]

    guesses = _plan_guesses(
        plan, members, k, derive_seed(seed, "plan"), canonical=True, truth_labels=truth_labels
    )
    records: list[CandidateRecord] = []
    for gid, labels in enumerate(guesses):
        guess = {int(v): int(b) for v, b in zip(members, labels)}
        model = build_lp_clustering(
            graph, ids, sample, guess, ensemble, k, gamma, eps, constants
        )
        try:
            frac = solve_lp(model, method=solver_method)
        except LpInfeasibleError:
            records.append(CandidateRecord(gid, "infeasible", None, None))
            continue
        assign_pos = round_assignment(frac, derive_seed(seed, f"round{gid}"))
        score = _clustering_ensemble_score(graph, ids, assign_pos, ensemble)
        records.append(CandidateRecord(gid, "ok", assign_pos, score))
    best = _select_best(records)
    return best.assignment, records


def kcc_high_ptas(
    graph: LabeledGraph,
    k: int,
    eps: float,
    gamma: float,
    constants: Constants = DESK,
    plan: EnumerationPlan | None = None,
    seed: int = 0,
    solver_method: str = "auto",
) -> tuple[Clustering, list[CandidateRecord]]:
    """Clustering analog of the tournament pipeline: no balance rows, guesses
    are canonical k-labelings of the sample, output is the best-scoring
    rounded clustering."""
    assign, records = _kcc_high_assign(
        graph, np.arange(graph.n), k, eps, gamma, constants, plan, seed, solver_method
    )
    return Clustering(k, assign), records


# ---------------------------------------------------------------------------
# cost estimation and dispatch
# ---------------------------------------------------------------------------


def estimate_permutation_cost(
    tournament: Tournament,
    pi: Permutation,
    additive_target: float,
    constants: Constants = DESK,
    seed: int = 0,
) -> float:
    """Backward-arc count estimated from sampled pairs.

    ``additive_target`` is the tolerated absolute error as a fraction of n^2;
    when the implied sample would cover every pair the count is exact.
    """
    n = tournament.n
    total_pairs = n * (n - 1) // 2
    if additive_target <= 0:
        raise ValueError("additive_target must be positive")
    q = math.ceil(constants.sample_multiplier * math.log(max(n, 2)) / additive_target**2)
    ranks = pi.ranks
    if q >= total_pairs:
        iu, ju = np.triu_indices(n, k=1)
        dirs = tournament.directions(iu, ju)
        backward = np.where(dirs, ranks[ju] < ranks[iu], ranks[iu] < ranks[ju])
        return float(backward.sum())
    iu, ju = draw_pair_sample(n, q, derive_seed(seed, "pairs"))
    dirs = tournament.directions(iu, ju)
    backward = np.where(dirs, ranks[ju] < ranks[iu], ranks[iu] < ranks[ju])
    return float(total_pairs) * float(backward.mean())


def dispatch_mfast(
    tournament: Tournament,
    eps: float,
    constants: Constants = DESK,
    seed: int = 0,
    low_solver: Callable | None = None,
    plan: EnumerationPlan | None = None,
    solver_method: str = "auto",
) -> tuple[Permutation, SolveReport]:
    """Run the high-cost pipeline, estimate its cost, and pick the branch.

    A high estimate keeps the pipeline's permutation; a low one delegates to
    the pluggable low-cost solver (exhaustive search under its cap by
    default).  Above the cap with a low estimate the report carries the
    ``unsupported_scale`` status instead of crashing.
    """
    n = tournament.n
    raw0, dedup0 = tournament.queries.snapshot()
    gamma = constants.p_threshold(eps)
    perm, _records = mfast_high_ptas(
        tournament, eps, gamma, constants, plan, derive_seed(seed, "high"), solver_method
    )
    est = estimate_permutation_cost(
        tournament, perm, gamma, constants, derive_seed(seed, "estimate")
    )
    threshold = gamma * n * n
    branch = "high"
    if est < threshold:
        if low_solver is not None:
            perm = low_solver(tournament, eps, constants, derive_seed(seed, "low"))
            branch = "low"
        elif n <= constants.mfast_brute_cap:
            perm, _ = brute_force_mfast(tournament, constants, count_queries=True)
            branch = "low"
        else:
            branch = "unsupported_scale"
    raw1, dedup1 = tournament.queries.snapshot()
    report = SolveReport(
        problem="mfast",
        n=n,
        k=None,
        eps=eps,
        branch=branch,
        cost_estimate=est,
        cost_exact=None,
        queries_raw=raw1 - raw0,
        queries_dedup=dedup1 - dedup0,
        seed=seed,
        trace=[],
    )
    return perm, report
