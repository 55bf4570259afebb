"""Assignment LPs over sampled cost constraints, with rounding machinery.

One variable per (vertex, slot).  Rows: per-vertex simplex equalities, the
almost-balanced bucket bounds (tournaments only), and two one-sided rows per
(vertex, slot) tying the ensemble estimate of a single-vertex move to the
constant computed from the shared sample.  The objective is the shared-sample
cost as a linear functional; hardwired (enumerated) vertices fold into
constants at solve time.

Small models solve with the built-in dense two-phase simplex (Bland's rule,
1e-9 tolerances); larger ones hand off to scipy's HiGHS dual simplex behind
the same interface.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .bucket import STAR, STRICT, BucketOrder, SampleEnsemble
from .errors import LpInfeasibleError, SimplexCycleError
from .instances import Constants, DESK, LabeledGraph, MultiSample, Tournament

__all__ = [
    "LpRow",
    "LpModel",
    "FractionalSolution",
    "build_lp",
    "build_lp_clustering",
    "solve_lp",
    "round_lp",
    "round_assignment",
    "certify_rounding",
    "repair_balance",
    "simplex_two_phase",
    "RowCheck",
    "CertificationReport",
]

INF = float("inf")


@dataclass(frozen=True)
class LpRow:
    """One sparse constraint row with its rounding-certificate norms."""

    kind: str
    idx: np.ndarray
    coef: np.ndarray
    lo: float
    hi: float
    l0: int
    linf: float
    tag: tuple = ()

    def activity(self, flat_values: np.ndarray) -> float:
        return float(self.coef @ flat_values[self.idx])

    def violation(self, flat_values: np.ndarray) -> float:
        a = self.activity(flat_values)
        v = 0.0
        if self.hi < INF:
            v = max(v, a - self.hi)
        if self.lo > -INF:
            v = max(v, self.lo - a)
        return v


@dataclass
class LpModel:
    """Sparse assignment LP over n*m variables, some hardwired to one slot.

    Variables are indexed position-major: column ``pos*m + j`` is position
    ``pos`` (an index into the caller's vertex list) at slot ``j``.
    """

    n: int
    m: int
    hardwired: dict[int, int]
    rows: list[LpRow]
    obj_idx: np.ndarray
    obj_coef: np.ndarray
    obj_const: float
    meta: dict = field(default_factory=dict)

    def var(self, pos: int, j: int) -> int:
        return pos * self.m + j

    @property
    def num_vars(self) -> int:
        return self.n * self.m

    def objective_value(self, flat_values: np.ndarray) -> float:
        return float(self.obj_const + self.obj_coef @ flat_values[self.obj_idx])

    def hardwired_values(self) -> np.ndarray:
        """Dense n*m vector holding the forced one-hot rows, zeros elsewhere."""
        flat = np.zeros(self.num_vars)
        for pos, j in self.hardwired.items():
            flat[self.var(pos, j)] = 1.0
        return flat

    def assignment_values(self, assign: np.ndarray) -> np.ndarray:
        flat = np.zeros(self.num_vars)
        flat[np.arange(self.n) * self.m + np.asarray(assign, dtype=np.intp)] = 1.0
        return flat

    def max_violation(self, flat_values: np.ndarray) -> float:
        return max((row.violation(flat_values) for row in self.rows), default=0.0)

    def row_counts(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for row in self.rows:
            counts[row.kind] = counts.get(row.kind, 0) + 1
        return counts

    def dump_text(self) -> str:
        """Row-wise sparse dump: bounds then nonzeros, for external checking."""
        out = [f"lp {self.n} {self.m} rows {len(self.rows)}"]
        for pos in sorted(self.hardwired):
            out.append(f"fix {pos} {self.hardwired[pos]}")
        obj = " ".join(f"{i}:{c:.12g}" for i, c in zip(self.obj_idx, self.obj_coef))
        out.append(f"obj {self.obj_const:.12g} {obj}")
        for row in self.rows:
            lo = "-inf" if row.lo == -INF else f"{row.lo:.12g}"
            hi = "inf" if row.hi == INF else f"{row.hi:.12g}"
            nz = " ".join(f"{i}:{c:.12g}" for i, c in zip(row.idx, row.coef))
            out.append(f"row {row.kind} {lo} {hi} {nz}")
        return "\n".join(out) + "\n"


@dataclass(frozen=True)
class FractionalSolution:
    """Per-vertex slot distribution plus the attained objective."""

    values: np.ndarray
    objective: float

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    def flat(self) -> np.ndarray:
        return self.values.reshape(-1)


# ---------------------------------------------------------------------------
# model construction
# ---------------------------------------------------------------------------


def _pair_patterns(problem: str, m: int) -> tuple[np.ndarray, np.ndarray]:
    """Slot-pair indicators weighting the negated and plain pair reads.

    For tournaments the read is the arc u->w: a pair with u's bucket earlier
    inverts when the arc points back (negated read), with u's bucket later
    when it points forward.  For clusterings the read is the edge label:
    same slot pays the non-edge, distinct slots pay the edge.
    """
    i = np.arange(m)
    if problem == "mfast":
        neg = i[:, None] < i[None, :]
        pos = i[:, None] > i[None, :]
    elif problem == "kcc":
        neg = i[:, None] == i[None, :]
        pos = i[:, None] != i[None, :]
    else:
        raise ValueError(f"unknown problem {problem!r}")
    return neg.astype(np.float64), pos.astype(np.float64)


def _bulk_reads(instance, us: np.ndarray, vs: np.ndarray) -> np.ndarray:
    """Counted reads of the given pairs; self pairs come back False unqueried."""
    reader = instance.labels if isinstance(instance, LabeledGraph) else instance.directions
    keep = us != vs
    vals = np.zeros(us.size, dtype=bool)
    if keep.any():
        vals[keep] = reader(us[keep], vs[keep])
    return vals


def _build_assignment_lp(
    problem: str,
    instance,
    ids: np.ndarray,
    sample: MultiSample,
    guess: dict[int, int],
    ensemble: SampleEnsemble,
    m: int,
    gamma: float,
    eps: float,
    constants: Constants,
    balance_rows: bool,
) -> LpModel:
    n = ids.size
    pos_of = {int(v): i for i, v in enumerate(ids)}
    s = len(sample)
    p = ensemble.p
    neg_pat, pos_pat = _pair_patterns(problem, m)
    bound = constants.crux_slack * eps * gamma * n

    smembers, smult = sample.multiplicities()
    sbuckets = np.array([guess[int(v)] for v in smembers], dtype=np.intp)
    svals = _bulk_reads(
        instance, np.repeat(ids, smembers.size), np.tile(smembers, n)
    ).reshape(n, smembers.size)
    selfmask = ids[:, None] == smembers[None, :]
    eff_neg = (~svals & ~selfmask) * smult.astype(np.float64)
    eff_pos = (svals & ~selfmask) * smult.astype(np.float64)
    # const[pos, i] = (n/2s) * sum_d eff_neg*neg_pat[i, g_d] + eff_pos*pos_pat[i, g_d]
    const = (eff_neg @ neg_pat[:, sbuckets].T + eff_pos @ pos_pat[:, sbuckets].T) * (
        n / (2 * s)
    )

    rows: list[LpRow] = []
    for pos in range(n):
        idx = pos * m + np.arange(m)
        rows.append(
            LpRow("assign", idx, np.ones(m), 1.0, 1.0, l0=1, linf=1.0, tag=(int(ids[pos]),))
        )
    if balance_rows:
        floor_b, ceil_b = math.floor(n / m), math.ceil(n / m)
        for j in range(m):
            idx = np.arange(n) * m + j
            ones = np.ones(n)
            rows.append(LpRow("balance_lo", idx, ones, float(floor_b), INF, n, 1.0, (j,)))
            rows.append(LpRow("balance_hi", idx, ones, -INF, float(ceil_b), n, 1.0, (j,)))

    # objective: free vertices carry coefficients, hardwired fold into the constant
    obj_idx: list[int] = []
    obj_coef: list[float] = []
    obj_const = 0.0
    for pos in range(n):
        v = int(ids[pos])
        if v in guess:
            obj_const += const[pos, guess[v]]
        else:
            obj_idx.extend(range(pos * m, pos * m + m))
            obj_coef.extend(const[pos].tolist())

    # crux rows from the verification ensemble
    evals = _bulk_reads(
        instance, np.repeat(ids, p), ids[ensemble.items.reshape(-1)]
    ).reshape(n, p)
    scale = n / (2 * p)
    for pos in range(n):
        items = ensemble.items[pos]
        keep = items != pos
        members, first, mult = np.unique(items[keep], return_index=True, return_counts=True)
        if members.size:
            vals = evals[pos, keep][first]
            weights = scale * mult
            # coef[i, w, b]: slot i of the moved vertex, member w at slot b
            coef = (
                neg_pat[:, None, :] * np.where(vals, 0.0, 1.0)[None, :, None]
                + pos_pat[:, None, :] * np.where(vals, 1.0, 0.0)[None, :, None]
            ) * weights[None, :, None]
            cols = (members[:, None] * m + np.arange(m)[None, :]).reshape(-1)
        else:
            coef = np.zeros((m, 0, m))
            cols = np.zeros(0, dtype=np.intp)
        for i in range(m):
            flat = coef[i].reshape(-1)
            nz = np.flatnonzero(flat)
            idx = cols[nz]
            coefs = flat[nz]
            l0 = int(np.unique(idx // m).size)
            linf = float(np.abs(coefs).max()) if coefs.size else 0.0
            c = float(const[pos, i])
            tag = (int(ids[pos]), i)
            rows.append(LpRow("crux_hi", idx, coefs, -INF, c + bound, l0, linf, tag))
            rows.append(LpRow("crux_lo", idx, coefs, c - bound, INF, l0, linf, tag))

    hardwired = {pos_of[int(v)]: int(j) for v, j in guess.items()}
    return LpModel(
        n=n,
        m=m,
        hardwired=hardwired,
        rows=rows,
        obj_idx=np.asarray(obj_idx, dtype=np.intp),
        obj_coef=np.asarray(obj_coef, dtype=np.float64),
        obj_const=float(obj_const),
        meta={"problem": problem, "s": s, "p": p, "bound": bound},
    )


def build_lp(
    tournament: Tournament,
    sample: MultiSample,
    guess: dict[int, int],
    ensemble: SampleEnsemble,
    m: int,
    gamma: float,
    eps: float,
    constants: Constants = DESK,
) -> LpModel:
    """Bucket-assignment LP for a tournament under one enumeration guess."""
    ids = np.arange(tournament.n)
    return _build_assignment_lp(
        "mfast", tournament, ids, sample, guess, ensemble, m, gamma, eps, constants, True
    )


def build_lp_clustering(
    graph: LabeledGraph,
    ids: np.ndarray,
    sample: MultiSample,
    guess: dict[int, int],
    ensemble: SampleEnsemble,
    k: int,
    gamma: float,
    eps: float,
    constants: Constants = DESK,
) -> LpModel:
    """Cluster-assignment LP; clusters carry no balance rows."""
    return _build_assignment_lp(
        "kcc",
        graph,
        np.asarray(ids, dtype=np.intp),
        sample,
        guess,
        ensemble,
        k,
        gamma,
        eps,
        constants,
        False,
    )


# ---------------------------------------------------------------------------
# solving
# ---------------------------------------------------------------------------


def simplex_two_phase(
    c: np.ndarray,
    a_ub: np.ndarray,
    b_ub: np.ndarray,
    a_eq: np.ndarray,
    b_eq: np.ndarray,
    tol: float = 1e-9,
    max_iter: int | None = None,
) -> tuple[np.ndarray, float]:
    """Minimize c@x subject to a_ub@x <= b_ub, a_eq@x = b_eq, x >= 0.

    Dense tableau with Bland's anti-cycling rule in both phases.  Raises
    LpInfeasibleError when no feasible point exists and SimplexCycleError if
    the iteration guard trips.
    """
    c = np.asarray(c, dtype=np.float64)
    nv = c.size
    a_ub = np.asarray(a_ub, dtype=np.float64).reshape(-1, nv) if np.size(a_ub) else np.zeros((0, nv))
    a_eq = np.asarray(a_eq, dtype=np.float64).reshape(-1, nv) if np.size(a_eq) else np.zeros((0, nv))
    b_ub = np.asarray(b_ub, dtype=np.float64).reshape(-1)
    b_eq = np.asarray(b_eq, dtype=np.float64).reshape(-1)
    m_ub, m_eq = b_ub.size, b_eq.size
    m = m_ub + m_eq

    a = np.zeros((m, nv + m_ub))
    a[:m_ub, :nv] = a_ub
    a[:m_ub, nv : nv + m_ub] = np.eye(m_ub)
    a[m_ub:, :nv] = a_eq
    b = np.concatenate([b_ub, b_eq])
    flip = b < 0
    a[flip] *= -1.0
    b[flip] *= -1.0

    ncols = nv + m_ub
    tableau = np.zeros((m + 1, ncols + m + 1))
    tableau[:m, :ncols] = a
    tableau[:m, ncols : ncols + m] = np.eye(m)
    tableau[:m, -1] = b
    basis = list(range(ncols, ncols + m))
    tableau[m, :] = -tableau[:m, :].sum(axis=0)
    tableau[m, ncols : ncols + m] = 0.0

    limit = max_iter if max_iter is not None else 200 * (m + ncols) + 2000

    def pivot(rowi: int, colj: int) -> None:
        tableau[rowi] /= tableau[rowi, colj]
        col = tableau[:, colj].copy()
        col[rowi] = 0.0
        tableau[:] -= np.outer(col, tableau[rowi])
        tableau[:, colj] = 0.0
        tableau[rowi, colj] = 1.0
        basis[rowi] = colj

    def run(active_cols: int, phase: int) -> None:
        for _ in range(limit):
            red = tableau[m, :active_cols]
            negs = np.flatnonzero(red < -tol)
            if negs.size == 0:
                return
            enter = int(negs[0])
            column = tableau[:m, enter]
            ratios = [
                (tableau[i, -1] / column[i], basis[i], i)
                for i in range(m)
                if column[i] > tol
            ]
            if not ratios:
                if phase == 1:
                    raise LpInfeasibleError("phase-1 subproblem unbounded")
                raise SimplexCycleError("objective unbounded below")
            _, _, leave = min(ratios, key=lambda r: (r[0], r[1]))
            pivot(leave, enter)
        raise SimplexCycleError("simplex iteration guard exceeded")

    run(ncols + m, phase=1)
    scale_ref = max(1.0, float(np.abs(b).max()) if b.size else 1.0)
    if tableau[m, -1] < -1e-7 * scale_ref:
        raise LpInfeasibleError("phase-1 optimum is positive")

    for i in range(m):
        if basis[i] >= ncols:
            row = tableau[i, :ncols]
            cand = np.flatnonzero(np.abs(row) > 1e-7)
            if cand.size:
                pivot(i, int(cand[0]))
            # otherwise the row is redundant; its artificial stays basic at 0

    tableau[m, :] = 0.0
    tableau[m, :nv] = c
    for i in range(m):
        if basis[i] < ncols:
            cb = c[basis[i]] if basis[i] < nv else 0.0
            if cb:
                tableau[m, :] -= cb * tableau[i, :]
    run(ncols, phase=2)

    x = np.zeros(ncols)
    for i in range(m):
        if basis[i] < ncols:
            x[basis[i]] = tableau[i, -1]
    xv = np.clip(x[:nv], 0.0, None)
    return xv, float(c @ xv)


def _reduced_arrays(model: LpModel):
    """Fold hardwired variables into constants; emit the free-column system."""
    m = model.m
    free_vertices = [pos for pos in range(model.n) if pos not in model.hardwired]
    free_col = np.full(model.num_vars, -1, dtype=np.intp)
    for i, pos in enumerate(free_vertices):
        free_col[pos * m : (pos + 1) * m] = np.arange(i * m, (i + 1) * m)
    ncols = len(free_vertices) * m
    hard_flat = model.hardwired_values()

    ub_rows: list[tuple[np.ndarray, np.ndarray, float]] = []
    eq_rows: list[tuple[np.ndarray, np.ndarray, float]] = []
    for row in model.rows:
        hard_part = float(row.coef @ hard_flat[row.idx])
        cols = free_col[row.idx]
        keep = cols >= 0
        cols, coef = cols[keep], row.coef[keep]
        if row.lo == row.hi:
            if cols.size == 0:
                if abs(hard_part - row.lo) > 1e-9:
                    raise LpInfeasibleError("hardwiring contradicts an equality row")
                continue
            eq_rows.append((cols, coef, row.lo - hard_part))
            continue
        if row.hi < INF:
            ub_rows.append((cols, coef, row.hi - hard_part))
        if row.lo > -INF:
            ub_rows.append((cols, -coef, hard_part - row.lo))

    cvec = np.zeros(ncols)
    obj_shift = float(model.obj_const)
    for i, coef in zip(model.obj_idx, model.obj_coef):
        col = free_col[int(i)]
        if col >= 0:
            cvec[col] += coef
        else:
            obj_shift += coef * hard_flat[int(i)]
    return free_vertices, ncols, cvec, ub_rows, eq_rows, obj_shift


def _rows_to_csr(rows, ncols):
    from scipy.sparse import csr_matrix

    data, indices, indptr, rhs = [], [], [0], []
    for cols, coef, b in rows:
        indices.extend(cols.tolist())
        data.extend(coef.tolist())
        indptr.append(len(indices))
        rhs.append(b)
    mat = csr_matrix((data, indices, indptr), shape=(len(rows), ncols))
    return mat, np.asarray(rhs)


def _rows_to_dense(rows, ncols):
    mat = np.zeros((len(rows), ncols))
    rhs = np.zeros(len(rows))
    for r, (cols, coef, b) in enumerate(rows):
        np.add.at(mat[r], cols, coef)
        rhs[r] = b
    return mat, rhs


def solve_lp(model: LpModel, method: str = "auto") -> FractionalSolution:
    """Optimal basic solution of the model, or LpInfeasibleError.

    ``auto`` uses the built-in simplex for small models and scipy HiGHS for
    the rest; both are deterministic for a fixed model.
    """
    free_vertices, ncols, cvec, ub_rows, eq_rows, obj_shift = _reduced_arrays(model)
    if method == "auto":
        method = "simplex" if (len(ub_rows) + len(eq_rows)) * max(ncols, 1) <= 20000 else "highs"

    if ncols == 0:
        values = model.hardwired_values().reshape(model.n, model.m)
        flat = values.reshape(-1)
        if model.max_violation(flat) > 1e-9:
            raise LpInfeasibleError("fully hardwired assignment violates a row")
        return FractionalSolution(values=values, objective=model.objective_value(flat))

    if method == "simplex":
        a_ub, b_ub = _rows_to_dense(ub_rows, ncols)
        a_eq, b_eq = _rows_to_dense(eq_rows, ncols)
        x, obj = simplex_two_phase(cvec, a_ub, b_ub, a_eq, b_eq)
    elif method == "highs":
        from scipy.optimize import linprog

        a_ub, b_ub = _rows_to_csr(ub_rows, ncols)
        a_eq, b_eq = _rows_to_csr(eq_rows, ncols)
        res = linprog(
            cvec,
            A_ub=a_ub if len(ub_rows) else None,
            b_ub=b_ub if len(ub_rows) else None,
            A_eq=a_eq if len(eq_rows) else None,
            b_eq=b_eq if len(eq_rows) else None,
            bounds=(0, None),
            method="highs-ds",
        )
        if res.status == 2:
            raise LpInfeasibleError("HiGHS reports infeasible")
        if not res.success:
            raise LpInfeasibleError(f"HiGHS failed: {res.message}")
        x = np.clip(res.x, 0.0, None)
        obj = float(cvec @ x)
    else:
        raise ValueError(f"unknown solve method {method!r}")

    values = model.hardwired_values().reshape(model.n, model.m)
    for i, pos in enumerate(free_vertices):
        values[pos] = x[i * model.m : (i + 1) * model.m]
    return FractionalSolution(values=values, objective=obj + obj_shift)


# ---------------------------------------------------------------------------
# rounding, certification, repair
# ---------------------------------------------------------------------------


def round_assignment(frac: FractionalSolution, seed: int) -> np.ndarray:
    """Independent categorical draw per vertex from its slot distribution."""
    values = np.clip(frac.values, 0.0, None)
    totals = values.sum(axis=1, keepdims=True)
    if (totals <= 0).any():
        raise ValueError("a vertex has no slot mass to round")
    probs = values / totals
    rng = np.random.default_rng(seed)
    draws = rng.random(values.shape[0])
    cum = np.cumsum(probs, axis=1)
    assign = (cum < draws[:, None]).sum(axis=1)
    return np.minimum(assign, values.shape[1] - 1).astype(np.intp)


def round_lp(frac: FractionalSolution, seed: int) -> BucketOrder:
    """Rounded bucket order; hardwired one-hot rows keep their bucket."""
    assign = round_assignment(frac, seed)
    return BucketOrder(m=frac.values.shape[1], sigma=assign, mode=STAR)


@dataclass(frozen=True)
class RowCheck:
    kind: str
    tag: tuple
    violation: float
    bound: float
    ok: bool


@dataclass(frozen=True)
class CertificationReport:
    rows: tuple
    all_ok: bool

    def failures(self) -> list[RowCheck]:
        return [r for r in self.rows if not r.ok]


def certify_rounding(
    model: LpModel,
    frac: FractionalSolution,
    candidate: np.ndarray,
    eta: float,
) -> CertificationReport:
    """Per-row check that rounding stayed within the norm-based violation bound.

    A row satisfied by the fractional point may be violated by the rounded
    assignment by at most ``linf * sqrt(l0 * ln(1/eta))``, each with
    probability at least 1 - eta.
    """
    if not 0 < eta < 1:
        raise ValueError("eta must lie in (0, 1)")
    del frac  # bounds depend only on row norms; the fractional point anchors them
    logterm = math.log(1.0 / eta)
    cand_flat = model.assignment_values(np.asarray(candidate, dtype=np.intp))
    checks = []
    for row in model.rows:
        bound = row.linf * math.sqrt(row.l0 * logterm)
        violation = row.violation(cand_flat)
        checks.append(
            RowCheck(row.kind, row.tag, violation, bound, violation <= bound + 1e-9)
        )
    return CertificationReport(rows=tuple(checks), all_ok=all(c.ok for c in checks))


def repair_balance(order: BucketOrder) -> tuple[BucketOrder, int]:
    """Move vertices until strict balance holds; lowest ids move first.

    Sources are the largest overfull buckets (largest buckets when none is
    overfull), destinations the smallest underfull ones.  Already balanced
    orders come back unchanged with zero moves.
    """
    n = order.n
    m = order.m
    lo = n / (2 * m)
    hi = 2 * n / m
    sigma = order.sigma.copy()
    sizes = np.bincount(sigma, minlength=m).astype(np.int64)
    moves = 0
    while True:
        under = np.flatnonzero(sizes < lo)
        over = np.flatnonzero(sizes > hi)
        if under.size == 0 and over.size == 0:
            break
        src = int(over[np.argmax(sizes[over])]) if over.size else int(np.argmax(sizes))
        dst = int(under[np.argmin(sizes[under])]) if under.size else int(np.argmin(sizes))
        mover = int(np.flatnonzero(sigma == src)[0])
        sigma[mover] = dst
        sizes[src] -= 1
        sizes[dst] += 1
        moves += 1
    return BucketOrder(m=m, sigma=sigma, mode=STRICT), moves
