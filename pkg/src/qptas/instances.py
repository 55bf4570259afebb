"""Problem instances, query-counting oracles, seeded generators and file I/O.

Both problems expose their input only through counting accessors
(:func:`query_label` / :func:`query_direction` and their bulk variants), so
that every algorithm's query footprint can be read off the instance after a
run.  The ``peek_*`` accessors bypass counting and are reserved for
ground-truth oracles and tests; algorithm modules must never touch them.
"""

from __future__ import annotations

import hashlib
import threading
from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np

from .errors import (
    DuplicatePairError,
    InstanceFormatError,
    MalformedHeaderError,
    MissingPairError,
    SelfLoopError,
    UnknownConstantError,
)

__all__ = [
    "Constants",
    "DESK",
    "THEOREM_GRADE",
    "QueryCounter",
    "LabeledGraph",
    "Tournament",
    "Clustering",
    "Permutation",
    "MultiSample",
    "GroundTruth",
    "derive_seed",
    "query_label",
    "query_direction",
    "query_labels",
    "query_directions",
    "gen_planted_clustering",
    "gen_planted_tournament",
    "transitive_tournament",
    "save_instance",
    "load_instance",
    "save_ground_truth",
    "load_ground_truth",
]


def derive_seed(seed: int, tag: str) -> int:
    """Derive a child seed deterministically from a master seed and a tag."""
    digest = hashlib.blake2b(f"{seed}/{tag}".encode(), digest_size=8).digest()
    return int.from_bytes(digest, "big") >> 1


# ---------------------------------------------------------------------------
# constants
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Constants:
    """Every tunable constant of the solvers, as one overridable record.

    Defaults form the desk-scale profile used by the test suite and CLI:
    sample sizes are capped so runs finish in seconds and stay strictly below
    the full pair budget.  :meth:`theorem_grade` returns the profile with the
    published exponents; it is documentation, not something a desk run can
    execute (its sample sizes are astronomically large).
    """

    # vertex-cost estimator: t = min(c * ln(n) * beta**-t_exponent, t_cap, 10n)
    c: float = 8.0
    t_exponent: float = 0.0
    t_cap: int = 2000
    # brute-force the sample clustering iff d*log2(k) <= sample_enum_budget
    sample_enum_budget: float = 16.0
    search_restarts: int = 8
    search_sweeps: int = 60
    # low-cost clustering scheme
    c1: float = 1.0
    c2: float = 1.0
    c3: float = 1.0
    c4: float = 0.25
    c5: float = 0.5
    beta_k_exponent: int = 3
    base_n: int = 8
    # cost-regime thresholds: P(eps) and Q(eps, k) as fractions of n^2
    p_coeff: float = 0.4
    p_eps_exponent: float = 2.0
    q_coeff: float = 2.88
    q_eps_exponent: float = 2.0
    q_k_exponent: float = 2.0
    # pair-sampling cost estimation: q = ceil(sample_multiplier * ln(n) / tau^2)
    sample_multiplier: float = 0.5
    # high-cost pipeline sample sizes and bucket count
    s_multiplier: float = 0.5
    s_cap: int = 4
    p_multiplier: float = 0.5
    p_cap: int = 20
    m_multiplier: float = 0.15
    m_cap: int = 3
    crux_slack: float = 8.0
    plan_budget: int = 128
    # ground-truth solvers
    brute_kcc_budget: float = 24.0
    mfast_brute_cap: int = 10
    # cluster alignment
    align_defect_coeff: float = 4.0
    delta_coeff: float = 1.0

    # exponents may be zeroed to neutralize a factor; everything else is positive
    _EXPONENT_FIELDS = ("t_exponent", "p_eps_exponent", "q_eps_exponent", "q_k_exponent")

    def __post_init__(self) -> None:
        for f in fields(self):
            value = getattr(self, f.name)
            if f.name in self._EXPONENT_FIELDS:
                if value < 0:
                    raise ValueError(f"exponent {f.name} must be nonnegative")
            elif value <= 0:
                raise ValueError(f"constant {f.name} must be strictly positive")
        for cap in ("t_cap", "s_cap", "p_cap", "m_cap", "plan_budget", "mfast_brute_cap"):
            if getattr(self, cap) < 1:
                raise ValueError(f"constant {cap} must be >= 1")

    def with_overrides(self, **overrides: float) -> "Constants":
        known = {f.name for f in fields(self)}
        for name in overrides:
            if name not in known:
                raise UnknownConstantError(name)
        return replace(self, **overrides)

    def p_threshold(self, eps: float) -> float:
        """Low/high cost boundary for tournaments, as a fraction of n^2."""
        return self.p_coeff * eps**self.p_eps_exponent

    def q_threshold(self, eps: float, k: int) -> float:
        """Low/high cost boundary for k-clustering, as a fraction of n^2."""
        return self.q_coeff * eps**self.q_eps_exponent / k**self.q_k_exponent

    def beta(self, eps: float, k: int) -> float:
        return self.c2 * eps / k**self.beta_k_exponent

    def sample_size(self, n: int, beta: float) -> int:
        raw = self.c * np.log(max(n, 2)) * beta ** (-self.t_exponent)
        return int(max(1, min(np.ceil(raw), self.t_cap, 10 * n)))

    @classmethod
    def theorem_grade(cls) -> "Constants":
        big = 10**9
        return cls(
            c=1.0,
            t_exponent=9.0,
            t_cap=big,
            c1=1.0,
            c2=1.0,
            c3=1.0,
            p_coeff=1.0,
            q_coeff=1.0,
            q_eps_exponent=6.0,
            q_k_exponent=18.0,
            sample_multiplier=1.0,
            s_multiplier=1.0,
            s_cap=big,
            p_multiplier=1.0,
            p_cap=big,
            m_multiplier=1.0,
            m_cap=big,
            crux_slack=1.0,
            plan_budget=big,
            sample_enum_budget=big,
            brute_kcc_budget=big,
        )


DESK = Constants()
THEOREM_GRADE = Constants.theorem_grade()


# ---------------------------------------------------------------------------
# query counting
# ---------------------------------------------------------------------------


class QueryCounter:
    """Monotone raw / deduplicated pair-read counters, safe under threads."""

    def __init__(self, n: int):
        self._n = n
        self._seen = np.zeros((n, n), dtype=bool)
        self._raw = 0
        self._dedup = 0
        self._lock = threading.Lock()

    @property
    def raw(self) -> int:
        return self._raw

    @property
    def dedup(self) -> int:
        return self._dedup

    def snapshot(self) -> tuple[int, int]:
        with self._lock:
            return self._raw, self._dedup

    def record(self, u: int, v: int) -> None:
        with self._lock:
            self._raw += 1
            if not self._seen[u, v]:
                self._seen[u, v] = True
                self._seen[v, u] = True
                self._dedup += 1

    def record_pairs(self, us: np.ndarray, vs: np.ndarray) -> None:
        with self._lock:
            self._raw += len(us)
            fresh = ~self._seen[us, vs]
            if fresh.any():
                fu, fv = us[fresh], vs[fresh]
                keys = np.minimum(fu, fv) * self._n + np.maximum(fu, fv)
                self._dedup += int(np.unique(keys).size)
                self._seen[fu, fv] = True
                self._seen[fv, fu] = True


def _check_pair(n: int, u: int, v: int) -> None:
    if u == v:
        raise ValueError(f"pair ({u},{v}) is a self-loop")
    if not (0 <= u < n and 0 <= v < n):
        raise ValueError(f"pair ({u},{v}) out of range for n={n}")


class LabeledGraph:
    """Undirected edge/non-edge labels over all pairs, behind a query counter."""

    def __init__(self, adjacency: np.ndarray):
        adj = np.array(adjacency, dtype=bool)
        if adj.ndim != 2 or adj.shape[0] != adj.shape[1]:
            raise ValueError("adjacency must be square")
        if adj.diagonal().any():
            raise ValueError("self pairs carry no label")
        if not np.array_equal(adj, adj.T):
            raise ValueError("labels must be symmetric")
        adj.setflags(write=False)
        self._adj = adj
        self.queries = QueryCounter(adj.shape[0])

    @property
    def n(self) -> int:
        return self._adj.shape[0]

    # counted access -------------------------------------------------------
    def label(self, u: int, v: int) -> bool:
        _check_pair(self.n, u, v)
        self.queries.record(u, v)
        return bool(self._adj[u, v])

    def labels(self, us: np.ndarray, vs: np.ndarray) -> np.ndarray:
        us = np.asarray(us, dtype=np.intp)
        vs = np.asarray(vs, dtype=np.intp)
        if (us == vs).any():
            raise ValueError("self pairs carry no label")
        self.queries.record_pairs(us, vs)
        return self._adj[us, vs]

    # privileged access (oracles and tests only) ----------------------------
    def peek_label(self, u: int, v: int) -> bool:
        _check_pair(self.n, u, v)
        return bool(self._adj[u, v])

    def label_matrix(self) -> np.ndarray:
        return self._adj


class Tournament:
    """One orientation per pair, behind a query counter."""

    def __init__(self, arcs: np.ndarray):
        a = np.array(arcs, dtype=bool)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError("arc matrix must be square")
        if a.diagonal().any():
            raise ValueError("self pairs carry no orientation")
        both = a & a.T
        neither = ~(a | a.T) & ~np.eye(a.shape[0], dtype=bool)
        if both.any() or neither.any():
            raise ValueError("exactly one of (u,v),(v,u) must be oriented")
        a.setflags(write=False)
        self._arcs = a
        self.queries = QueryCounter(a.shape[0])

    @property
    def n(self) -> int:
        return self._arcs.shape[0]

    def direction(self, u: int, v: int) -> bool:
        """True iff the pair is oriented u -> v.  Counted."""
        _check_pair(self.n, u, v)
        self.queries.record(u, v)
        return bool(self._arcs[u, v])

    def directions(self, us: np.ndarray, vs: np.ndarray) -> np.ndarray:
        us = np.asarray(us, dtype=np.intp)
        vs = np.asarray(vs, dtype=np.intp)
        if (us == vs).any():
            raise ValueError("self pairs carry no orientation")
        self.queries.record_pairs(us, vs)
        return self._arcs[us, vs]

    # privileged access (oracles and tests only) ----------------------------
    def peek_direction(self, u: int, v: int) -> bool:
        _check_pair(self.n, u, v)
        return bool(self._arcs[u, v])

    def direction_matrix(self) -> np.ndarray:
        return self._arcs


def query_label(graph: LabeledGraph, u: int, v: int) -> bool:
    return graph.label(u, v)


def query_direction(tournament: Tournament, u: int, v: int) -> bool:
    return tournament.direction(u, v)


def query_labels(graph: LabeledGraph, us: np.ndarray, vs: np.ndarray) -> np.ndarray:
    return graph.labels(us, vs)


def query_directions(tournament: Tournament, us: np.ndarray, vs: np.ndarray) -> np.ndarray:
    return tournament.directions(us, vs)


# ---------------------------------------------------------------------------
# solution representations
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Clustering:
    """Total assignment of vertices into k clusters (empty clusters allowed)."""

    k: int
    assign: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.assign, dtype=np.intp)
        a.setflags(write=False)
        object.__setattr__(self, "assign", a)
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if a.ndim != 1:
            raise ValueError("assignment must be a vector")
        if a.size and (a.min() < 0 or a.max() >= self.k):
            raise ValueError("cluster ids must lie in [0, k)")

    @property
    def n(self) -> int:
        return self.assign.size

    def sizes(self) -> np.ndarray:
        return np.bincount(self.assign, minlength=self.k)

    def members(self, j: int) -> np.ndarray:
        return np.flatnonzero(self.assign == j)


@dataclass(frozen=True)
class Permutation:
    """Bijective ranks: ``ranks[v]`` is the position of vertex v."""

    ranks: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.ranks, dtype=np.intp)
        r.setflags(write=False)
        object.__setattr__(self, "ranks", r)
        if sorted(r.tolist()) != list(range(r.size)):
            raise ValueError("ranks must be a bijection onto [0, n)")

    @property
    def n(self) -> int:
        return self.ranks.size

    def order(self) -> np.ndarray:
        """Vertices listed from first position to last."""
        return np.argsort(self.ranks, kind="stable")


@dataclass(frozen=True)
class MultiSample:
    """Ordered i.i.d. vertex draws with repetitions, tied to the seed used."""

    items: np.ndarray
    seed: int

    def __post_init__(self):
        it = np.asarray(self.items, dtype=np.intp)
        it.setflags(write=False)
        object.__setattr__(self, "items", it)

    def __len__(self) -> int:
        return self.items.size

    def distinct(self) -> np.ndarray:
        return np.unique(self.items)

    def multiplicities(self) -> tuple[np.ndarray, np.ndarray]:
        """Distinct vertices and their draw counts, vertex-sorted."""
        return np.unique(self.items, return_counts=True)

    @classmethod
    def full(cls, n: int) -> "MultiSample":
        """Every vertex exactly once; the degenerate exact-mode sample."""
        return cls(items=np.arange(n), seed=-1)


@dataclass(frozen=True)
class GroundTruth:
    """Planted solution behind a generated instance."""

    solution: Clustering | Permutation
    noise_rate: float
    flipped_pairs: int


# ---------------------------------------------------------------------------
# generators
# ---------------------------------------------------------------------------


def _pair_indices(n: int) -> tuple[np.ndarray, np.ndarray]:
    return np.triu_indices(n, k=1)


def gen_planted_clustering(
    n: int, k: int, noise_rate: float, seed: int
) -> tuple[LabeledGraph, GroundTruth]:
    """Clique-union graph of a balanced random k-clustering with flipped pairs.

    Every unordered pair's label is flipped independently with probability
    ``noise_rate``; the planted clustering's cost is exactly the flip count.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if not 1 <= k <= n:
        raise ValueError("need 1 <= k <= n")
    if not 0.0 <= noise_rate <= 1.0:
        raise ValueError("noise_rate must be a probability")
    rng = np.random.default_rng(seed)
    shuffled = rng.permutation(n)
    assign = np.empty(n, dtype=np.intp)
    # balanced planting: sizes differ by at most one
    assign[shuffled] = np.arange(n) % k
    same = assign[:, None] == assign[None, :]
    np.fill_diagonal(same, False)
    iu, ju = _pair_indices(n)
    flips = rng.random(iu.size) < noise_rate
    adj = same.copy()
    adj[iu[flips], ju[flips]] = ~adj[iu[flips], ju[flips]]
    adj[ju[flips], iu[flips]] = adj[iu[flips], ju[flips]]
    graph = LabeledGraph(adj)
    truth = GroundTruth(Clustering(k, assign), noise_rate, int(flips.sum()))
    return graph, truth


def gen_planted_tournament(
    n: int, flip_rate: float, seed: int
) -> tuple[Tournament, GroundTruth]:
    """Transitive tournament of a random permutation with flipped directions."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if not 0.0 <= flip_rate <= 1.0:
        raise ValueError("flip_rate must be a probability")
    rng = np.random.default_rng(seed)
    ranks = np.empty(n, dtype=np.intp)
    ranks[rng.permutation(n)] = np.arange(n)
    arcs = ranks[:, None] < ranks[None, :]
    iu, ju = _pair_indices(n)
    flips = rng.random(iu.size) < flip_rate
    fi, fj = iu[flips], ju[flips]
    arcs[fi, fj] = ~arcs[fi, fj]
    arcs[fj, fi] = ~arcs[fi, fj]
    tournament = Tournament(arcs)
    truth = GroundTruth(Permutation(ranks), flip_rate, int(flips.sum()))
    return tournament, truth


def transitive_tournament(n: int) -> tuple[Tournament, GroundTruth]:
    """The identity-order transitive tournament: u -> v iff u < v."""
    ranks = np.arange(n)
    arcs = ranks[:, None] < ranks[None, :]
    return Tournament(arcs), GroundTruth(Permutation(ranks), 0.0, 0)


# ---------------------------------------------------------------------------
# file I/O
# ---------------------------------------------------------------------------


def save_instance(instance: LabeledGraph | Tournament, path: str | Path) -> None:
    """Write the text format: a header, then one line per unordered pair."""
    path = Path(path)
    lines = []
    if isinstance(instance, LabeledGraph):
        n = instance.n
        lines.append(f"kcc {n}")
        adj = instance.label_matrix()
        for u in range(n):
            for v in range(u + 1, n):
                lines.append(f"{u} {v} {int(adj[u, v])}")
    elif isinstance(instance, Tournament):
        n = instance.n
        lines.append(f"mfast {n}")
        arcs = instance.direction_matrix()
        for u in range(n):
            for v in range(u + 1, n):
                if arcs[u, v]:
                    lines.append(f"{u} {v}")
                else:
                    lines.append(f"{v} {u}")
    else:
        raise TypeError(f"cannot save {type(instance).__name__}")
    path.write_text("\n".join(lines) + "\n")


def _bad_line(line: str, kind: str) -> InstanceFormatError:
    return InstanceFormatError(f"bad {kind} pair line: {line!r}")


def _parse_header(line: str) -> tuple[str, int]:
    parts = line.split()
    if len(parts) != 2 or parts[0] not in ("kcc", "mfast"):
        raise MalformedHeaderError(f"bad header: {line!r}")
    try:
        n = int(parts[1])
    except ValueError:
        raise MalformedHeaderError(f"bad vertex count in header: {line!r}") from None
    if n < 1:
        raise MalformedHeaderError(f"vertex count must be positive: {line!r}")
    return parts[0], n


def load_instance(path: str | Path) -> LabeledGraph | Tournament:
    """Parse an instance file; raises a distinct error per defect class."""
    raw = Path(path).read_text().splitlines()
    lines = [ln.strip() for ln in raw if ln.strip()]
    if not lines:
        raise MalformedHeaderError("empty file")
    kind, n = _parse_header(lines[0])
    seen = np.zeros((n, n), dtype=bool)
    adj = np.zeros((n, n), dtype=bool)
    for ln in lines[1:]:
        parts = ln.split()
        want = 3 if kind == "kcc" else 2
        if len(parts) != want:
            raise _bad_line(ln, kind)
        try:
            nums = [int(p) for p in parts]
        except ValueError:
            raise _bad_line(ln, kind) from None
        u, v = nums[0], nums[1]
        if u == v:
            raise SelfLoopError(f"self pair: {ln!r}")
        if not (0 <= u < n and 0 <= v < n):
            raise _bad_line(ln, kind)
        if seen[u, v]:
            raise DuplicatePairError(f"pair ({u},{v}) listed twice")
        seen[u, v] = seen[v, u] = True
        if kind == "kcc":
            if nums[2] not in (0, 1):
                raise _bad_line(ln, kind)
            adj[u, v] = adj[v, u] = bool(nums[2])
        else:
            adj[u, v] = True
    iu, ju = _pair_indices(n)
    if not seen[iu, ju].all():
        missing = np.flatnonzero(~seen[iu, ju])[0]
        raise MissingPairError(f"pair ({iu[missing]},{ju[missing]}) has no line")
    if kind == "kcc":
        return LabeledGraph(adj)
    return Tournament(adj)


def save_ground_truth(truth: GroundTruth, path: str | Path) -> None:
    """Sidecar: one line per vertex with its cluster id or rank."""
    sol = truth.solution
    values = sol.assign if isinstance(sol, Clustering) else sol.ranks
    Path(path).write_text("\n".join(str(int(x)) for x in values) + "\n")


def load_ground_truth(path: str | Path) -> np.ndarray:
    lines = [ln.strip() for ln in Path(path).read_text().splitlines() if ln.strip()]
    return np.array([int(ln) for ln in lines], dtype=np.intp)
