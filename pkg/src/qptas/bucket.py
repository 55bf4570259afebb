"""Bucket orderings for tournaments and their sampled cost functionals.

An m-bucket ordering maps vertices into m ordered buckets; pairs sharing a
bucket cost nothing, a pair in distinct buckets costs one when the arc points
from the later bucket to the earlier.  Two estimators approximate the cost
from partial reads: one against a single shared sample (whose bucketing is
known by enumeration), one against a per-vertex verification ensemble.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .instances import (
    MultiSample,
    Permutation,
    Tournament,
    derive_seed,
)

__all__ = [
    "BucketOrder",
    "SampleEnsemble",
    "bucket_from_permutation",
    "pair_inversion",
    "pair_cost",
    "move_vertex",
    "extend_to_permutation",
    "make_ensemble",
    "vertex_cost_from_sample",
    "cost_from_sample",
    "vertex_cost_from_ensemble",
    "cost_from_ensemble",
]

STRICT = "strict_bucket"
STAR = "bucket_star"


@dataclass(frozen=True)
class BucketOrder:
    """Assignment of vertices into m ordered buckets.

    ``strict_bucket`` mode enforces n/(2m) <= bucket size <= 2n/m on
    construction; ``bucket_star`` leaves sizes unchecked (the state reached
    by single-vertex moves or fresh LP roundings).
    """

    m: int
    sigma: np.ndarray
    mode: str = STRICT

    def __post_init__(self):
        s = np.asarray(self.sigma, dtype=np.intp)
        s.setflags(write=False)
        object.__setattr__(self, "sigma", s)
        if self.m < 1:
            raise ValueError("m must be >= 1")
        if s.size and (s.min() < 0 or s.max() >= self.m):
            raise ValueError("bucket ids must lie in [0, m)")
        if self.mode not in (STRICT, STAR):
            raise ValueError(f"unknown balance mode {self.mode!r}")
        if self.mode == STRICT:
            n = s.size
            sizes = np.bincount(s, minlength=self.m)
            if n and (sizes.min() < n / (2 * self.m) or sizes.max() > 2 * n / self.m):
                raise ValueError("bucket sizes violate strict balance bounds")

    @property
    def n(self) -> int:
        return self.sigma.size

    def sizes(self) -> np.ndarray:
        return np.bincount(self.sigma, minlength=self.m)


def bucket_from_permutation(pi: Permutation, m: int) -> BucketOrder:
    """Contiguous rank blocks whose sizes differ by at most one."""
    n = pi.n
    if not 1 <= m <= n:
        raise ValueError("need 1 <= m <= n")
    base, extra = divmod(n, m)
    boundaries = np.cumsum([base + 1] * extra + [base] * (m - extra))
    sigma = np.searchsorted(boundaries, pi.ranks, side="right")
    return BucketOrder(m=m, sigma=sigma, mode=STRICT)


def pair_inversion(direction_uv: bool, bu: int, bv: int) -> int:
    """1 iff the buckets order the pair against the arc; same bucket is free."""
    if bu < bv:
        return 0 if direction_uv else 1
    if bv < bu:
        return 1 if direction_uv else 0
    return 0


def pair_cost(tournament: Tournament, u: int, v: int, sigma: BucketOrder) -> int:
    """Counted single-pair cost of the ordering."""
    if u == v:
        raise ValueError("pair cost needs two distinct vertices")
    return pair_inversion(
        tournament.direction(u, v), int(sigma.sigma[u]), int(sigma.sigma[v])
    )


def move_vertex(sigma: BucketOrder, u: int, i: int) -> BucketOrder:
    """Same ordering with u remapped to bucket i; balance is relaxed."""
    if not 0 <= i < sigma.m:
        raise ValueError("target bucket out of range")
    moved = sigma.sigma.copy()
    moved[u] = i
    return BucketOrder(m=sigma.m, sigma=moved, mode=STAR)


def extend_to_permutation(sigma: BucketOrder, tie_break_seed: int | None = None) -> Permutation:
    """A permutation extending the bucket order.

    Within-bucket order is ascending vertex id, which keeps reruns
    reproducible; ``tie_break_seed`` is accepted for interface stability and
    ignored.
    """
    del tie_break_seed
    order = np.lexsort((np.arange(sigma.n), sigma.sigma))
    ranks = np.empty(sigma.n, dtype=np.intp)
    ranks[order] = np.arange(sigma.n)
    return Permutation(ranks)


# ---------------------------------------------------------------------------
# sampled cost functionals
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SampleEnsemble:
    """One independent verification sample per vertex; row u holds u's draws."""

    items: np.ndarray
    seed: int

    def __post_init__(self):
        it = np.asarray(self.items, dtype=np.intp)
        it.setflags(write=False)
        object.__setattr__(self, "items", it)
        if it.ndim != 2:
            raise ValueError("ensemble items must be an (n, p) matrix")

    @property
    def n(self) -> int:
        return self.items.shape[0]

    @property
    def p(self) -> int:
        return self.items.shape[1]

    def sample_for(self, u: int) -> MultiSample:
        return MultiSample(items=self.items[u].copy(), seed=derive_seed(self.seed, f"row{u}"))

    @classmethod
    def full(cls, n: int) -> "SampleEnsemble":
        """Every vertex once in every row; collapses the estimator to exactness."""
        return cls(items=np.tile(np.arange(n), (n, 1)), seed=-1)


def make_ensemble(n: int, p: int, seed: int) -> SampleEnsemble:
    """n independent uniform samples of size p, one per vertex."""
    if p < 1:
        raise ValueError("ensemble sample size must be >= 1")
    rng = np.random.default_rng(seed)
    return SampleEnsemble(items=rng.integers(0, n, size=(n, p)), seed=seed)


def _bucket_lookup(bucket_of, members: np.ndarray) -> np.ndarray:
    if isinstance(bucket_of, Mapping):
        return np.array([bucket_of[int(w)] for w in members], dtype=np.intp)
    return np.asarray(bucket_of, dtype=np.intp)[members]


def vertex_cost_from_sample(
    tournament: Tournament,
    u: int,
    bucket_u: int,
    sample: MultiSample,
    bucket_of,
) -> float:
    """Estimator of u's cost from the shared sample: (n/2s) times the sampled
    pair costs of u against every draw.  Draws equal to u contribute nothing."""
    items = sample.items
    keep = items != u
    total = 0
    if keep.any():
        members, mult = np.unique(items[keep], return_counts=True)
        dirs = tournament.directions(np.full(members.size, u, dtype=np.intp), members)
        bw = _bucket_lookup(bucket_of, members)
        inv = ((bucket_u < bw) & ~dirs) | ((bw < bucket_u) & dirs)
        total = int((mult * inv).sum())
    return tournament.n / (2 * len(sample)) * total


def cost_from_sample(tournament: Tournament, sigma: BucketOrder, sample: MultiSample) -> float:
    """Unbiased estimator of the ordering cost from one shared sample."""
    n = tournament.n
    members, mult = sample.multiplicities()
    us = np.repeat(np.arange(n), members.size)
    vs = np.tile(members, n)
    keep = us != vs
    dirs = np.zeros(us.size, dtype=bool)
    dirs[keep] = tournament.directions(us[keep], vs[keep])
    bu = sigma.sigma[us]
    bv = sigma.sigma[vs]
    inv = (((bu < bv) & ~dirs) | ((bv < bu) & dirs)) & keep
    weighted = inv.reshape(n, members.size).astype(np.int64) @ mult
    return float(n / (2 * len(sample)) * weighted.sum())


def vertex_cost_from_ensemble(
    tournament: Tournament,
    u: int,
    bucket_u: int,
    sigma_of,
    ensemble: SampleEnsemble,
) -> float:
    """Estimator of u's cost from its own verification sample."""
    items = ensemble.items[u]
    keep = items != u
    total = 0
    if keep.any():
        members, mult = np.unique(items[keep], return_counts=True)
        dirs = tournament.directions(np.full(members.size, u, dtype=np.intp), members)
        bw = _bucket_lookup(sigma_of, members)
        inv = ((bucket_u < bw) & ~dirs) | ((bw < bucket_u) & dirs)
        total = int((mult * inv).sum())
    return tournament.n / (2 * ensemble.p) * total


def cost_from_ensemble(
    tournament: Tournament, sigma: BucketOrder, ensemble: SampleEnsemble
) -> float:
    """Unbiased estimator of the ordering cost from the per-vertex ensemble."""
    n = tournament.n
    p = ensemble.p
    us = np.repeat(np.arange(n), p)
    vs = ensemble.items.reshape(-1)
    keep = us != vs
    dirs = np.zeros(us.size, dtype=bool)
    dirs[keep] = tournament.directions(us[keep], vs[keep])
    bu = sigma.sigma[us]
    bv = sigma.sigma[vs]
    inv = (((bu < bv) & ~dirs) | ((bv < bu) & dirs)) & keep
    return float(n / (2 * p) * inv.sum())
