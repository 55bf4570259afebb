"""Structured run reports: what was solved, which branch, at what query cost."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field


@dataclass
class LevelRecord:
    """One recursion level of the clustering scheme."""

    n: int
    k: int
    eps: float
    beta: float
    ell: int
    sizes: list[int]
    queries_raw: int
    queries_dedup: int


@dataclass
class SolveReport:
    """Outcome of one dispatch run; serialized as JSON text.

    ``wall_ms`` is the only field expected to differ between identical
    reruns; compare with :meth:`canonical_json`.
    """

    problem: str
    n: int
    k: int | None
    eps: float
    branch: str
    cost_estimate: float | None
    cost_exact: int | None
    queries_raw: int
    queries_dedup: int
    seed: int
    wall_ms: float | None = None
    trace: list[LevelRecord] = field(default_factory=list)

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, indent=2)

    def canonical_json(self) -> str:
        """Serialization with the wall clock stripped, for rerun comparison."""
        data = asdict(self)
        data.pop("wall_ms")
        return json.dumps(data, sort_keys=True, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "SolveReport":
        data = json.loads(text)
        trace = [LevelRecord(**lvl) for lvl in data.pop("trace", [])]
        return cls(trace=trace, **data)
