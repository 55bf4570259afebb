"""Exception types shared across the package."""


class QptasError(Exception):
    """Base class for package errors."""


class InstanceFormatError(QptasError, ValueError):
    """Malformed instance file."""


class MalformedHeaderError(InstanceFormatError):
    """Header line is not ``kcc n`` or ``mfast n``."""


class SelfLoopError(InstanceFormatError):
    """A pair line names the same vertex twice."""


class DuplicatePairError(InstanceFormatError):
    """The same unordered pair appears on two lines."""


class MissingPairError(InstanceFormatError):
    """Some unordered pair has no line."""


class BudgetExceededError(QptasError):
    """An exhaustive enumeration would exceed its configured budget."""


class LpInfeasibleError(QptasError):
    """The linear program has no feasible point."""


class SimplexCycleError(QptasError):
    """The simplex iteration guard was exceeded."""


class PlanBudgetError(QptasError):
    """An enumeration plan cannot fit in its guess budget."""


class EmptyCandidateError(QptasError):
    """Every enumeration guess produced an infeasible model."""


class UnknownConstantError(QptasError, KeyError):
    """A constants override names no known field."""


class InvariantError(QptasError):
    """An internal invariant was violated (CLI exit code 4)."""
