"""Exception hierarchy.

Every failure class the CLI reports as machine-readable JSON maps to one of
these; ``code`` is the short identifier written into that JSON.
"""


class PwaReachError(Exception):
    code = "error"


class DimensionMismatch(PwaReachError, ValueError):
    code = "dimension"


class ZeroNormal(PwaReachError, ValueError):
    code = "zero-normal"


class NotContinuous(PwaReachError):
    code = "continuity"


class NotHurwitz(PwaReachError):
    code = "hurwitz"


class InvalidAlpha(PwaReachError, ValueError):
    code = "alpha"


class AllInfeasible(PwaReachError):
    code = "infeasible"

    def __init__(self, message, trace_curve=None):
        super().__init__(message)
        self.trace_curve = trace_curve or []


class AuditFailed(PwaReachError):
    code = "audit-failed"

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class EmptyLevelSet(PwaReachError, ValueError):
    code = "empty-level-set"


class DimensionUnsupported(PwaReachError, ValueError):
    code = "dimension-unsupported"


class NonFiniteState(PwaReachError, FloatingPointError):
    code = "non-finite"


class ParseError(PwaReachError, ValueError):
    code = "parse"
