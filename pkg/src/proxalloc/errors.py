"""Exception types raised across the library.

Validation failures subclass ValueError so they behave like ordinary
argument errors; iteration failures subclass RuntimeError and carry the
last iterate (and report, when available) so callers can inspect or
resume a stalled solve.
"""


class ProxallocError(Exception):
    pass


class NotPositiveDefinite(ProxallocError, ValueError):
    pass


class NoSignChange(ProxallocError, ValueError):
    pass


class OutOfDomain(ProxallocError, ValueError):
    pass


class NegativeLambda(ProxallocError, ValueError):
    pass


class NegativeCost(ProxallocError, ValueError):
    pass


class InvertedBounds(ProxallocError, ValueError):
    pass


class DimensionMismatch(ProxallocError, ValueError):
    pass


class DegenerateSet(ProxallocError, ValueError):
    pass


class UnsupportedNorm(ProxallocError, ValueError):
    pass


class NonPositiveWeight(ProxallocError, ValueError):
    pass


class BadK(ProxallocError, ValueError):
    pass


class ZeroScale(ProxallocError, ValueError):
    pass


class ZeroColumn(ProxallocError, ValueError):
    pass


class NonPositiveDiagonal(ProxallocError, ValueError):
    pass


class NonPositiveStart(ProxallocError, ValueError):
    pass


class NonPositiveVariance(ProxallocError, ValueError):
    pass


class BadDims(ProxallocError, ValueError):
    pass


class TargetUnreachable(ProxallocError, ValueError):
    pass


class UnreachableDiversification(ProxallocError, ValueError):
    pass


class IterationError(ProxallocError, RuntimeError):
    """Base for solver-loop failures; may carry the last iterate."""

    def __init__(self, message, last=None, report=None):
        super().__init__(message)
        self.last = last
        self.report = report


class MaxIterExceeded(IterationError):
    pass


class MaxCyclesExceeded(IterationError):
    pass


class EmptySetSuspected(IterationError):
    pass


class InfeasibleSuspected(IterationError):
    pass


class IndefiniteUnhandled(IterationError):
    pass


class FormulationDisagreement(IterationError):
    pass


class InfeasibleTargets(IterationError):
    """Return/volatility targets that no admissible portfolio satisfies."""
