"""Exception types raised across the package.

Everything derives from DdselError so callers can catch the package's
failures with a single except clause.  Subclasses carry enough context
(coordinate indices, residuals) to be actionable in logs.
"""


class DdselError(Exception):
    """Base class for all errors raised by ddsel."""


class DimensionMismatch(DdselError):
    """Array shapes do not line up (design vs. response vs. coefficient)."""


class ConstantColumn(DdselError):
    """A design column has zero variance, so it cannot be standardized."""

    def __init__(self, column):
        self.column = column
        super().__init__(f"column {column} is constant; cannot standardize")


class RankDeficient(DdselError):
    """Least-squares refit on a support whose columns are numerically dependent."""


class MalformedProblem(DdselError):
    """A linear program with inconsistent shapes, NaNs, or crossed bounds."""


class NumericalBreakdown(DdselError):
    """Simplex basis became singular and could not be repaired."""


class InfeasibleRegion(DdselError):
    """The constraint region of a composite subproblem is empty."""


class MaxIterations(DdselError):
    """Iteration budget exhausted before the convergence test was met.

    The partial result, when one exists, is attached as ``result``.
    """

    def __init__(self, message, result=None):
        self.result = result
        super().__init__(message)


class InfeasibleTheta(DdselError):
    """Stationarity gap queried at a point outside the feasible polytope."""


class InconsistentBounds(DdselError):
    """Bound set with negative or contradictory entries."""


class Infeasible(DdselError):
    """The feasible region of the integer program is empty."""


class UnboundedCoordinate(DdselError):
    """A coefficient is unbounded over the polytope (only possible when n < p)."""

    def __init__(self, coordinate):
        self.coordinate = coordinate
        super().__init__(f"coordinate {coordinate} is unbounded over the polytope")


class InfeasibleAugmentedPolytope(DdselError):
    """Bound-tightening LP became infeasible after adding norm rows."""


class InfeasibleWarmStart(DdselError):
    """Warm-start point violates the polytope and could not be repaired."""


class TooLarge(DdselError):
    """Problem size exceeds a hard enumeration guard."""


class TieAtThreshold(DdselError):
    """A correlation magnitude equals the threshold, so the closed-form
    solution set is not well defined."""


class GammaUnavailable(DdselError):
    """A restricted eigenvalue was required but not supplied or computable."""


class ZeroSignal(DdselError):
    """Relative prediction error is undefined because the true signal is zero."""
