"""Problem containers and scalar primitives shared by every solver.

The estimation problem throughout the package is sparse linear regression
through the Dantzig polytope: find a coefficient vector beta whose
correlation residual ``X'(y - X beta)`` is small in the sup norm.  The
L0 solvers minimize the support size subject to that constraint, the L1
baseline minimizes the L1 norm subject to the same constraint.

Everything downstream works with the Gram form: ``Q = X'X`` and
``d = X'y``.  The residual map is then ``d - Q beta`` and never touches
the raw design again, which keeps per-iteration cost at O(p^2).

Indices are 0-based everywhere in code.  The JSON wire format produced
by :mod:`ddsel.io` reports supports 1-based.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence, Tuple

import numpy as np

from .exceptions import (
    ConstantColumn,
    DimensionMismatch,
    RankDeficient,
)

# A coefficient is treated as zero when its magnitude is at or below this.
ZERO_TOL = 1e-7
# Constraint slack allowed when classifying a point as feasible.
FEAS_TOL = 1e-7
# Relative diagonal drop in R at which a refit is declared rank deficient.
COND_TOL = 1e-10


def _as_matrix(X) -> np.ndarray:
    X = np.ascontiguousarray(X, dtype=float)
    if X.ndim != 2:
        raise DimensionMismatch(f"design must be 2-D, got shape {X.shape}")
    if X.shape[0] < 1 or X.shape[1] < 1:
        raise DimensionMismatch(f"design must be nonempty, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise DimensionMismatch("design contains non-finite entries")
    return X


def _as_vector(v, length: Optional[int] = None, name: str = "vector") -> np.ndarray:
    v = np.ascontiguousarray(v, dtype=float).reshape(-1)
    if length is not None and v.shape[0] != length:
        raise DimensionMismatch(
            f"{name} has length {v.shape[0]}, expected {length}"
        )
    if not np.all(np.isfinite(v)):
        raise DimensionMismatch(f"{name} contains non-finite entries")
    return v


@dataclass(frozen=True)
class DesignMatrix:
    """An n-by-p design with cached column norms."""

    entries: np.ndarray
    column_norms: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        X = _as_matrix(self.entries)
        object.__setattr__(self, "entries", X)
        object.__setattr__(
            self, "column_norms", np.linalg.norm(X, axis=0)
        )

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    @property
    def p(self) -> int:
        return self.entries.shape[1]


def standardize(design, response=None):
    """Center columns to mean zero and scale them to unit L2 norm.

    Parameters
    ----------
    design : array or DesignMatrix
        Raw n-by-p design.
    response : array, optional
        Length-n response; when given it is mean-centered (not scaled).

    Returns
    -------
    DesignMatrix, or (DesignMatrix, ndarray) when a response was given.

    Raises
    ------
    ConstantColumn
        If some column has zero variance, in which case no unit-norm
        rescaling exists.

    Idempotent: standardizing a standardized design is a no-op up to
    rounding.
    """
    X = _as_matrix(design.entries if isinstance(design, DesignMatrix) else design)
    centered = X - X.mean(axis=0)
    norms = np.linalg.norm(centered, axis=0)
    scale = np.max(np.abs(X), axis=0)
    scale[scale == 0.0] = 1.0
    dead = norms <= 1e-12 * np.sqrt(X.shape[0]) * scale
    if np.any(dead):
        raise ConstantColumn(int(np.argmax(dead)))
    out = DesignMatrix(centered / norms)
    if response is None:
        return out
    y = _as_vector(response, X.shape[0], "response")
    return out, y - y.mean()


@dataclass(frozen=True)
class ProblemData:
    """Design, response, and the polytope half-width delta, in Gram form.

    ``gram`` is X'X and ``correlations`` is X'y; both are computed once at
    construction.  ``delta`` must be nonnegative and finite.
    """

    design: DesignMatrix
    response: np.ndarray
    delta: float
    gram: np.ndarray = field(default=None, repr=False)  # type: ignore[assignment]
    correlations: np.ndarray = field(default=None, repr=False)  # type: ignore[assignment]

    def __post_init__(self):
        design = self.design
        if not isinstance(design, DesignMatrix):
            design = DesignMatrix(design)
            object.__setattr__(self, "design", design)
        y = _as_vector(self.response, design.n, "response")
        object.__setattr__(self, "response", y)
        delta = float(self.delta)
        if not np.isfinite(delta) or delta < 0.0:
            raise DimensionMismatch(f"delta must be finite and >= 0, got {delta}")
        object.__setattr__(self, "delta", delta)
        X = design.entries
        object.__setattr__(self, "gram", X.T @ X)
        object.__setattr__(self, "correlations", X.T @ y)

    @property
    def n(self) -> int:
        return self.design.n

    @property
    def p(self) -> int:
        return self.design.p

    @classmethod
    def from_arrays(cls, X, y, delta: float) -> "ProblemData":
        return cls(DesignMatrix(_as_matrix(X)), y, delta)

    def with_delta(self, delta: float) -> "ProblemData":
        """Same instance at a different polytope width; Gram parts are reused."""
        other = object.__new__(ProblemData)
        object.__setattr__(other, "design", self.design)
        object.__setattr__(other, "response", self.response)
        delta = float(delta)
        if not np.isfinite(delta) or delta < 0.0:
            raise DimensionMismatch(f"delta must be finite and >= 0, got {delta}")
        object.__setattr__(other, "delta", delta)
        object.__setattr__(other, "gram", self.gram)
        object.__setattr__(other, "correlations", self.correlations)
        return other


def residual_inf(problem: ProblemData, beta) -> float:
    """Sup norm of the correlation residual d - Q beta at ``beta``."""
    b = _as_vector(beta, problem.p, "beta")
    return float(np.max(np.abs(problem.correlations - problem.gram @ b)))


def support_of(beta, zero_tol: float = ZERO_TOL) -> Tuple[int, ...]:
    """Indices with magnitude above ``zero_tol``, ascending."""
    b = np.asarray(beta, dtype=float).reshape(-1)
    return tuple(int(j) for j in np.flatnonzero(np.abs(b) > zero_tol))


@dataclass(frozen=True)
class Solution:
    """A candidate coefficient vector together with its certificate data.

    ``objective`` counts entries above ``ZERO_TOL``; ``residual_inf`` is
    the sup norm of d - Q beta; ``delta`` is the constraint level the
    vector was solved for.
    """

    beta: np.ndarray
    support: Tuple[int, ...]
    objective: int
    residual_inf: float
    delta: float

    @classmethod
    def from_beta(cls, problem: ProblemData, beta) -> "Solution":
        b = _as_vector(beta, problem.p, "beta")
        supp = support_of(b)
        return cls(
            beta=b,
            support=supp,
            objective=len(supp),
            residual_inf=residual_inf(problem, b),
            delta=problem.delta,
        )

    def is_feasible(self, feas_tol: float = FEAS_TOL) -> bool:
        return self.residual_inf <= self.delta + feas_tol

    def l1_norm(self) -> float:
        return float(np.sum(np.abs(self.beta)))


def hard_threshold(v, lam: float) -> np.ndarray:
    """Minimize ||b||_0 + (lam/2)||b - v||^2 componentwise.

    Keeps v_j when |v_j| > sqrt(2/lam) and zeroes it otherwise; at the
    tie the zero branch is taken (sparser of the two equal-cost minima).
    """
    v = np.asarray(v, dtype=float)
    if lam <= 0:
        raise ValueError("lam must be positive")
    cut = np.sqrt(2.0 / lam)
    out = np.where(np.abs(v) > cut, v, 0.0)
    return out


def soft_threshold(v, t) -> np.ndarray:
    """Minimize t|b| + (1/2)(b - v)^2 componentwise: shrink v toward 0 by t.

    ``t`` may be a scalar or a vector of per-coordinate thresholds.
    """
    v = np.asarray(v, dtype=float)
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("threshold must be nonnegative")
    return np.sign(v) * np.maximum(np.abs(v) - t, 0.0)


def polish(problem: ProblemData, support: Iterable[int]) -> Solution:
    """Least-squares refit restricted to ``support``, zeros elsewhere.

    Uses a thin QR factorization of the support columns.  Raises
    RankDeficient when the R diagonal collapses below COND_TOL times its
    largest entry, which signals numerically dependent columns.
    """
    supp = sorted(set(int(j) for j in support))
    p = problem.p
    for j in supp:
        if j < 0 or j >= p:
            raise DimensionMismatch(f"support index {j} outside [0, {p})")
    beta = np.zeros(p)
    if supp:
        Xs = problem.design.entries[:, supp]
        Qf, Rf = np.linalg.qr(Xs)
        diag = np.abs(np.diag(Rf))
        if diag.min() < COND_TOL * max(diag.max(), 1e-300):
            raise RankDeficient(
                f"support {supp} has numerically dependent columns"
            )
        coef = np.linalg.solve(Rf, Qf.T @ problem.response)
        beta[supp] = coef
    return Solution.from_beta(problem, beta)


def reference_delta(design, response, beta_star) -> float:
    """Constraint level at which the true coefficients are on the boundary.

    Returns ||X'(y - X beta_star)||_inf, the smallest delta for which
    ``beta_star`` is feasible.  With y = X beta_star + eps this equals
    ||X' eps||_inf, the usual noise-level anchor for delta grids.
    """
    X = design.entries if isinstance(design, DesignMatrix) else _as_matrix(design)
    y = _as_vector(response, X.shape[0], "response")
    b = _as_vector(beta_star, X.shape[1], "beta_star")
    return float(np.max(np.abs(X.T @ (y - X @ b))))
