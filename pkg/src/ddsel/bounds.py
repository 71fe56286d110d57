"""Data-driven caps on coefficients and fitted values.

The big-M formulation is only as strong as its constants, so everything
here exists to shrink them: per-coordinate extremes of the polytope,
iterative tightening under a box and a support-budget, fitted-value
extremes, and the cheap warm-start-scaled variants used when the LP
route is too expensive or the polytope is unbounded.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .core import ProblemData, Solution, ZERO_TOL
from .exceptions import (
    InconsistentBounds,
    InfeasibleAugmentedPolytope,
    UnboundedCoordinate,
)
from .lp import PolytopeLp

DEFAULT_BIG_M = 1e3
REFINE_ROUNDS = 5
REFINE_REL_TOL = 1e-3


@dataclass(frozen=True)
class BoundSet:
    """Valid caps for the mixed-integer model.

    ``coef_upper[j]`` bounds |beta_j|, ``l1_budget`` bounds ||beta||_1,
    ``pred_upper[i]`` bounds |x_i' beta| and ``pred_l1_budget`` bounds
    ||X beta||_1, each for every optimal beta the caps were derived for.
    Absent pieces are simply not imposed.
    """

    coef_upper: np.ndarray
    l1_budget: Optional[float] = None
    pred_upper: Optional[np.ndarray] = None
    pred_l1_budget: Optional[float] = None
    provenance: str = "manual"

    def __post_init__(self):
        cu = np.asarray(self.coef_upper, dtype=float).reshape(-1)
        object.__setattr__(self, "coef_upper", cu)
        if cu.size == 0 or not np.all(np.isfinite(cu)) or np.any(cu < 0):
            raise InconsistentBounds("coef_upper must be finite and nonnegative")
        if self.l1_budget is not None:
            if not np.isfinite(self.l1_budget) or self.l1_budget < 0:
                raise InconsistentBounds("l1_budget must be finite and nonnegative")
        if self.pred_upper is not None:
            pu = np.asarray(self.pred_upper, dtype=float).reshape(-1)
            object.__setattr__(self, "pred_upper", pu)
            if not np.all(np.isfinite(pu)) or np.any(pu < 0):
                raise InconsistentBounds("pred_upper must be finite and nonnegative")
        if self.pred_l1_budget is not None:
            if not np.isfinite(self.pred_l1_budget) or self.pred_l1_budget < 0:
                raise InconsistentBounds("pred_l1_budget must be finite and nonnegative")

    def scaled(self, factor: float) -> "BoundSet":
        """Every cap multiplied by ``factor`` (the doubling fallback)."""
        if factor <= 0 or not np.isfinite(factor):
            raise InconsistentBounds("scale factor must be positive and finite")
        return BoundSet(
            coef_upper=self.coef_upper * factor,
            l1_budget=None if self.l1_budget is None else self.l1_budget * factor,
            pred_upper=None if self.pred_upper is None else self.pred_upper * factor,
            pred_l1_budget=(
                None if self.pred_l1_budget is None else self.pred_l1_budget * factor
            ),
            provenance=self.provenance,
        )

    def without_prediction(self) -> "BoundSet":
        return replace(self, pred_upper=None, pred_l1_budget=None)


def _coordinate_extremes(poly: PolytopeLp, p: int, label: str):
    """max |beta_j| per coordinate from 2p warm-chained LP solves."""
    out = np.empty(p)
    state = None
    for j in range(p):
        c = np.zeros(p)
        hi_lo = []
        for sign in (-1.0, 1.0):
            c[j] = sign
            run = poly.minimize_linear(c, state=state)
            if run.status == "unbounded":
                raise UnboundedCoordinate(j)
            if run.status != "optimal":
                raise InfeasibleAugmentedPolytope(
                    f"{label} solve for coordinate {j} ended {run.status}"
                )
            state = run.state
            hi_lo.append(abs(run.value))
            c[j] = 0.0
        out[j] = max(hi_lo)
    return out


def coef_bounds(problem: ProblemData) -> BoundSet:
    """Per-coordinate extremes of the bare polytope.

    Solves max and min of each beta_j; valid for every feasible point,
    hence for every optimum.  Raises UnboundedCoordinate when the
    polytope has a recession direction touching some coordinate, which
    is the normal state of affairs when n < p.
    """
    poly = PolytopeLp(problem.gram, problem.correlations, problem.delta)
    cu = _coordinate_extremes(poly, problem.p, "coefficient bound")
    return BoundSet(coef_upper=cu, provenance="lp")


def coef_bounds_refined(
    problem: ProblemData,
    support_cap: int,
    box_init: Optional[float] = None,
    max_rounds: int = REFINE_ROUNDS,
    rel_tol: float = REFINE_REL_TOL,
) -> BoundSet:
    """Iteratively tightened coordinate caps for support-limited optima.

    Valid for optima with at most ``support_cap`` nonzeros and sup-norm
    at most ``box_init``.  Each round solves the 2p coordinate LPs over
    the polytope intersected with the current box and the L1 budget
    ``support_cap * box``, then shrinks the box to the largest cap seen.
    Stops when the box moves by less than ``rel_tol`` relatively or
    after ``max_rounds`` rounds.
    """
    if support_cap < 1 or support_cap > problem.p:
        raise InconsistentBounds(f"support_cap {support_cap} outside [1, {problem.p}]")
    if box_init is None:
        base = coef_bounds(problem)  # may raise UnboundedCoordinate
        box = float(np.max(base.coef_upper))
    else:
        box = float(box_init)
        if box <= 0 or not np.isfinite(box):
            raise InconsistentBounds("box_init must be positive and finite")
    cu = np.full(problem.p, box)
    for _ in range(max_rounds):
        poly = PolytopeLp(
            problem.gram,
            problem.correlations,
            problem.delta,
            box=box,
            l1_budget=support_cap * box,
        )
        if not poly.feasible():
            raise InfeasibleAugmentedPolytope(
                f"no feasible point with sup-norm <= {box} and the budget row"
            )
        cu = _coordinate_extremes(poly, problem.p, "refined coefficient bound")
        new_box = float(np.max(cu))
        done = abs(new_box - box) <= rel_tol * max(box, 1e-12)
        box = new_box
        if done:
            break
    return BoundSet(
        coef_upper=cu,
        l1_budget=l1_budget_from_coef(cu, support_cap),
        provenance="lp",
    )


def l1_budget_from_coef(coef_upper, support_cap: int) -> float:
    """Sum of the ``support_cap`` largest coordinate caps: an L1 budget
    valid for any point with that many nonzeros inside the caps."""
    cu = np.asarray(coef_upper, dtype=float).reshape(-1)
    if support_cap < 1 or support_cap > cu.size:
        raise InconsistentBounds(f"support_cap {support_cap} outside [1, {cu.size}]")
    return float(np.sort(cu)[::-1][:support_cap].sum())


def prediction_bounds(
    problem: ProblemData,
    box: Optional[float] = None,
    support_cap: Optional[int] = None,
) -> np.ndarray:
    """Extremes of each fitted value x_i' beta over the (augmented) polytope.

    With ``box`` (and optionally ``support_cap``) the polytope is
    intersected with the sup-norm box and the budget row before the 2n
    LPs run; without them the bare polytope is used, which is typically
    unbounded when n < p.
    """
    budget = None
    if box is not None and support_cap is not None:
        budget = support_cap * box
    poly = PolytopeLp(
        problem.gram, problem.correlations, problem.delta, box=box, l1_budget=budget
    )
    if not poly.feasible():
        raise InfeasibleAugmentedPolytope("no feasible point under the given box")
    X = problem.design.entries
    n = problem.n
    out = np.empty(n)
    state = None
    for i in range(n):
        vals = []
        for sign in (-1.0, 1.0):
            run = poly.minimize_linear(sign * X[i], state=state)
            if run.status == "unbounded":
                raise UnboundedCoordinate(i)
            if run.status != "optimal":
                raise InfeasibleAugmentedPolytope(
                    f"fitted-value solve for row {i} ended {run.status}"
                )
            state = run.state
            vals.append(abs(run.value))
        out[i] = max(vals)
    return out


def warm_start_bounds(
    problem: ProblemData,
    warm,
    tau: float = 2.0,
    fallback_big_m: float = DEFAULT_BIG_M,
) -> BoundSet:
    """Caps scaled off a trusted feasible point instead of LP solves.

    With beta0 the warm point and tau a safety factor (1.5 or 2 are the
    sensible choices): every coordinate capped at tau * ||beta0||_inf,
    the L1 norm at tau * min(||beta0||_0 ||beta0||_inf, ||beta0||_1),
    and the fitted values at tau * ||X beta0||_inf, the latter also used
    as the fitted-value L1 budget.  These are heuristic caps: they can
    cut off optima, which is why the solver pairs them with a doubling
    fallback.  A degenerate all-zero warm point falls back to a flat
    ``fallback_big_m``.
    """
    if tau < 1.0 or not np.isfinite(tau):
        raise InconsistentBounds("tau must be >= 1")
    beta0 = warm.beta if isinstance(warm, Solution) else np.asarray(warm, dtype=float)
    beta0 = beta0.reshape(-1)
    if beta0.shape[0] != problem.p:
        raise InconsistentBounds("warm point length disagrees with problem")
    sup = float(np.max(np.abs(beta0), initial=0.0))
    if sup <= ZERO_TOL:
        return BoundSet(
            coef_upper=np.full(problem.p, fallback_big_m),
            provenance="warm_start_degenerate",
        )
    n0 = int(np.count_nonzero(np.abs(beta0) > ZERO_TOL))
    l1 = float(np.sum(np.abs(beta0)))
    fit_sup = float(np.max(np.abs(problem.design.entries @ beta0), initial=0.0))
    return BoundSet(
        coef_upper=np.full(problem.p, tau * sup),
        l1_budget=tau * min(n0 * sup, l1),
        pred_upper=np.full(problem.n, tau * fit_sup),
        pred_l1_budget=tau * fit_sup,
        provenance="warm_start",
    )
