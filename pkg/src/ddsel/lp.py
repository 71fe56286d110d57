"""Linear programming layer: generic solver, polytope LPs, dual prox.

Three levels live here.

* :func:`solve_lp` is a thin contract over the revised simplex engine for
  arbitrary small dense LPs (used by tests and the bound-tightening LPs).
* :class:`PolytopeLp` expresses optimization over one Dantzig polytope
  ``||A beta - b||_inf <= delta`` in split-variable form (beta = b+ - b-)
  and is the workhorse for the L1 baseline, the reweighted iterations,
  the stationarity-gap LP, coefficient bounds, and feasibility probes.
* :func:`dual_prox_solve` minimizes a strongly convex composite objective
  over the same polytope through its dual, by accelerated proximal
  gradient with function-value restarts.  It backs the projection step of
  the alternating-direction heuristic and the large-p route of the
  reweighted solver.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np

from . import simplex
from .core import FEAS_TOL, ProblemData, Solution, soft_threshold
from .exceptions import (
    InfeasibleRegion,
    MalformedProblem,
    MaxIterations,
)

OPTIMAL = simplex.OPTIMAL
INFEASIBLE = simplex.INFEASIBLE
UNBOUNDED = simplex.UNBOUNDED
ITERATION_LIMIT = simplex.ITERATION_LIMIT

# simplex handles the weighted-L1 subproblems up to this dimension;
# beyond it the first-order dual route takes over
SIMPLEX_MAX_P = 500

PROX_TOL = 1e-6
PROX_MAX_ITER = 50_000
POWER_ITERS = 50
EXACT_REG_TAU = 1e-4


# ----------------------------------------------------------------------
# generic LP contract


@dataclass(frozen=True)
class LinearProgram:
    """min objective'x subject to row senses and variable bounds.

    ``row_sense`` holds one of "<=", ">=", "=" per row.  ``bounds`` is an
    (m, 2) array of [lower, upper] pairs; infinities are allowed.
    """

    objective: np.ndarray
    constraint_matrix: np.ndarray
    row_sense: Tuple[str, ...]
    rhs: np.ndarray
    bounds: np.ndarray

    def __post_init__(self):
        c = np.ascontiguousarray(self.objective, dtype=float).reshape(-1)
        A = np.ascontiguousarray(self.constraint_matrix, dtype=float)
        b = np.ascontiguousarray(self.rhs, dtype=float).reshape(-1)
        B = np.ascontiguousarray(self.bounds, dtype=float)
        if A.ndim != 2:
            raise MalformedProblem("constraint matrix must be 2-D")
        k, m = A.shape
        if c.shape[0] != m or b.shape[0] != k or B.shape != (m, 2):
            raise MalformedProblem("objective/rhs/bounds shapes disagree")
        if not (np.all(np.isfinite(c)) and np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
            raise MalformedProblem("non-finite data in LP")
        if np.any(np.isnan(B)):
            raise MalformedProblem("NaN in bounds")
        if np.any(B[:, 0] > B[:, 1]):
            raise MalformedProblem("crossed bounds lo > hi")
        sense = tuple(self.row_sense)
        if len(sense) != k or any(s not in ("<=", ">=", "=") for s in sense):
            raise MalformedProblem("row_sense must be one of <=, >=, = per row")
        object.__setattr__(self, "objective", c)
        object.__setattr__(self, "constraint_matrix", A)
        object.__setattr__(self, "rhs", b)
        object.__setattr__(self, "bounds", B)
        object.__setattr__(self, "row_sense", sense)


@dataclass
class LpSolution:
    """Primal point, objective, equality-form duals, and a warm handle.

    Duals follow the convention reduced_cost = c - A'y, so at optimality
    an active "<=" row carries y_i <= 0 under minimization.  ``basis`` is
    opaque; feed it back through ``solve_lp(..., warm_basis=...)``.
    """

    x: np.ndarray
    objective: float
    duals: np.ndarray
    status: str
    basis: object


def solve_lp(lp: LinearProgram, warm_basis=None) -> LpSolution:
    """Solve a dense LP by bounded-variable revised simplex.

    A valid ``warm_basis`` re-solves from the cached basis and must agree
    with a cold solve on the objective to within rounding; a stale basis
    falls back to a cold start internally.
    """
    A = lp.constraint_matrix
    k, m = A.shape
    n_slack = k
    A_std = np.hstack([A, np.eye(k)])
    lo = np.empty(m + n_slack)
    hi = np.empty(m + n_slack)
    lo[:m] = lp.bounds[:, 0]
    hi[:m] = lp.bounds[:, 1]
    for i, s in enumerate(lp.row_sense):
        if s == "<=":
            lo[m + i], hi[m + i] = 0.0, np.inf
        elif s == ">=":
            lo[m + i], hi[m + i] = -np.inf, 0.0
        else:
            lo[m + i], hi[m + i] = 0.0, 0.0
    c = np.zeros(m + n_slack)
    c[:m] = lp.objective
    engine = simplex.SimplexEngine(A_std, lp.rhs)
    state = getattr(warm_basis, "_state", None) if warm_basis is not None else None
    res = engine.solve(c, lo, hi, state=state)
    handle = _WarmHandle((res.basis, res.vstat), engine_shape=(k, m + n_slack))
    return LpSolution(
        x=res.x[:m],
        objective=res.objective,
        duals=res.duals,
        status=res.status,
        basis=handle,
    )


@dataclass
class _WarmHandle:
    _state: tuple
    engine_shape: tuple


def format_lp(lp: LinearProgram) -> str:
    """Plain-text rendering of a small LP, for debugging."""
    lines = ["min " + "  ".join(f"{v:+.6g} x{j}" for j, v in enumerate(lp.objective))]
    for i in range(lp.constraint_matrix.shape[0]):
        terms = "  ".join(
            f"{v:+.6g} x{j}" for j, v in enumerate(lp.constraint_matrix[i]) if v != 0
        )
        lines.append(f"  {terms} {lp.row_sense[i]} {lp.rhs[i]:.6g}")
    for j, (l, h) in enumerate(lp.bounds):
        lines.append(f"  {l:.6g} <= x{j} <= {h:.6g}")
    return "\n".join(lines)


# ----------------------------------------------------------------------
# split-variable LPs over one Dantzig polytope


@dataclass
class LpRun:
    status: str
    value: float
    beta: Optional[np.ndarray]
    state: object
    iterations: int


class PolytopeLp:
    """LPs over ``||A beta - b||_inf <= delta`` in split-variable form.

    Columns are [beta+ | beta- | row slacks | budget slack]; the ranged
    correlation constraint becomes ``A(b+ - b-) + s = b + delta`` with
    ``0 <= s <= 2 delta``.  An optional box ``|beta_j| <= box_j`` maps to
    upper bounds on the splits and an optional budget row caps
    ``sum(b+ + b-) <= l1_budget``.

    One instance can be re-solved under many objectives; pass the
    ``state`` of a previous run to warm start.
    """

    def __init__(self, A, b, delta, box=None, l1_budget=None):
        A = np.ascontiguousarray(A, dtype=float)
        b = np.ascontiguousarray(b, dtype=float).reshape(-1)
        if A.ndim != 2 or A.shape[0] != b.shape[0]:
            raise MalformedProblem("A and b shapes disagree")
        delta = float(delta)
        if not np.isfinite(delta) or delta < 0:
            raise MalformedProblem("delta must be finite and nonnegative")
        self.k, self.m = A.shape
        self.delta = delta
        self.l1_budget = None if l1_budget is None else float(l1_budget)
        ncols = 2 * self.m + self.k + (1 if self.l1_budget is not None else 0)
        rows = self.k + (1 if self.l1_budget is not None else 0)
        M = np.zeros((rows, ncols))
        M[: self.k, : self.m] = A
        M[: self.k, self.m : 2 * self.m] = -A
        M[: self.k, 2 * self.m : 2 * self.m + self.k] = np.eye(self.k)
        rhs = np.empty(rows)
        rhs[: self.k] = b + delta
        if self.l1_budget is not None:
            M[self.k, : 2 * self.m] = 1.0
            M[self.k, -1] = 1.0
            rhs[self.k] = self.l1_budget
        self.engine = simplex.SimplexEngine(M, rhs)
        self.lo = np.zeros(ncols)
        self.hi = np.full(ncols, np.inf)
        self.hi[2 * self.m : 2 * self.m + self.k] = 2.0 * delta
        if box is not None:
            boxv = np.broadcast_to(np.asarray(box, dtype=float), (self.m,))
            if np.any(boxv < 0):
                raise MalformedProblem("box bound must be nonnegative")
            self.hi[: self.m] = boxv
            self.hi[self.m : 2 * self.m] = boxv
        self.ncols = ncols

    def _bounds_for(self, fixed_zero):
        hi = self.hi
        if fixed_zero is not None and len(fixed_zero) > 0:
            hi = hi.copy()
            idx = np.fromiter((int(j) for j in fixed_zero), dtype=np.int64)
            hi[idx] = 0.0
            hi[idx + self.m] = 0.0
        return self.lo, hi

    def _run(self, c_full, fixed_zero, state, target=None, phase1_only=False) -> LpRun:
        lo, hi = self._bounds_for(fixed_zero)
        res = self.engine.solve(
            c_full, lo, hi, state=state, target=target, phase1_only=phase1_only
        )
        beta = None
        if res.status in (OPTIMAL,):
            beta = res.x[: self.m] - res.x[self.m : 2 * self.m]
        return LpRun(
            status=res.status,
            value=res.objective,
            beta=beta,
            state=(res.basis, res.vstat),
            iterations=res.iterations,
        )

    def minimize_weighted_l1(self, weights, fixed_zero=None, state=None) -> LpRun:
        """min sum_j w_j |beta_j| over the polytope; weights must be >= 0."""
        w = np.broadcast_to(np.asarray(weights, dtype=float), (self.m,))
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise MalformedProblem("weights must be finite and nonnegative")
        c = np.zeros(self.ncols)
        c[: self.m] = w
        c[self.m : 2 * self.m] = w
        return self._run(c, fixed_zero, state)

    def minimize_linear(self, c_beta, fixed_zero=None, state=None) -> LpRun:
        """min c_beta' beta over the polytope (c unrestricted in sign)."""
        cb = np.asarray(c_beta, dtype=float).reshape(-1)
        if cb.shape[0] != self.m:
            raise MalformedProblem("objective length disagrees with beta")
        c = np.zeros(self.ncols)
        c[: self.m] = cb
        c[self.m : 2 * self.m] = -cb
        return self._run(c, fixed_zero, state)

    def feasible(self, fixed_zero=None) -> bool:
        """Phase-I probe: is the polytope (restricted by fixed zeros) nonempty?"""
        c = np.zeros(self.ncols)
        run = self._run(c, fixed_zero, state=None, phase1_only=True)
        return run.status == OPTIMAL

    def feasible_point(self, fixed_zero=None) -> Optional[np.ndarray]:
        """A point of the restricted polytope, or None when it is empty."""
        c = np.zeros(self.ncols)
        run = self._run(c, fixed_zero, state=None, phase1_only=True)
        if run.status != OPTIMAL:
            return None
        return run.beta


def phase1_feasible(A, b, delta, fixed_zero=()) -> bool:
    """Does some beta with the given zero pattern satisfy ||A beta - b||_inf <= delta?

    Pure Phase-I simplex; no objective is ever priced.
    """
    return PolytopeLp(A, b, delta).feasible(fixed_zero)


def solve_l1_dantzig(
    problem: ProblemData,
    delta: Optional[float] = None,
    method: str = "auto",
) -> Solution:
    """L1-norm minimizer over the Dantzig polytope (the convex baseline).

    Parameters
    ----------
    problem : ProblemData
    delta : float, optional
        Overrides ``problem.delta`` when given.
    method : {"auto", "simplex", "prox"}
        "auto" uses exact simplex up to p = 500 and the dual
        proximal-gradient route (with a small exact-regularization term)
        beyond.

    Returns
    -------
    Solution

    Raises
    ------
    InfeasibleRegion
        If the polytope is empty, which cannot happen when delta >= 0 and
        the data are consistent (beta from least squares is feasible); it
        guards against malformed Gram inputs.
    """
    if delta is not None:
        problem = problem.with_delta(delta)
    p = problem.p
    if method == "auto":
        method = "simplex" if p <= SIMPLEX_MAX_P else "prox"
    if method == "simplex":
        lp = PolytopeLp(problem.gram, problem.correlations, problem.delta)
        run = lp.minimize_weighted_l1(np.ones(p))
        if run.status == INFEASIBLE:
            raise InfeasibleRegion("Dantzig polytope is empty")
        if run.status != OPTIMAL:
            raise MaxIterations(f"simplex terminated with status {run.status}")
        return Solution.from_beta(problem, run.beta)
    if method != "prox":
        raise ValueError(f"unknown method {method!r}")
    comp = CompositeProblem(
        cbar=np.zeros(p),
        weights=np.ones(p),
        A=problem.gram,
        b=problem.correlations,
        delta=problem.delta,
        tau=EXACT_REG_TAU,
    )
    res = dual_prox_solve(comp, strict=False)
    return Solution.from_beta(problem, res.alpha)


# ----------------------------------------------------------------------
# dual proximal gradient for composite objectives over the polytope


@dataclass(frozen=True)
class CompositeProblem:
    """(tau/2)||a - cbar||^2 + sum_i w_i |a_i|  over  ||A a - b||_inf <= delta.

    ``tau`` defaults to 1 (plain proximal form).  With ``weights = 0``
    this is Euclidean projection of ``cbar`` onto the polytope; with
    ``cbar = 0`` and small tau it is the exactly-regularized weighted-L1
    minimization whose solution tracks the LP as tau -> 0.
    """

    cbar: np.ndarray
    weights: np.ndarray
    A: np.ndarray
    b: np.ndarray
    delta: float
    tau: float = 1.0

    def __post_init__(self):
        A = np.ascontiguousarray(self.A, dtype=float)
        b = np.ascontiguousarray(self.b, dtype=float).reshape(-1)
        if A.ndim != 2 or A.shape[0] != b.shape[0]:
            raise MalformedProblem("A and b shapes disagree")
        m = A.shape[1]
        cbar = np.ascontiguousarray(self.cbar, dtype=float).reshape(-1)
        w = np.broadcast_to(np.asarray(self.weights, dtype=float), (m,)).copy()
        if cbar.shape[0] != m:
            raise MalformedProblem("cbar length disagrees with A")
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise MalformedProblem("weights must be finite and nonnegative")
        if not np.isfinite(self.delta) or self.delta < 0:
            raise MalformedProblem("delta must be finite and nonnegative")
        if not np.isfinite(self.tau) or self.tau <= 0:
            raise MalformedProblem("tau must be positive")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "cbar", cbar)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "delta", float(self.delta))
        object.__setattr__(self, "tau", float(self.tau))

    def objective(self, alpha) -> float:
        a = np.asarray(alpha, dtype=float)
        return float(
            0.5 * self.tau * np.sum((a - self.cbar) ** 2)
            + np.sum(self.weights * np.abs(a))
        )


@dataclass
class CompositeResult:
    alpha: np.ndarray
    mu: np.ndarray
    primal_objective: float
    dual_objective: float
    kkt_residual: float
    iterations: int
    converged: bool


def spectral_norm_sq(A, iters: int = POWER_ITERS, seed: int = 0) -> float:
    """Largest squared singular value of A, by power iteration on A'A."""
    A = np.asarray(A, dtype=float)
    rng = np.random.Generator(np.random.Philox(key=seed))
    v = rng.standard_normal(A.shape[1])
    nv = np.linalg.norm(v)
    if nv == 0 or A.size == 0:
        return 0.0
    v /= nv
    est = 0.0
    for _ in range(iters):
        w = A.T @ (A @ v)
        nw = np.linalg.norm(w)
        if nw <= 1e-300:
            return 0.0
        est = nw  # Rayleigh quotient of A'A at unit v
        v = w / nw
    return float(est)


def dual_prox_solve(
    problem: CompositeProblem,
    mu0: Optional[np.ndarray] = None,
    prox_tol: float = PROX_TOL,
    max_iter: int = PROX_MAX_ITER,
    accelerate: bool = True,
    strict: bool = True,
) -> CompositeResult:
    """Solve a CompositeProblem through its smooth-plus-L1 dual.

    The dual objective ``g(mu) = g1(mu) - delta ||mu||_1`` is maximized by
    accelerated proximal gradient with step ``1/L`` (L from 50 power
    iterations) and a function-value restart rule; the best dual point
    seen is tracked so the reported dual objective is nondecreasing
    across restarts.  The primal point is recovered from the inner
    soft-threshold map and the KKT residual combines constraint
    violation with the complementarity gap.

    Raises MaxIterations when ``strict`` and the budget runs out before
    ``kkt_residual <= prox_tol``; with ``strict=False`` the flagged
    result is returned instead.
    """
    A = problem.A
    b = problem.b
    delta = problem.delta
    # rescale to the tau = 1 proximal form; argmin is unchanged and the
    # dual smoothness constant stays ||A||_2^2
    w = problem.weights / problem.tau
    cbar = problem.cbar

    L = spectral_norm_sq(A)
    L = max(L * (1.0 + 1e-2), 1e-12)
    step = 1.0 / L

    k = A.shape[0]
    mu = np.zeros(k) if mu0 is None else np.asarray(mu0, dtype=float).reshape(-1).copy()
    if mu.shape[0] != k:
        raise MalformedProblem("mu0 length disagrees with A")

    def alpha_of(m):
        return soft_threshold(cbar + A.T @ m, w)

    def phi(m, alpha=None, r=None):
        # phi = -g(mu); alpha/r passed in when already computed
        if alpha is None:
            alpha = alpha_of(m)
        if r is None:
            r = A @ alpha - b
        g1 = (
            0.5 * np.sum((alpha - cbar) ** 2)
            + np.sum(w * np.abs(alpha))
            - m @ r
        )
        return -(g1 - delta * np.sum(np.abs(m)))

    y = mu.copy()
    t = 1.0
    phi_prev = phi(mu)
    best_phi = phi_prev
    best_mu = mu.copy()
    kkt = np.inf
    huge = 1e12 * (1.0 + float(np.sum(cbar**2)) + float(np.max(np.abs(b), initial=0.0)))
    it = 0
    for it in range(1, max_iter + 1):
        alpha_y = alpha_of(y)
        grad = A @ alpha_y - b  # gradient of -g1 at y
        mu_new = soft_threshold(y - step * grad, step * delta)

        alpha_new = alpha_of(mu_new)
        r_new = A @ alpha_new - b
        phi_new = phi(mu_new, alpha_new, r_new)

        feas = max(float(np.max(np.abs(r_new), initial=0.0)) - delta, 0.0)
        comp = float(mu_new @ r_new + delta * np.sum(np.abs(mu_new)))
        pobj = 0.5 * np.sum((alpha_new - cbar) ** 2) + np.sum(w * np.abs(alpha_new))
        kkt = max(feas, abs(comp) / (1.0 + abs(float(pobj))))

        if phi_new < best_phi:
            best_phi = phi_new
            best_mu = mu_new.copy()

        if kkt <= prox_tol:
            mu = mu_new
            break

        if -phi_new > huge:
            raise InfeasibleRegion("dual objective diverging; empty region")

        if accelerate:
            if phi_new > phi_prev:
                # function-value restart from the best point seen
                y = best_mu.copy()
                mu = best_mu.copy()
                t = 1.0
                phi_prev = best_phi
                continue
            t_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
            y = mu_new + ((t - 1.0) / t_new) * (mu_new - mu)
            t = t_new
        else:
            y = mu_new
        mu = mu_new
        phi_prev = phi_new

    alpha = alpha_of(mu)
    r = A @ alpha - b
    feas = max(float(np.max(np.abs(r), initial=0.0)) - delta, 0.0)
    comp = float(mu @ r + delta * np.sum(np.abs(mu)))
    pobj_scaled = 0.5 * np.sum((alpha - cbar) ** 2) + np.sum(w * np.abs(alpha))
    kkt = max(feas, abs(comp) / (1.0 + abs(float(pobj_scaled))))
    converged = kkt <= prox_tol
    result = CompositeResult(
        alpha=alpha,
        mu=mu,
        primal_objective=problem.objective(alpha),
        dual_objective=float(-phi(mu, alpha, r) * problem.tau),
        kkt_residual=float(kkt),
        iterations=it,
        converged=converged,
    )
    if strict and not converged:
        raise MaxIterations(
            f"dual prox stopped at kkt_residual={kkt:.3e} after {it} iterations",
            result=result,
        )
    return result


def project_polytope(
    A, b, delta, point, mu0=None, prox_tol: float = PROX_TOL, max_iter: int = PROX_MAX_ITER
) -> CompositeResult:
    """Euclidean projection of ``point`` onto ``||A a - b||_inf <= delta``."""
    comp = CompositeProblem(
        cbar=np.asarray(point, dtype=float),
        weights=np.zeros(np.asarray(point).shape[0]),
        A=A,
        b=b,
        delta=delta,
    )
    return dual_prox_solve(comp, mu0=mu0, prox_tol=prox_tol, max_iter=max_iter, strict=False)
