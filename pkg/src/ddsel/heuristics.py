"""First-order heuristics for the L0 problem over the Dantzig polytope.

Three layers, each feeding the next: an alternating-direction scheme that
pairs hard thresholding with polytope projection, a reweighted-L1 descent
on concave sparsity surrogates, and the hybrid pipeline that uses the
first to pick a candidate support and the second to settle coefficients
on it.  All of them only ever touch the Gram form of the data.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from .core import (
    FEAS_TOL,
    ZERO_TOL,
    ProblemData,
    Solution,
    hard_threshold,
    residual_inf,
    support_of,
)
from .exceptions import InfeasibleTheta, MalformedProblem
from .lp import (
    EXACT_REG_TAU,
    PROX_TOL,
    CompositeProblem,
    PolytopeLp,
    SIMPLEX_MAX_P,
    dual_prox_solve,
    project_polytope,
    solve_l1_dantzig,
)

WEIGHT_CAP = 1e8
STAT_TOL = 1e-5
ADMM_TOL = 1e-4
DEFAULT_GAMMAS = tuple(1e-2 * 0.8**i for i in range(10))
LAMBDA_MULTIPLIERS = (0.1, 1.0, 10.0)


# ----------------------------------------------------------------------
# concave sparsity surrogates


@dataclass(frozen=True)
class PenaltyFamily:
    """Separable concave penalty rho_gamma on [0, inf).

    kind "log":   rho(t) = log(t/gamma + 1) / log(1/gamma + 1); the
                  derivative stays finite at zero.
    kind "power": rho(t) = t**gamma with 0 < gamma < 1; the derivative
                  blows up at zero and gets capped when used as a weight.

    Both tend to the indicator t != 0 as gamma goes to 0.
    """

    kind: str
    gamma: float

    def __post_init__(self):
        if self.kind not in ("log", "power"):
            raise MalformedProblem(f"unknown penalty kind {self.kind!r}")
        if not np.isfinite(self.gamma) or self.gamma <= 0:
            raise MalformedProblem("gamma must be positive")
        if self.kind == "power" and self.gamma >= 1:
            raise MalformedProblem("power penalty needs gamma < 1")

    def value(self, t):
        t = np.abs(np.asarray(t, dtype=float))
        if self.kind == "log":
            return np.log1p(t / self.gamma) / np.log1p(1.0 / self.gamma)
        return t**self.gamma

    def derivative(self, t):
        t = np.abs(np.asarray(t, dtype=float))
        if self.kind == "log":
            return 1.0 / ((t + self.gamma) * np.log1p(1.0 / self.gamma))
        with np.errstate(divide="ignore"):
            return np.where(t > 0, self.gamma * t ** (self.gamma - 1.0), np.inf)

    def weights(self, t, cap: float = WEIGHT_CAP):
        return np.minimum(self.derivative(t), cap)

    def total(self, beta) -> float:
        return float(np.sum(self.value(beta)))


# ----------------------------------------------------------------------
# alternating projections / thresholding


@dataclass(frozen=True)
class AdmmRun:
    """One alternating-direction run: ``beta`` is the sparse iterate,
    ``alpha`` a polytope-feasible companion, ``nu`` the scaled dual."""

    beta: np.ndarray
    alpha: np.ndarray
    nu: np.ndarray
    lam: float
    iterations: int
    converged: bool


def default_lambda_grid(problem: ProblemData) -> Tuple[float, ...]:
    """Penalty-weight grid spanning two decades around p / ||X'y||_inf."""
    dmax = float(np.max(np.abs(problem.correlations), initial=0.0))
    base = problem.p / max(dmax, 1e-12)
    return tuple(m * base for m in LAMBDA_MULTIPLIERS)


def _feasible_anchor(problem: ProblemData) -> np.ndarray:
    """Least-squares point; its correlation residual vanishes, so it sits
    strictly inside the polytope for every delta > 0."""
    X = problem.design.entries
    sol, *_ = np.linalg.lstsq(X, problem.response, rcond=None)
    return sol


def _repair_feasibility(problem: ProblemData, alpha: np.ndarray) -> np.ndarray:
    """Pull alpha inside the polytope by blending toward the anchor."""
    viol = residual_inf(problem, alpha) - problem.delta
    if viol <= FEAS_TOL:
        return alpha
    anchor = _feasible_anchor(problem)
    if problem.delta <= 0:
        return anchor
    # residuals are affine in beta, so the blend at t = viol/(viol+delta)
    # lands exactly on the boundary; nudge slightly past it
    t = min(1.0, viol / (viol + problem.delta) + 1e-9)
    mixed = (1.0 - t) * alpha + t * anchor
    if residual_inf(problem, mixed) - problem.delta > FEAS_TOL:
        return anchor
    return mixed


def admm_run(
    problem: ProblemData,
    lam: float,
    max_iter: int = 300,
    tol_change: float = ADMM_TOL,
    tol_split: float = ADMM_TOL,
    prox_tol: float = PROX_TOL,
    prox_max_iter: int = 2000,
) -> AdmmRun:
    """Alternate hard thresholding with projection onto the polytope.

    The sparse iterate minimizes ||b||_0 + (lam/2)||b - target||^2, which
    zeroes every coordinate of the target below sqrt(2/lam); the feasible
    iterate is the Euclidean projection of its counterpart.  Stops when
    the sparse iterate stalls relative to itself and the two iterates
    agree, both measured with the given relative tolerances.

    Projections are capped at ``prox_max_iter`` inner iterations and
    accepted as-is at the cap: only the support pattern feeds the later
    stages, so a loose projection costs candidate quality, not
    correctness.
    """
    if not np.isfinite(lam) or lam <= 0:
        raise MalformedProblem("lam must be positive")
    p = problem.p
    beta = np.zeros(p)
    alpha = np.zeros(p)
    nu = np.zeros(p)
    mu_warm = None
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        beta_next = hard_threshold(alpha + nu / lam, lam)
        change_ok = np.linalg.norm(beta_next - beta) <= tol_change * np.linalg.norm(beta)
        split_ok = np.linalg.norm(beta - alpha) <= tol_split * max(
            np.linalg.norm(beta), np.linalg.norm(alpha)
        )
        if it > 1 and change_ok and split_ok:
            beta = beta_next
            converged = True
            break
        proj = project_polytope(
            problem.gram,
            problem.correlations,
            problem.delta,
            beta_next - nu / lam,
            mu0=mu_warm,
            prox_tol=prox_tol,
            max_iter=prox_max_iter,
        )
        alpha = proj.alpha
        mu_warm = proj.mu
        nu = nu + lam * (alpha - beta_next)
        beta = beta_next
    alpha = _repair_feasibility(problem, alpha)
    return AdmmRun(
        beta=beta, alpha=alpha, nu=nu, lam=float(lam), iterations=it, converged=converged
    )


# ----------------------------------------------------------------------
# stationarity measure and reweighted descent


def _weighted_l1_min(
    problem: ProblemData,
    weights: np.ndarray,
    poly: Optional[PolytopeLp],
    fixed_zero: Sequence[int],
    state,
    prox_tol: float,
):
    """min sum w_j |b_j| over the (restricted) polytope.

    Returns (beta, value, new_state).  Uses the simplex engine when a
    PolytopeLp is supplied, otherwise a lightly regularized dual prox
    solve whose value is accurate to the regularization scale.
    """
    if poly is not None:
        run = poly.minimize_weighted_l1(weights, fixed_zero=fixed_zero, state=state)
        if run.status != "optimal":
            raise InfeasibleTheta(f"restricted polytope solve ended {run.status}")
        return run.beta, run.value, run.state
    p = problem.p
    active = np.setdiff1d(np.arange(p), np.asarray(fixed_zero, dtype=int))
    A = problem.gram[:, active]
    comp = CompositeProblem(
        cbar=np.zeros(len(active)),
        weights=np.asarray(weights, dtype=float)[active],
        A=A,
        b=problem.correlations,
        delta=problem.delta,
        tau=EXACT_REG_TAU,
    )
    res = dual_prox_solve(comp, mu0=state, prox_tol=prox_tol, strict=False)
    beta = np.zeros(p)
    beta[active] = res.alpha
    value = float(np.asarray(weights, float)[active] @ np.abs(res.alpha))
    return beta, value, res.mu


def stationarity_gap(
    problem: ProblemData,
    theta,
    penalty: PenaltyFamily,
    weight_cap: float = WEIGHT_CAP,
    method: str = "auto",
    prox_tol: float = PROX_TOL,
) -> float:
    """Linearized descent gap of the penalty objective at a feasible theta.

    Equals min_b sum_j rho'(|theta_j|) |b_j| over the polytope minus the
    same weighted norm at theta; nonpositive for every feasible theta,
    and zero exactly at first-order stationary points.
    """
    theta = np.asarray(theta, dtype=float).reshape(-1)
    if theta.shape[0] != problem.p:
        raise MalformedProblem("theta length disagrees with problem")
    if residual_inf(problem, theta) > problem.delta + FEAS_TOL:
        raise InfeasibleTheta("theta violates the correlation constraint")
    w = penalty.weights(theta, cap=weight_cap)
    use_simplex = method == "simplex" or (method == "auto" and problem.p <= SIMPLEX_MAX_P)
    poly = (
        PolytopeLp(problem.gram, problem.correlations, problem.delta)
        if use_simplex
        else None
    )
    _, value, _ = _weighted_l1_min(problem, w, poly, (), None, prox_tol)
    return float(value - w @ np.abs(theta))


@dataclass(frozen=True)
class GammaTrace:
    """Inner-iteration record for one surrogate parameter value.

    ``h`` holds the penalty objective at iterates 1..K+1 and ``gaps`` the
    K descent gaps, so monotone descent and the averaged-rate inequality
    can be checked after the fact.
    """

    gamma: float
    h: Tuple[float, ...]
    gaps: Tuple[float, ...]
    supports: Tuple[Tuple[int, ...], ...]


@dataclass(frozen=True)
class ReweightedResult:
    solution: Solution
    trace: Tuple[GammaTrace, ...]
    iterations: int
    final_gap: float


def reweighted_run(
    problem: ProblemData,
    penalty_kind: str = "log",
    gammas: Sequence[float] = DEFAULT_GAMMAS,
    init=None,
    stat_tol: float = STAT_TOL,
    max_inner: int = 50,
    weight_cap: float = WEIGHT_CAP,
    method: str = "auto",
    restrict_to: Optional[Sequence[int]] = None,
    prox_tol: float = PROX_TOL,
) -> ReweightedResult:
    """Reweighted-L1 descent across a decreasing surrogate schedule.

    Starts from the plain L1 minimizer unless ``init`` is given, then for
    each gamma repeats: solve the weighted-L1 problem with weights set to
    the penalty derivative at the current point, stop once the descent
    gap is within ``stat_tol``.  Each gamma warm-starts from the last,
    and the schedule exits early when the support survives two
    consecutive gamma values unchanged.  ``restrict_to`` confines the
    search to a coordinate subset (used by the hybrid pipeline).
    """
    p = problem.p
    if restrict_to is None:
        fixed_zero: Tuple[int, ...] = ()
    else:
        active = set(int(j) for j in restrict_to)
        if any(j < 0 or j >= p for j in active):
            raise MalformedProblem("restrict_to index out of range")
        fixed_zero = tuple(j for j in range(p) if j not in active)
    use_simplex = method == "simplex" or (method == "auto" and p <= SIMPLEX_MAX_P)
    poly = (
        PolytopeLp(problem.gram, problem.correlations, problem.delta)
        if use_simplex
        else None
    )
    state = None
    if init is None:
        beta, _, state = _weighted_l1_min(
            problem, np.ones(p), poly, fixed_zero, state, prox_tol
        )
    else:
        beta = np.asarray(init, dtype=float).reshape(-1).copy()
        if beta.shape[0] != p:
            raise MalformedProblem("init length disagrees with problem")
        if fixed_zero:
            beta[list(fixed_zero)] = 0.0
        if residual_inf(problem, beta) > problem.delta + FEAS_TOL:
            raise InfeasibleTheta("init violates the correlation constraint")
    traces = []
    total_iters = 0
    last_gap = 0.0
    prev_support: Optional[Tuple[int, ...]] = None
    for gamma in gammas:
        pen = PenaltyFamily(penalty_kind, float(gamma))
        hs = [pen.total(beta)]
        gaps = []
        supports = [support_of(beta)]
        for _ in range(max_inner):
            w = pen.weights(beta, cap=weight_cap)
            beta_next, value, state = _weighted_l1_min(
                problem, w, poly, fixed_zero, state, prox_tol
            )
            gap = float(value - w @ np.abs(beta))
            gaps.append(gap)
            beta = beta_next
            hs.append(pen.total(beta))
            supports.append(support_of(beta))
            total_iters += 1
            last_gap = gap
            if -gap < stat_tol:
                break
        traces.append(
            GammaTrace(
                gamma=float(gamma),
                h=tuple(hs),
                gaps=tuple(gaps),
                supports=tuple(supports),
            )
        )
        cur_support = supports[-1]
        if prev_support is not None and cur_support == prev_support:
            break
        prev_support = cur_support
    return ReweightedResult(
        solution=Solution.from_beta(problem, beta),
        trace=tuple(traces),
        iterations=total_iters,
        final_gap=last_gap,
    )


# ----------------------------------------------------------------------
# hybrid pipeline


@dataclass(frozen=True)
class HybridResult:
    solution: Solution
    base_support: Tuple[int, ...]
    expansions: int
    lam: float
    admm_converged: bool
    reweighted: ReweightedResult


def hybrid_run(
    problem: ProblemData,
    lambdas: Optional[Sequence[float]] = None,
    admm_max_iter: int = 300,
    penalty_kind: str = "log",
    gammas: Sequence[float] = DEFAULT_GAMMAS,
    stat_tol: float = STAT_TOL,
    prox_tol: float = PROX_TOL,
) -> HybridResult:
    """Candidate-support pipeline: threshold/project runs over a lambda
    grid pick a support, the support grows by the largest feasible-side
    magnitudes until the zero-pattern admits a feasible point, and the
    reweighted descent then settles the coefficients on it.
    """
    if lambdas is None:
        lambdas = default_lambda_grid(problem)
    if not lambdas:
        raise MalformedProblem("empty lambda grid")
    runs = [
        admm_run(problem, lam, max_iter=admm_max_iter, prox_tol=prox_tol)
        for lam in lambdas
    ]
    dmax = float(np.max(np.abs(problem.correlations), initial=0.0))
    zero_ok = dmax <= problem.delta + FEAS_TOL

    def rank(r: AdmmRun):
        k = len(support_of(r.beta))
        if k == 0 and not zero_ok:
            # an empty candidate support carries no information unless the
            # zero vector is itself feasible
            k = problem.p + 1
        scale = max(np.linalg.norm(r.beta), np.linalg.norm(r.alpha), 1e-12)
        return (k, float(np.linalg.norm(r.beta - r.alpha) / scale))

    best = min(runs, key=rank)
    base = set(support_of(best.beta))
    poly = PolytopeLp(problem.gram, problem.correlations, problem.delta)
    order = np.argsort(-np.abs(best.alpha), kind="stable")
    expansions = 0
    pos = 0
    p = problem.p
    while len(base) < p:
        fixed = [j for j in range(p) if j not in base]
        if poly.feasible(fixed_zero=fixed):
            break
        while pos < p and int(order[pos]) in base:
            pos += 1
        if pos >= p:
            base = set(range(p))
            break
        base.add(int(order[pos]))
        expansions += 1
    rew = reweighted_run(
        problem,
        penalty_kind=penalty_kind,
        gammas=gammas,
        stat_tol=stat_tol,
        restrict_to=sorted(base),
        prox_tol=prox_tol,
    )
    return HybridResult(
        solution=rew.solution,
        base_support=tuple(sorted(base)),
        expansions=expansions,
        lam=best.lam,
        admm_converged=best.converged,
        reweighted=rew,
    )
