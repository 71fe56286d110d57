"""Synthetic instance generators, error metrics, and delta-grid paths.

Generators draw from a Philox counter RNG keyed by the spec seed, so the
same seed reproduces the instance bit for bit on any platform with the
same numpy.  The correlated Gaussian designs are built by the AR(1)
recursion column by column rather than a dense Cholesky factor; the two
agree in distribution and the recursion is O(np).

Noise is calibrated from the realized linear predictor: with mu = X b*,
sigma^2 = Var(mu) / snr using the ddof=1 sample variance.  ``snr`` may
be ``math.inf``, which gives the noiseless sigma = 0 path.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from .core import (
    FEAS_TOL,
    ZERO_TOL,
    DesignMatrix,
    ProblemData,
    Solution,
    polish,
    reference_delta,
    standardize,
    support_of,
)
from .exceptions import (
    DdselError,
    DimensionMismatch,
    MalformedProblem,
    RankDeficient,
    ZeroSignal,
)
from .heuristics import hybrid_run
from .lp import solve_l1_dantzig
from .milo import MiloConfig, MiloResult, solve_with_intelligence

# Default delta grid: 30 log-spaced multiples of the reference level,
# spanning the tight and loose ends used by the benchmark protocol.
GRID_NUM = 30
GRID_LOW = 0.2
GRID_HIGH = 1.5

ESTIMATORS = ("warm", "l0", "l0_polished", "l1", "l1_polished")


@dataclass(frozen=True)
class SynthSpec:
    """Parameters of a correlated Gaussian regression instance.

    ``rho`` is the lag-1 correlation of the design columns (covariance
    rho^|i-j| before standardization), ``k_star`` the number of unit
    coefficients in the planted vector, ``snr`` the ratio Var(X b*) to
    noise variance.
    """

    n: int
    p: int
    rho: float
    k_star: int
    snr: float
    seed: int

    def __post_init__(self):
        if self.n < 2:
            raise MalformedProblem(f"need n >= 2, got {self.n}")
        if self.p < 1:
            raise MalformedProblem(f"need p >= 1, got {self.p}")
        if not 1 <= self.k_star <= self.p:
            raise MalformedProblem(
                f"k_star must lie in [1, p], got {self.k_star} with p={self.p}"
            )
        if not 0.0 <= self.rho < 1.0:
            raise MalformedProblem(f"rho must lie in [0, 1), got {self.rho}")
        if not self.snr > 0.0:
            raise MalformedProblem(f"snr must be positive, got {self.snr}")


@dataclass(frozen=True)
class Instance:
    """A generated design/response pair with its planted coefficients.

    ``sigma`` is the noise standard deviation actually used.  The delta
    parameter is not part of the instance; ``problem(delta)`` attaches
    one, and repeated calls share the Gram matrix through the cached
    base problem.
    """

    design: DesignMatrix
    response: np.ndarray
    beta_star: np.ndarray
    sigma: float

    @cached_property
    def _base(self) -> ProblemData:
        return ProblemData(self.design, self.response, 0.0)

    @cached_property
    def reference_delta(self) -> float:
        """Residual sup norm at the planted vector, the grid anchor."""
        return reference_delta(self.design, self.response, self.beta_star)

    @property
    def true_support(self) -> Tuple[int, ...]:
        return support_of(self.beta_star)

    def problem(self, delta: float) -> ProblemData:
        return self._base.with_delta(delta)


@dataclass(frozen=True)
class Example1Instance(Instance):
    """The adversarial dense-column construction, unstandardized.

    The response has a sparse representation on the first two columns
    with unit coefficients and a dense one on the remaining n-1 columns
    with coefficient tau each.  ``l0_recovery_delta`` is the constraint
    level below which the support-minimizing estimator returns the
    sparse pair; ``dense_l1_cost`` is tau (n-1), the L1 price of the
    dense representation that undercuts the sparse pair's cost of 2
    whenever it is below 2.
    """

    tau: float = 0.0
    l0_recovery_delta: float = 0.0
    dense_l1_cost: float = 0.0


def equispaced_support(p: int, k_star: int) -> Tuple[int, ...]:
    """k_star indices spread evenly over 0..p-1, duplicates merged.

    Positions are round(1 + (t-1)(p-1)/(k_star-1)) for t = 1..k_star on
    the 1-based axis, ties rounding to even.  May return fewer than
    k_star indices when p < about 2 k_star.
    """
    if not 1 <= k_star <= p:
        raise MalformedProblem(f"k_star must lie in [1, p], got {k_star}")
    if k_star == 1:
        return (0,)
    raw = 1.0 + (np.arange(k_star) * (p - 1)) / (k_star - 1)
    idx = np.unique(np.rint(raw).astype(int)) - 1
    return tuple(int(j) for j in idx)


def _calibrated_noise(rng, mu: np.ndarray, snr: float) -> Tuple[np.ndarray, float]:
    if math.isinf(snr):
        return np.zeros(mu.shape[0]), 0.0
    var = float(np.var(mu, ddof=1))
    if var <= 0.0:
        raise ZeroSignal("planted predictor X beta* is constant; snr undefined")
    sigma = math.sqrt(var / snr)
    return sigma * rng.standard_normal(mu.shape[0]), sigma


def _ar1_columns(rng, n: int, p: int, rho: float) -> np.ndarray:
    Z = rng.standard_normal((n, p))
    if rho == 0.0:
        return Z
    X = np.empty_like(Z)
    X[:, 0] = Z[:, 0]
    w = math.sqrt(1.0 - rho * rho)
    for j in range(1, p):
        X[:, j] = rho * X[:, j - 1] + w * Z[:, j]
    return X


def gen_type_synth(spec: SynthSpec) -> Instance:
    """Correlated Gaussian design with k_star planted unit coefficients.

    Columns are drawn with covariance rho^|i-j|, then centered and
    scaled to unit norm.  The response is X b* plus Gaussian noise at
    the requested snr.
    """
    rng = np.random.Generator(np.random.Philox(spec.seed))
    raw = _ar1_columns(rng, spec.n, spec.p, spec.rho)
    design = standardize(raw)
    beta_star = np.zeros(spec.p)
    beta_star[list(equispaced_support(spec.p, spec.k_star))] = 1.0
    mu = design.entries @ beta_star
    eps, sigma = _calibrated_noise(rng, mu, spec.snr)
    return Instance(design, mu + eps, beta_star, sigma)


def gen_example1(
    n: int,
    tau: float,
    snr: float = math.inf,
    seed: int = 0,
) -> Example1Instance:
    """Dense-column design: p = n+1, first column (1, tau, ..., tau),
    the rest a shifted identity, response = col1 - col2 plus optional
    noise.

    Kept unstandardized on purpose; the recovery thresholds quoted in
    the metadata are exact only for the literal construction.  The
    noiseless default has snr = inf.
    """
    if tau <= 0.0:
        raise MalformedProblem(f"tau must be positive, got {tau}")
    if n < 2:
        raise MalformedProblem(f"need n >= 2, got {n}")
    p = n + 1
    X = np.zeros((n, p))
    X[0, 0] = 1.0
    X[1:, 0] = tau
    X[:, 1:] = np.eye(n)
    beta_star = np.zeros(p)
    beta_star[0] = 1.0
    beta_star[1] = -1.0
    mu = X[:, 0] - X[:, 1]
    rng = np.random.Generator(np.random.Philox(seed))
    eps, sigma = _calibrated_noise(rng, mu, snr)
    return Example1Instance(
        design=DesignMatrix(X),
        response=mu + eps,
        beta_star=beta_star,
        sigma=sigma,
        tau=tau,
        l0_recovery_delta=tau / (1.0 + tau),
        dense_l1_cost=tau * (n - 1),
    )


def gen_example_corr_pair(
    n: int,
    p: int,
    corr: float = 0.7,
    snr: float = 10.0,
    seed: int = 0,
) -> Instance:
    """Two correlated signal columns with coefficients +1 and -1.

    Columns 1 and 2 are bivariate Gaussian with the given correlation,
    the remaining p-2 are independent standard Gaussian; everything is
    then centered and scaled to unit norm.
    """
    if p < 2:
        raise MalformedProblem(f"need p >= 2, got {p}")
    if n < 2:
        raise MalformedProblem(f"need n >= 2, got {n}")
    if not -1.0 < corr < 1.0:
        raise MalformedProblem(f"corr must lie in (-1, 1), got {corr}")
    if not snr > 0.0:
        raise MalformedProblem(f"snr must be positive, got {snr}")
    rng = np.random.Generator(np.random.Philox(seed))
    Z = rng.standard_normal((n, p))
    X = Z.copy()
    X[:, 1] = corr * Z[:, 0] + math.sqrt(1.0 - corr * corr) * Z[:, 1]
    design = standardize(X)
    beta_star = np.zeros(p)
    beta_star[0] = 1.0
    beta_star[1] = -1.0
    mu = design.entries @ beta_star
    eps, sigma = _calibrated_noise(rng, mu, snr)
    return Instance(design, mu + eps, beta_star, sigma)


# ----------------------------------------------------------------------
# metrics


@dataclass(frozen=True)
class Metrics:
    """Estimation quality of a candidate against the planted vector.

    ``est_error`` is the squared L2 coefficient error,
    ``selection_error`` counts coordinates whose zero/nonzero status
    disagrees with the planted support, ``pred_error`` is the squared
    prediction error relative to the planted predictor's energy (None
    when not computed), ``nonzeros`` the candidate support size.
    """

    est_error: float
    selection_error: int
    pred_error: Optional[float]
    nonzeros: int


def evaluate(
    problem,
    beta_star,
    beta_hat,
    with_pred: bool = True,
    zero_tol: float = ZERO_TOL,
) -> Metrics:
    """Compute the four benchmark metrics for one estimate.

    ``problem`` may be a ProblemData, DesignMatrix, or raw design
    array; only the design enters the prediction metric.  Raises
    ZeroSignal when the planted predictor is identically zero and the
    prediction metric was requested.
    """
    if isinstance(problem, ProblemData):
        X = problem.design.entries
    elif isinstance(problem, DesignMatrix):
        X = problem.entries
    else:
        X = np.asarray(problem, dtype=float)
    bs = np.asarray(beta_star, dtype=float).reshape(-1)
    bh = np.asarray(beta_hat, dtype=float).reshape(-1)
    if bs.shape[0] != X.shape[1] or bh.shape[0] != X.shape[1]:
        raise DimensionMismatch(
            f"coefficient length mismatch: design p={X.shape[1]}, "
            f"beta_star {bs.shape[0]}, beta_hat {bh.shape[0]}"
        )
    mask_star = np.abs(bs) > zero_tol
    mask_hat = np.abs(bh) > zero_tol
    pred: Optional[float] = None
    if with_pred:
        denom = float(np.sum((X @ bs) ** 2))
        if denom <= 0.0:
            raise ZeroSignal("planted predictor X beta* is zero")
        pred = float(np.sum((X @ (bh - bs)) ** 2)) / denom
    return Metrics(
        est_error=float(np.sum((bh - bs) ** 2)),
        selection_error=int(np.sum(mask_star != mask_hat)),
        pred_error=pred,
        nonzeros=int(mask_hat.sum()),
    )


# ----------------------------------------------------------------------
# delta grids and path computation


def grid_multipliers(
    num: int = GRID_NUM,
    low: float = GRID_LOW,
    high: float = GRID_HIGH,
    spacing: str = "log",
) -> Tuple[float, ...]:
    """Descending grid factors applied to a reference delta."""
    if num < 1:
        raise MalformedProblem(f"need at least one grid point, got {num}")
    if not 0.0 < low <= high:
        raise MalformedProblem(f"need 0 < low <= high, got [{low}, {high}]")
    if num == 1:
        return (high,)
    if spacing == "log":
        vals = np.geomspace(high, low, num)
    elif spacing == "linear":
        vals = np.linspace(high, low, num)
    else:
        raise MalformedProblem(f"unknown spacing {spacing!r}")
    return tuple(float(v) for v in vals)


def delta_grid(
    delta_ref: float,
    num: int = GRID_NUM,
    low: float = GRID_LOW,
    high: float = GRID_HIGH,
    spacing: str = "log",
) -> Tuple[float, ...]:
    """Descending delta values bracketing a positive reference level."""
    if not delta_ref > 0.0:
        raise MalformedProblem(
            f"reference delta must be positive, got {delta_ref}"
        )
    return tuple(delta_ref * m for m in grid_multipliers(num, low, high, spacing))


@dataclass(frozen=True)
class PathResult:
    """Solutions along a descending delta grid.

    ``solutions``/``statuses``/``errors`` are aligned with ``grid``; a
    failed grid point records the error string and leaves the solution
    None.  ``representatives`` maps each attained support size to the
    solution of that size with the smallest residual sup norm, which is
    the piecewise-constant profile rule.
    """

    grid: Tuple[float, ...]
    solutions: Tuple[Optional[Solution], ...]
    statuses: Tuple[Optional[str], ...]
    errors: Tuple[Optional[str], ...]
    representatives: Dict[int, Solution]
    method: str

    def nonzero_counts(self) -> Tuple[Optional[int], ...]:
        return tuple(
            s.objective if s is not None else None for s in self.solutions
        )

    def profile_rows(
        self, representative: bool = False
    ) -> Iterator[Tuple[float, int, float]]:
        """Long-format (delta, 1-based coefficient index, value) rows.

        With ``representative`` the coefficients at each delta are taken
        from the size representative rather than the raw per-delta
        solution.
        """
        for delta, sol in zip(self.grid, self.solutions):
            if sol is None:
                continue
            if representative:
                sol = self.representatives[sol.objective]
            for j in sol.support:
                yield (delta, j + 1, float(sol.beta[j]))


def _pick_representatives(
    solutions: Sequence[Optional[Solution]],
) -> Dict[int, Solution]:
    best: Dict[int, Solution] = {}
    for sol in solutions:
        if sol is None:
            continue
        cur = best.get(sol.objective)
        if cur is None or sol.residual_inf < cur.residual_inf:
            best[sol.objective] = sol
    return dict(sorted(best.items()))


def _as_base_problem(problem) -> ProblemData:
    if isinstance(problem, Instance):
        return problem.problem(0.0)
    if isinstance(problem, ProblemData):
        return problem
    raise MalformedProblem(
        f"expected Instance or ProblemData, got {type(problem).__name__}"
    )


def path_run(
    problem,
    grid: Sequence[float],
    method: str = "l0",
    config: Optional[MiloConfig] = None,
    warm_chain: bool = True,
) -> PathResult:
    """Solve the same instance at every grid delta, largest first.

    The grid is sorted descending and deduplicated.  For the l0 method
    the previous grid point's solution is offered as a warm start
    whenever it is still feasible at the tighter level.  Solver errors
    are recorded per grid point and do not abort the sweep.
    """
    base = _as_base_problem(problem)
    if method not in ("l0", "l1"):
        raise MalformedProblem(f"method must be 'l0' or 'l1', got {method!r}")
    pts = np.asarray(list(grid), dtype=float)
    if pts.size == 0:
        raise MalformedProblem("empty delta grid")
    if not np.all(np.isfinite(pts)) or np.any(pts < 0.0):
        raise MalformedProblem("grid deltas must be finite and nonnegative")
    pts = np.unique(pts)[::-1]

    solutions: List[Optional[Solution]] = []
    statuses: List[Optional[str]] = []
    errors: List[Optional[str]] = []
    prev: Optional[Solution] = None
    for delta in pts:
        prob = base.with_delta(float(delta))
        try:
            if method == "l1":
                sol = solve_l1_dantzig(prob)
                status = "optimal"
            else:
                warm = None
                if (
                    warm_chain
                    and prev is not None
                    and prev.residual_inf <= delta + FEAS_TOL
                ):
                    warm = Solution.from_beta(prob, prev.beta)
                res = solve_with_intelligence(prob, warm_start=warm, config=config)
                sol = res.incumbent
                status = res.status
        except DdselError as exc:
            solutions.append(None)
            statuses.append(None)
            errors.append(f"{type(exc).__name__}: {exc}")
            continue
        solutions.append(sol)
        statuses.append(status)
        errors.append(None)
        if sol is not None:
            prev = sol
    return PathResult(
        grid=tuple(float(d) for d in pts),
        solutions=tuple(solutions),
        statuses=tuple(statuses),
        errors=tuple(errors),
        representatives=_pick_representatives(solutions),
        method=method,
    )


# ----------------------------------------------------------------------
# estimator comparison protocol


@dataclass(frozen=True)
class EstimatorRow:
    name: str
    delta: float
    solution: Solution
    metrics: Metrics
    status: str


@dataclass(frozen=True)
class CompareResult:
    """Per-delta rows for each estimator plus the tuned pick.

    ``rows[name]`` is aligned with ``grid``; entries are None where the
    estimator failed at that delta.  ``chosen[name]`` is the row whose
    delta minimized the estimation error.
    """

    grid: Tuple[float, ...]
    rows: Dict[str, Tuple[Optional[EstimatorRow], ...]]
    chosen: Dict[str, EstimatorRow]

    def metric_rows(self) -> Iterator[Tuple]:
        """Flat (estimator, delta, status, metrics fields) tuples."""
        for name, entries in self.rows.items():
            for row in entries:
                if row is None:
                    continue
                m = row.metrics
                yield (
                    name,
                    row.delta,
                    row.status,
                    m.est_error,
                    m.selection_error,
                    m.pred_error,
                    m.nonzeros,
                )


def _polish_or_keep(prob: ProblemData, sol: Solution) -> Solution:
    # a rank-deficient support cannot be refit; keep the raw estimate
    try:
        return polish(prob, sol.support)
    except RankDeficient:
        return sol


def compare_on_grid(
    instance: Instance,
    grid: Optional[Sequence[float]] = None,
    config: Optional[MiloConfig] = None,
    estimators: Sequence[str] = ESTIMATORS,
    with_pred: bool = True,
    admm_max_iter: int = 300,
    prox_tol: float = 1e-6,
) -> CompareResult:
    """Run the estimator battery over a delta grid on one instance.

    Estimators: "warm" is the nonconvex descent heuristic alone, "l0"
    the certified solver started from it, "l1" the convex baseline, and
    the _polished variants are least-squares refits on the respective
    supports.  Each estimator's tuned row is the one minimizing
    estimation error over the grid.  ``admm_max_iter`` and ``prox_tol``
    budget the warm-start pipeline; the low-delta end of the grid is
    much cheaper under a loose budget and the tuned rows rarely move.
    """
    unknown = set(estimators) - set(ESTIMATORS)
    if unknown:
        raise MalformedProblem(f"unknown estimators {sorted(unknown)}")
    if grid is None:
        grid = delta_grid(instance.reference_delta)
    pts = np.unique(np.asarray(list(grid), dtype=float))[::-1]
    if pts.size == 0:
        raise MalformedProblem("empty delta grid")
    base = instance.problem(0.0)
    need_warm = "warm" in estimators or "l0" in estimators
    need_l0 = "l0" in estimators or "l0_polished" in estimators
    need_l1 = "l1" in estimators or "l1_polished" in estimators

    rows: Dict[str, List[Optional[EstimatorRow]]] = {
        name: [] for name in estimators
    }
    prev_l0: Optional[Solution] = None
    for delta in pts:
        prob = base.with_delta(float(delta))
        produced: Dict[str, Tuple[Solution, str]] = {}
        try:
            warm_sol: Optional[Solution] = None
            if need_warm:
                warm_sol = hybrid_run(
                    prob, admm_max_iter=admm_max_iter, prox_tol=prox_tol
                ).solution
                produced["warm"] = (warm_sol, "heuristic")
            if need_l0:
                start = warm_sol
                if prev_l0 is not None and prev_l0.residual_inf <= delta + FEAS_TOL:
                    chained = Solution.from_beta(prob, prev_l0.beta)
                    if start is None or (chained.objective, chained.residual_inf) < (
                        start.objective,
                        start.residual_inf,
                    ):
                        start = chained
                res = solve_with_intelligence(prob, warm_start=start, config=config)
                if res.incumbent is not None:
                    produced["l0"] = (res.incumbent, res.status)
                    produced["l0_polished"] = (
                        _polish_or_keep(prob, res.incumbent),
                        res.status,
                    )
                    prev_l0 = res.incumbent
            if need_l1:
                l1 = solve_l1_dantzig(prob)
                produced["l1"] = (l1, "optimal")
                produced["l1_polished"] = (_polish_or_keep(prob, l1), "optimal")
        except DdselError:
            pass
        for name in estimators:
            if name in produced:
                sol, status = produced[name]
                rows[name].append(
                    EstimatorRow(
                        name=name,
                        delta=float(delta),
                        solution=sol,
                        metrics=evaluate(
                            prob, instance.beta_star, sol.beta, with_pred=with_pred
                        ),
                        status=status,
                    )
                )
            else:
                rows[name].append(None)

    chosen: Dict[str, EstimatorRow] = {}
    for name in estimators:
        done = [r for r in rows[name] if r is not None]
        if not done:
            raise MalformedProblem(
                f"estimator {name!r} failed at every grid point"
            )
        chosen[name] = min(done, key=lambda r: r.metrics.est_error)
    return CompareResult(
        grid=tuple(float(d) for d in pts),
        rows={name: tuple(entries) for name, entries in rows.items()},
        chosen=chosen,
    )


# ----------------------------------------------------------------------
# warm versus vanilla search protocol


@dataclass(frozen=True)
class WarmVanillaResult:
    """Same instance solved with and without the heuristic pipeline."""

    warm: MiloResult
    vanilla: MiloResult

    @property
    def warm_not_worse(self) -> bool:
        w = self.warm.incumbent
        v = self.vanilla.incumbent
        if w is None:
            return v is None
        if v is None:
            return True
        return w.objective <= v.objective


def compare_warm_vanilla(
    problem,
    node_limit: Optional[int] = None,
    time_limit: Optional[float] = None,
    big_m: float = 1e3,
    tau: float = 2.0,
) -> WarmVanillaResult:
    """Budgeted search with a heuristic warm start versus a cold start.

    Both arms search the same plain big-M model under the same node and
    time budget; the warm arm additionally runs the first-order
    heuristic and seeds the search with its point.  No derived caps on
    either side, so the result isolates what the warm start buys.
    """
    base = _as_base_problem(problem)
    warm_cfg = MiloConfig(
        big_m=big_m,
        bounds_mode="none",
        tau=tau,
        node_limit=node_limit,
        time_limit=time_limit,
        heuristic=True,
    )
    cold_cfg = MiloConfig(
        big_m=big_m,
        bounds_mode="none",
        node_limit=node_limit,
        time_limit=time_limit,
        heuristic=False,
    )
    warm = solve_with_intelligence(base, config=warm_cfg)
    vanilla = solve_with_intelligence(base, config=cold_cfg)
    return WarmVanillaResult(warm=warm, vanilla=vanilla)


# ----------------------------------------------------------------------
# CSV emitters

METRICS_HEADER = (
    "estimator",
    "delta",
    "status",
    "est_error",
    "selection_error",
    "pred_error",
    "nonzeros",
)
PROFILE_HEADER = ("delta", "coef_index", "value")


def write_metrics_csv(path, compare: CompareResult) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(METRICS_HEADER)
        for row in compare.metric_rows():
            w.writerow(["" if v is None else v for v in row])


def write_profile_csv(path, result: PathResult, representative: bool = False) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(PROFILE_HEADER)
        for row in result.profile_rows(representative=representative):
            w.writerow(row)
