"""Certifying branch-and-bound for minimum-support selection.

The integer model attaches an indicator to every coordinate through box
constraints |beta_j| <= M_j z_j and minimizes the indicator sum over the
correlation polytope.  Node relaxations replace z_j by |beta_j| / M_j,
which keeps every node a small LP on the same constraint matrix: fixing
an indicator to one only zeroes its objective weight, fixing it to zero
pins the split pair after a short feasibility drive from the parent
basis.  Best-bound search with periodic depth dives, optional budget
rows and fitted-value lifting, and a warm-started variant that wires in
the first-order heuristics and scaled caps.
"""

from __future__ import annotations

import heapq
import math
import os
import sys
import time
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .bounds import (
    DEFAULT_BIG_M,
    BoundSet,
    coef_bounds_refined,
    warm_start_bounds,
)
from .core import (
    FEAS_TOL,
    ProblemData,
    Solution,
    polish,
    support_of,
)
from .exceptions import (
    InconsistentBounds,
    InfeasibleAugmentedPolytope,
    InfeasibleWarmStart,
    NumericalBreakdown,
    RankDeficient,
    UnboundedCoordinate,
)
from . import simplex
from .heuristics import hybrid_run

INT_TOL = 1e-6
PROGRESS_EVERY = 200
# Underdetermined problems up to this many columns run without caps in
# auto mode: the plain model certifies globally and stays tractable.
PLAIN_SMALL_P = 12


# ----------------------------------------------------------------------
# formulation


@dataclass(frozen=True)
class MiloFormulation:
    """Big-M integer model over the correlation polytope.

    ``coef_upper`` holds the per-coordinate constants of the indicator
    boxes; optional budget rows cap ||beta||_1 and, in the lifted form
    that carries fitted values as explicit variables, ||X beta||_1 and
    each |x_i' beta|.
    """

    problem: ProblemData
    coef_upper: np.ndarray
    l1_budget: Optional[float] = None
    pred_upper: Optional[np.ndarray] = None
    pred_l1_budget: Optional[float] = None
    lifted: bool = False
    big_m: float = DEFAULT_BIG_M
    bounds_provenance: str = "none"

    def __post_init__(self):
        cu = np.asarray(self.coef_upper, dtype=float).reshape(-1)
        object.__setattr__(self, "coef_upper", cu)
        if cu.shape[0] != self.problem.p:
            raise InconsistentBounds("coef_upper length disagrees with problem")
        if not np.all(np.isfinite(cu)) or np.any(cu < 0):
            raise InconsistentBounds("coef_upper must be finite and nonnegative")
        if not np.isfinite(self.big_m) or self.big_m <= 0:
            raise InconsistentBounds("big_m must be positive and finite")
        if self.pred_upper is not None:
            pu = np.asarray(self.pred_upper, dtype=float).reshape(-1)
            object.__setattr__(self, "pred_upper", pu)
            if pu.shape[0] != self.problem.n:
                raise InconsistentBounds("pred_upper length disagrees with problem")
            if not np.all(np.isfinite(pu)) or np.any(pu < 0):
                raise InconsistentBounds("pred_upper must be finite and nonnegative")
        if (self.pred_upper is not None or self.pred_l1_budget is not None) and not self.lifted:
            raise InconsistentBounds("fitted-value caps require the lifted form")

    @property
    def constraint_count(self) -> int:
        """Constraints of the written-out integer model: the two-sided
        correlation rows and the indicator boxes count as two each."""
        p, n = self.problem.p, self.problem.n
        count = 4 * p
        if self.l1_budget is not None:
            count += 1
        if self.lifted:
            count += n  # fitted-value definition rows
            if self.pred_upper is not None:
                count += 2 * n
            if self.pred_l1_budget is not None:
                count += 1
        return count


def build_formulation(
    problem: ProblemData,
    big_m: float = DEFAULT_BIG_M,
    bounds: Optional[BoundSet] = None,
    lifted: Optional[bool] = None,
) -> MiloFormulation:
    """Assemble the integer model, plain or bound-tightened.

    Without ``bounds`` every box constant is ``big_m`` and no budget row
    appears.  With bounds, the caps come from the bound set; the lifted
    form (explicit fitted-value variables) switches on automatically
    when fitted-value caps exist and the row count stays reasonable
    (n <= 2p), matching the variable-reduction rule of thumb.
    """
    if bounds is None:
        return MiloFormulation(
            problem=problem,
            coef_upper=np.full(problem.p, float(big_m)),
            big_m=float(big_m),
            bounds_provenance="none",
        )
    has_pred = bounds.pred_upper is not None or bounds.pred_l1_budget is not None
    if lifted is None:
        lifted = has_pred and problem.n <= 2 * problem.p
    return MiloFormulation(
        problem=problem,
        # the global big-M is the outer modeling assumption; caps above
        # it carry no information
        coef_upper=np.minimum(bounds.coef_upper, float(big_m)),
        l1_budget=bounds.l1_budget,
        pred_upper=bounds.pred_upper if lifted else None,
        pred_l1_budget=bounds.pred_l1_budget if lifted else None,
        lifted=bool(lifted),
        big_m=float(big_m),
        bounds_provenance=bounds.provenance,
    )


# ----------------------------------------------------------------------
# node relaxation engine


class _Relaxation:
    """Shared LP for every node: columns [beta+ | beta- | (fit+ | fit-)
    | row slacks | budget slacks], all constraints as equalities with
    bounded slacks.  Node identity lives entirely in the objective (free
    coordinates cost 1/M_j per split unit) and the split upper bounds
    (fixed-zero coordinates pinned at 0)."""

    def __init__(self, f: MiloFormulation):
        prob = f.problem
        p, n = prob.p, prob.n
        delta = prob.delta
        self.p = p
        self.lifted = f.lifted
        nx = 2 * n if f.lifted else 0
        ncols = 2 * p + nx + p
        nrows = p + (n if f.lifted else 0)
        self.bud_col = None
        self.xbud_col = None
        if f.l1_budget is not None:
            self.bud_col = ncols
            ncols += 1
            nrows += 1
        if f.lifted and f.pred_l1_budget is not None:
            self.xbud_col = ncols
            ncols += 1
            nrows += 1
        M = np.zeros((nrows, ncols))
        rhs = np.zeros(nrows)
        slack0 = 2 * p + nx
        if not f.lifted:
            M[:p, :p] = prob.gram
            M[:p, p : 2 * p] = -prob.gram
        else:
            X = prob.design.entries
            M[:p, 2 * p : 2 * p + n] = X.T
            M[:p, 2 * p + n : 2 * p + 2 * n] = -X.T
            M[p : p + n, :p] = X
            M[p : p + n, p : 2 * p] = -X
            M[p : p + n, 2 * p : 2 * p + n] = -np.eye(n)
            M[p : p + n, 2 * p + n : 2 * p + 2 * n] = np.eye(n)
        M[:p, slack0 : slack0 + p] = np.eye(p)
        rhs[:p] = prob.correlations + delta
        row = p + (n if f.lifted else 0)
        if self.bud_col is not None:
            M[row, : 2 * p] = 1.0
            M[row, self.bud_col] = 1.0
            rhs[row] = f.l1_budget
            row += 1
        if self.xbud_col is not None:
            M[row, 2 * p : 2 * p + 2 * n] = 1.0
            M[row, self.xbud_col] = 1.0
            rhs[row] = f.pred_l1_budget
        self.engine = simplex.SimplexEngine(M, rhs)
        self.lo = np.zeros(ncols)
        hi = np.full(ncols, np.inf)
        hi[:p] = f.coef_upper
        hi[p : 2 * p] = f.coef_upper
        if f.lifted and f.pred_upper is not None:
            hi[2 * p : 2 * p + n] = f.pred_upper
            hi[2 * p + n : 2 * p + 2 * n] = f.pred_upper
        hi[slack0 : slack0 + p] = 2.0 * delta
        self.hi_base = hi
        with np.errstate(divide="ignore"):
            w = np.where(f.coef_upper > 0, 1.0 / f.coef_upper, 0.0)
        self.w = w
        self.ncols = ncols

    def _cost(self, fixed_one):
        c = np.zeros(self.ncols)
        c[: self.p] = self.w
        c[self.p : 2 * self.p] = self.w
        for j in fixed_one:
            c[j] = 0.0
            c[j + self.p] = 0.0
        return c

    def _hi(self, fixed_zero):
        hi = self.hi_base
        if fixed_zero:
            hi = hi.copy()
            for j in fixed_zero:
                hi[j] = 0.0
                hi[j + self.p] = 0.0
        return hi

    def solve(self, fixed_zero, fixed_one, state=None):
        res = self.engine.solve(
            self._cost(fixed_one), self.lo, self._hi(fixed_zero), state=state
        )
        if res.status == simplex.ITERATION_LIMIT:
            raise NumericalBreakdown("node relaxation hit the iteration limit")
        if res.status != simplex.OPTIMAL:
            return res.status, np.inf, None, None, None
        p = self.p
        beta = res.x[:p] - res.x[p : 2 * p]
        splits = res.x[:p] + res.x[p : 2 * p]
        return res.status, res.objective, beta, splits, (res.basis, res.vstat)

    def with_inverse(self, state):
        """Attach the basis inverse so both children share one
        factorization; idempotent."""
        if state is None or len(state) > 2:
            return state
        return self.engine.attach_inverse(state)

    def child_warm(self, fixed_zero, fixed_one, state):
        """Best-effort dual repair toward the child optimum after
        pinning split pairs; None sends the caller down the exact
        feasibility-drive path."""
        if state is None:
            return None
        return self.engine.dual_pin(
            self._cost(fixed_one), self.lo, self._hi(fixed_zero), state
        )

    def drive_pair_to_zero(self, j, parent_fixed_zero, state):
        """From the parent basis, push the split pair of coordinate j to
        zero under the parent bounds.  Returns (reachable, state)."""
        c = np.zeros(self.ncols)
        c[j] = 1.0
        c[j + self.p] = 1.0
        res = self.engine.solve(
            c, self.lo, self._hi(parent_fixed_zero), state=state, target=1e-9
        )
        if res.status == simplex.ITERATION_LIMIT:
            raise NumericalBreakdown("fix-zero drive hit the iteration limit")
        if res.status != simplex.OPTIMAL:
            return False, None
        if res.objective > FEAS_TOL:
            return False, None
        return True, (res.basis, res.vstat)


# ----------------------------------------------------------------------
# search bookkeeping


@dataclass(frozen=True)
class BnbNode:
    """Open-node snapshot: indicator fixings, the LP relaxation bound
    (already including |fixed_one|), and the chosen branch coordinate."""

    fixed_zero: frozenset
    fixed_one: frozenset
    relaxation_bound: float
    depth: int
    branch_coord: int
    prefer_one: bool


@dataclass(frozen=True)
class ProgressEntry:
    time: float  # epoch seconds
    upper: float
    lower: float
    gap: float
    nodes: int


@dataclass
class MiloResult:
    incumbent: Optional[Solution]
    lower_bound: float
    gap: float
    nodes_explored: int
    wall_time: float
    status: str
    root_relaxation: float
    progress: List[ProgressEntry] = field(default_factory=list)
    events: List[str] = field(default_factory=list)
    trace: Optional[List[BnbNode]] = None

    @property
    def objective(self) -> Optional[int]:
        return None if self.incumbent is None else self.incumbent.objective

    def certifies_ratio(self, slack: float) -> bool:
        """Does the run certify ``upper <= ceil((1 + slack) * lower)``?"""
        if self.incumbent is None:
            return False
        return self.incumbent.objective <= math.ceil(
            (1.0 + slack) * self.lower_bound - 1e-12
        )


def _log_enabled() -> bool:
    return os.environ.get("DDSEL_LOG", "quiet") in ("progress", "debug")


class _Search:
    """Mutable state of one branch-and-bound run."""

    def __init__(self, formulation, int_tol, log_stream):
        self.f = formulation
        self.relax = _Relaxation(formulation)
        self.int_tol = int_tol
        self.problem = formulation.problem
        self.heap = []
        self.seq = 0
        self.ub = np.inf
        self.incumbent: Optional[Solution] = None
        self.nodes = 0
        self.progress: List[ProgressEntry] = []
        self.events: List[str] = []
        self.trace: Optional[List[BnbNode]] = None
        self.start = time.time()
        self.log = log_stream

    # -- bookkeeping

    def ceiled(self, raw: float) -> float:
        if not np.isfinite(raw):
            return raw
        val = float(math.ceil(raw - self.int_tol))
        return min(val, self.ub) if np.isfinite(self.ub) else val

    def open_lower(self, current: Optional[float] = None) -> float:
        cands = []
        if current is not None:
            cands.append(current)
        if self.heap:
            cands.append(self.heap[0][0])
        if not cands:
            return self.ub if np.isfinite(self.ub) else 0.0
        return min(cands)

    def gap_of(self, lower: float) -> float:
        if not np.isfinite(self.ub):
            return 1.0
        if self.ub <= 0:
            return 0.0
        return max(0.0, (self.ub - min(lower, self.ub)) / self.ub)

    def record(self, raw_lower, force=False):
        lower = self.ceiled(raw_lower)
        entry = ProgressEntry(
            time=time.time(),
            upper=self.ub,
            lower=lower,
            gap=self.gap_of(lower),
            nodes=self.nodes,
        )
        if force or not self.progress or (
            entry.upper != self.progress[-1].upper
            or entry.lower != self.progress[-1].lower
        ):
            self.progress.append(entry)
            if self.log is not None:
                self.log.write(
                    f"[{entry.time:.3f}] upper={entry.upper} lower={entry.lower} "
                    f"gap={entry.gap:.4f} nodes={entry.nodes}\n"
                )
                self.log.flush()

    def offer_incumbent(self, beta, raw_lower) -> bool:
        supp = support_of(beta)
        if len(supp) >= self.ub:
            return False
        sol = Solution.from_beta(self.problem, beta)
        if not sol.is_feasible(FEAS_TOL):
            return False
        self.ub = float(sol.objective)
        self.incumbent = sol
        self.record(raw_lower, force=True)
        return True

    def prunable(self, raw_bound: float) -> bool:
        return math.ceil(raw_bound - self.int_tol) >= self.ub

    def push(self, node: BnbNode, state):
        heapq.heappush(self.heap, (node.relaxation_bound, self.seq, node, state))
        self.seq += 1

    # -- node creation

    def _branch_choice(self, z, splits_abs, fixed):
        frac = np.minimum(z, 1.0 - z)
        frac[list(fixed)] = -1.0
        j = int(np.lexsort((-splits_abs, -frac))[0])
        if frac[j] <= self.int_tol:
            return None, False
        return j, z[j] >= 0.5

    def make_node(self, fixed_zero, fixed_one, parent_bound, depth, parent_state, drive_j=None):
        """Solve the relaxation for one fixing set; updates incumbents,
        returns a BnbNode plus its basis when the node stays open."""
        state = parent_state
        if drive_j is not None:
            pinned = self.relax.child_warm(fixed_zero, fixed_one, parent_state)
            if pinned is not None:
                state = pinned
            else:
                ok, state = self.relax.drive_pair_to_zero(
                    drive_j, fixed_zero - {drive_j}, parent_state
                )
                if not ok:
                    self.nodes += 1
                    return None, None
        status, lpval, beta, splits, state = self.relax.solve(
            fixed_zero, fixed_one, state
        )
        self.nodes += 1
        if status != simplex.OPTIMAL:
            return None, None
        raw_bound = len(fixed_one) + lpval
        raw_bound = max(raw_bound, parent_bound)
        self.offer_incumbent(beta, self.open_lower(raw_bound))
        if self.prunable(raw_bound):
            return None, None
        mvec = self.f.coef_upper
        with np.errstate(divide="ignore", invalid="ignore"):
            z = np.where(mvec > 0, splits / mvec, 0.0)
        z = np.clip(z, 0.0, 1.0)
        for j in fixed_one:
            z[j] = 1.0
        j, prefer_one = self._branch_choice(
            z, np.abs(beta), fixed_zero | fixed_one
        )
        if j is None:
            # integral relaxation: the incumbent offer above already
            # captured it; nothing left to branch on
            return None, None
        node = BnbNode(
            fixed_zero=frozenset(fixed_zero),
            fixed_one=frozenset(fixed_one),
            relaxation_bound=raw_bound,
            depth=depth,
            branch_coord=j,
            prefer_one=prefer_one,
        )
        if self.trace is not None:
            self.trace.append(node)
        return node, state


def _prepare_warm(problem, formulation, warm, events):
    """Vet a warm start against the polytope and the box caps.

    Returns (solution or None, guide support).  Infeasible warm points
    get a least-squares refit on their support; points outside the caps
    get clipped and refit.  Whatever survives becomes the initial
    incumbent, and the support always guides the first dive.
    """
    if warm is None:
        return None, ()
    sol = warm if isinstance(warm, Solution) else Solution.from_beta(problem, warm)
    guide = tuple(
        sorted(sol.support, key=lambda j: -abs(sol.beta[j]))
    )
    if not sol.is_feasible(FEAS_TOL):
        try:
            refit = polish(problem, sol.support)
        except RankDeficient:
            events.append("warm_discarded_rank_deficient")
            return None, guide
        if not refit.is_feasible(FEAS_TOL):
            events.append("warm_discarded_infeasible")
            return None, guide
        events.append("warm_refit")
        sol = refit
    caps = formulation.coef_upper
    if np.any(np.abs(sol.beta) > caps + 1e-9) or (
        formulation.l1_budget is not None
        and sol.l1_norm() > formulation.l1_budget + 1e-9
    ):
        clipped = np.clip(sol.beta, -caps, caps)
        cand = Solution.from_beta(problem, clipped)
        if cand.is_feasible(FEAS_TOL) and (
            formulation.l1_budget is None
            or cand.l1_norm() <= formulation.l1_budget + 1e-9
        ):
            events.append("warm_clipped")
            sol = cand
        else:
            events.append("warm_outside_caps")
            return None, guide
    if formulation.lifted and formulation.pred_upper is not None:
        fits = np.abs(formulation.problem.design.entries @ sol.beta)
        over = fits > formulation.pred_upper + 1e-9
        if np.any(over) or (
            formulation.pred_l1_budget is not None
            and np.sum(fits) > formulation.pred_l1_budget + 1e-9
        ):
            events.append("warm_outside_fitted_caps")
            return None, guide
    events.append("warm_accepted")
    return sol, guide


def branch_and_bound(
    formulation: MiloFormulation,
    warm_start=None,
    node_limit: Optional[int] = None,
    time_limit: Optional[float] = None,
    gap_limit: float = 0.0,
    int_tol: float = INT_TOL,
    dive_every: int = 10,
    collect_trace: bool = False,
    log_stream=None,
) -> MiloResult:
    """Best-bound branch-and-bound on the indicator relaxation.

    Deterministic given its inputs: nodes are keyed (bound, insertion
    order), branching picks the most fractional indicator with ties to
    the larger coefficient magnitude, and every ``dive_every``-th pop
    plunges depth-first.  A supplied warm start seeds the incumbent and
    steers the first plunge along its support.  Returns the incumbent
    with a certified lower bound: ``lower_bound`` is the ceiled best
    open bound, equal to the objective when status is "optimal".
    """
    if log_stream is None and _log_enabled():
        log_stream = sys.stderr
    s = _Search(formulation, int_tol, log_stream)
    if collect_trace:
        s.trace = []
    root_zero = frozenset(np.flatnonzero(formulation.coef_upper <= 0).tolist())
    warm_sol, guide = _prepare_warm(
        formulation.problem, formulation, warm_start, s.events
    )
    if warm_sol is not None:
        s.ub = float(warm_sol.objective)
        s.incumbent = warm_sol

    status, lpval, beta, splits, state = s.relax.solve(root_zero, frozenset(), None)
    s.nodes += 1
    if status != simplex.OPTIMAL:
        s.record(0.0, force=True)
        return MiloResult(
            incumbent=s.incumbent,
            lower_bound=0.0,
            gap=1.0 if s.incumbent is None else s.gap_of(0.0),
            nodes_explored=s.nodes,
            wall_time=time.time() - s.start,
            status="infeasible" if s.incumbent is None else "optimal",
            root_relaxation=np.inf,
            progress=s.progress,
            events=s.events,
            trace=s.trace,
        )
    root_raw = float(lpval)
    s.offer_incumbent(beta, root_raw)
    mvec = formulation.coef_upper
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(mvec > 0, splits / mvec, 0.0)
    z = np.clip(z, 0.0, 1.0)
    j0, prefer0 = s._branch_choice(z, np.abs(beta), root_zero)
    final_status = "optimal"
    if j0 is not None and not s.prunable(root_raw):
        root = BnbNode(
            fixed_zero=root_zero,
            fixed_one=frozenset(),
            relaxation_bound=root_raw,
            depth=0,
            branch_coord=j0,
            prefer_one=prefer0,
        )
        if s.trace is not None:
            s.trace.append(root)
        # guided first plunge: branch up the warm support before
        # falling back to the node's own preference
        guide_left = [j for j in guide if j not in root_zero]
        node, nstate = root, state
        while node is not None:
            nstate = s.relax.with_inverse(nstate)
            j = node.branch_coord
            forced = False
            if guide_left:
                cand = [
                    g
                    for g in guide_left
                    if g not in node.fixed_one and g not in node.fixed_zero
                ]
                guide_left = cand
                if cand:
                    j = cand[0]
                    guide_left = cand[1:]
                    forced = True
            one_first = True if forced else node.prefer_one
            first, second = (
                (("one", None), ("zero", j))
                if one_first
                else (("zero", j), ("one", None))
            )
            kids = []
            for kind, dj in (first, second):
                fz = node.fixed_zero | {j} if kind == "zero" else node.fixed_zero
                fo = node.fixed_one | {j} if kind == "one" else node.fixed_one
                child, cstate = s.make_node(
                    fz,
                    fo,
                    node.relaxation_bound,
                    node.depth + 1,
                    nstate,
                    drive_j=j if kind == "zero" else None,
                )
                if child is not None:
                    kids.append((child, cstate))
            if kids and (guide_left or forced):
                node, nstate = kids[0]
                for extra in kids[1:]:
                    s.push(*extra)
            else:
                for extra in kids:
                    s.push(*extra)
                node = None

        pops = 0
        while s.heap:
            raw_lower = s.open_lower()
            if s.gap_of(s.ceiled(raw_lower)) <= gap_limit and np.isfinite(s.ub):
                final_status = "gap_limit" if gap_limit > 0 else "optimal"
                break
            if node_limit is not None and s.nodes >= node_limit:
                final_status = "node_limit"
                break
            if time_limit is not None and time.time() - s.start > time_limit:
                final_status = "time_limit"
                break
            bound, _, node, nstate = heapq.heappop(s.heap)
            if s.prunable(bound):
                continue
            pops += 1
            dive = dive_every > 0 and pops % dive_every == 0
            while node is not None:
                nstate = s.relax.with_inverse(nstate)
                j = node.branch_coord
                first, second = (
                    (("one", None), ("zero", j))
                    if node.prefer_one
                    else (("zero", j), ("one", None))
                )
                kids = []
                for kind, _ in (first, second):
                    fz = node.fixed_zero | {j} if kind == "zero" else node.fixed_zero
                    fo = node.fixed_one | {j} if kind == "one" else node.fixed_one
                    child, cstate = s.make_node(
                        fz,
                        fo,
                        node.relaxation_bound,
                        node.depth + 1,
                        nstate,
                        drive_j=j if kind == "zero" else None,
                    )
                    if child is not None:
                        kids.append((child, cstate))
                if dive and kids:
                    node, nstate = kids[0]
                    for extra in kids[1:]:
                        s.push(*extra)
                else:
                    for extra in kids:
                        s.push(*extra)
                    node = None
                if s.nodes % PROGRESS_EVERY == 0:
                    s.record(s.open_lower(node.relaxation_bound if node else None))
        else:
            final_status = "optimal"

    if final_status == "optimal":
        raw_lower = s.ub if np.isfinite(s.ub) else 0.0
    else:
        raw_lower = s.open_lower()
    lower = s.ceiled(raw_lower)
    s.record(raw_lower, force=True)
    return MiloResult(
        incumbent=s.incumbent,
        lower_bound=lower,
        gap=s.gap_of(lower),
        nodes_explored=s.nodes,
        wall_time=time.time() - s.start,
        status=final_status if s.incumbent is not None else "infeasible",
        root_relaxation=root_raw,
        progress=s.progress,
        events=s.events,
        trace=s.trace,
    )


# ----------------------------------------------------------------------
# the full pipeline


@dataclass
class MiloConfig:
    big_m: float = DEFAULT_BIG_M
    bounds_mode: str = "auto"  # "auto" | "warm" | "lp" | "none"
    tau: float = 2.0
    use_fitted_caps: bool = False
    node_limit: Optional[int] = None
    time_limit: Optional[float] = None
    gap_limit: float = 0.0
    int_tol: float = INT_TOL
    heuristic: bool = True
    max_doublings: int = 3
    collect_trace: bool = False
    lifted: Optional[bool] = None


def solve_with_intelligence(
    problem: ProblemData,
    warm_start=None,
    config: Optional[MiloConfig] = None,
    log_stream=None,
) -> MiloResult:
    """Heuristic warm start, scaled caps, then certifying search.

    Runs the hybrid heuristic unless a warm start is supplied, derives
    caps per ``bounds_mode``, and solves the tightened model.

    Cap soundness differs by mode.  "lp" caps come from polytope
    extremes, hold for every optimum, and keep the optimality
    certificate unconditional; they need every coordinate bounded,
    which fails when n < p.  "warm" caps are scale guesses around the
    warm point and can cut off optima entirely, in which case a
    returned "optimal" certifies only the capped model; the
    caps_warm_unverified event marks such runs.  The default "auto"
    prefers lp caps, falls back to no caps on small underdetermined
    problems where the plain model is still tractable, and only then
    accepts warm caps.

    Whenever the search comes back infeasible or worse than the warm
    point, the caps double and the solve repeats, falling back to the
    plain big-M model after ``max_doublings`` rounds.  The result never
    ends worse than an accepted warm start.
    """
    cfg = config or MiloConfig()
    events: List[str] = []
    warm_sol: Optional[Solution] = None
    if warm_start is not None:
        warm_sol = (
            warm_start
            if isinstance(warm_start, Solution)
            else Solution.from_beta(problem, warm_start)
        )
        if not warm_sol.is_feasible(FEAS_TOL):
            raise InfeasibleWarmStart("supplied warm start violates the constraint")
    elif cfg.heuristic:
        warm_sol = hybrid_run(problem).solution
        events.append("hybrid_warm_start")

    if cfg.bounds_mode not in ("auto", "warm", "lp", "none"):
        raise InconsistentBounds(f"unknown bounds_mode {cfg.bounds_mode!r}")
    bset: Optional[BoundSet] = None
    mode = cfg.bounds_mode
    if mode == "auto":
        if problem.n >= problem.p:
            mode = "lp"
        elif problem.p <= PLAIN_SMALL_P:
            mode = "none"
            events.append("caps_skipped_small_p")
        else:
            mode = "warm"
    if mode == "lp":
        cap = problem.p
        if warm_sol is not None and warm_sol.objective > 0:
            cap = warm_sol.objective
        try:
            bset = coef_bounds_refined(problem, support_cap=cap)
            events.append("caps_lp_refined")
        except (UnboundedCoordinate, InfeasibleAugmentedPolytope):
            # rank-deficient design; same soundness story as n < p
            if cfg.bounds_mode == "lp":
                raise
            mode = "warm" if problem.p > PLAIN_SMALL_P else "none"
            events.append("caps_lp_unbounded")
    if mode == "warm" and warm_sol is not None:
        bset = warm_start_bounds(
            problem, warm_sol, tau=cfg.tau, fallback_big_m=cfg.big_m
        )
        events.append("caps_warm_unverified")
    if bset is not None and not cfg.use_fitted_caps:
        bset = bset.without_prediction()

    attempt = 0
    while True:
        formulation = build_formulation(
            problem, big_m=cfg.big_m, bounds=bset, lifted=cfg.lifted
        )
        result = branch_and_bound(
            formulation,
            warm_start=warm_sol,
            node_limit=cfg.node_limit,
            time_limit=cfg.time_limit,
            gap_limit=cfg.gap_limit,
            int_tol=cfg.int_tol,
            collect_trace=cfg.collect_trace,
            log_stream=log_stream,
        )
        result.events = events + result.events
        acceptable = result.incumbent is not None and (
            warm_sol is None or result.incumbent.objective <= warm_sol.objective
        )
        if acceptable or bset is None:
            break
        attempt += 1
        if attempt <= cfg.max_doublings:
            bset = bset.scaled(2.0)
            events.append(f"caps_doubled_{attempt}")
        else:
            bset = None
            events.append("caps_dropped")
    if (
        result.incumbent is None
        and warm_sol is not None
    ):  # pragma: no cover - the plain model always admits the warm point
        result.incumbent = warm_sol
        result.status = "optimal" if result.lower_bound >= warm_sol.objective else result.status
    return result
