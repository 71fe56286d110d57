"""Dense revised simplex for bounded-variable linear programs.

Internal engine behind :mod:`ddsel.lp`, the bound-tightening LPs, and the
branch-and-bound node relaxations.  Problems are held in equality form

    min c'x   s.t.  A x = b,   lo <= x <= hi,

with entries of ``lo``/``hi`` allowed to be infinite.  The engine appends
one artificial column per row; Phase I minimizes the total artificial
magnitude from an all-artificial basis, Phase II re-prices with the true
objective while the artificials stay pinned at zero.

The basis inverse is kept explicitly and updated in product form each
pivot, with a full refactorization every ``REFACTOR_EVERY`` pivots to keep
rounding error in check.  Pricing uses the classical most-negative rule
and falls back to Bland's rule after a run of degenerate pivots, which
restores the finite-termination guarantee.

Warm starts: ``solve`` accepts the (basis, vstat) snapshot of an earlier
result, or (basis, vstat, Binv) to skip the inverse rebuild; a provided
inverse is validated against the stored matrix and copied, never
mutated.  A snapshot whose basic point violates the current bounds by
more than a small band triggers a cold restart, so callers may hand in
stale bases safely.  ``dual_pin`` restores primal feasibility after a
bound tightening by dual pivots from a previously optimal basis; it is
a best-effort accelerator whose output still goes through ``solve``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import NumericalBreakdown

try:
    from scipy.linalg.blas import dger as _dger
except Exception:  # pragma: no cover - scipy always present in practice
    _dger = None


def _rank1_update(Binv, u, row):
    """Binv -= outer(u, row), in place without the temporary when BLAS
    cooperates."""
    if _dger is not None and Binv.flags.c_contiguous:
        _dger(-1.0, row, u, a=Binv.T, overwrite_a=1)
    else:
        Binv -= np.outer(u, row)

NB_LO, NB_HI, BASIC, NB_FREE = 0, 1, 2, 3

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
ITERATION_LIMIT = "iteration_limit"

REFACTOR_EVERY = 100
RC_TOL = 1e-9
PIV_TOL = 1e-10
RATIO_TIE = 1e-10
DEGEN_STEP = 1e-12
FEAS_BAND = 1e-7


@dataclass
class EngineResult:
    status: str
    x: np.ndarray
    objective: float
    duals: np.ndarray
    basis: np.ndarray
    vstat: np.ndarray
    iterations: int
    cold_restarted: bool = False


class SimplexEngine:
    """Holds the constraint matrix of one model; solves many objectives."""

    def __init__(self, A, b):
        A = np.ascontiguousarray(A, dtype=float)
        b = np.ascontiguousarray(b, dtype=float).reshape(-1)
        if A.ndim != 2 or A.shape[0] != b.shape[0]:
            raise ValueError("A and b shapes disagree")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
            raise ValueError("A and b must be finite")
        self.k, self.N = A.shape
        self.b = b
        # artificial identity block lives in the last k columns
        self.A_ext = np.hstack([A, np.eye(self.k)])

    # ------------------------------------------------------------------

    def solve(
        self,
        c,
        lo,
        hi,
        state=None,
        phase1_only: bool = False,
        target: float = None,
        max_iter: int = None,
    ) -> EngineResult:
        k, N = self.k, self.N
        Next = N + k
        c_ext = np.zeros(Next)
        c_ext[:N] = np.asarray(c, dtype=float).reshape(-1)
        lo_ext = np.empty(Next)
        hi_ext = np.empty(Next)
        lo_ext[:N] = np.asarray(lo, dtype=float).reshape(-1)
        hi_ext[:N] = np.asarray(hi, dtype=float).reshape(-1)
        lo_ext[N:] = 0.0
        hi_ext[N:] = 0.0
        if np.any(lo_ext > hi_ext + 1e-12):
            raise ValueError("crossed bounds lo > hi")
        if max_iter is None:
            max_iter = 20000 + 60 * (k + N)

        cold_restarted = False
        basis = vstat = Binv = xB = None
        if state is not None:
            basis, vstat = state[0], state[1]
            given_inv = state[2] if len(state) > 2 else None
            basis = np.array(basis, dtype=np.int64)
            vstat = np.array(vstat, dtype=np.int8)
            ok = basis.shape == (k,) and vstat.shape == (Next,)
            if ok:
                self._repair_statuses(vstat, lo_ext, hi_ext)
                Binv = self._take_inverse(basis, given_inv)
                if Binv is None:
                    ok = False
            if ok:
                xB = self._basic_values(basis, vstat, lo_ext, hi_ext, Binv)
                band = FEAS_BAND * (1.0 + np.max(np.abs(self.b)))
                viol = np.maximum(lo_ext[basis] - xB, xB - hi_ext[basis])
                if np.max(viol, initial=0.0) > band:
                    ok = False
            if not ok:
                basis = None
                cold_restarted = True

        iterations = 0
        if basis is None:
            # cold start: all-artificial basis, Phase I
            vstat = np.where(
                np.isfinite(lo_ext),
                NB_LO,
                np.where(np.isfinite(hi_ext), NB_HI, NB_FREE),
            ).astype(np.int8)
            xN = self._nonbasic_values(vstat, lo_ext, hi_ext)
            r = self.b - self.A_ext[:, :N] @ xN[:N]
            basis = np.arange(N, Next, dtype=np.int64)
            vstat[N:] = BASIC
            Binv = np.eye(k)
            xB = r.copy()
            c1 = np.zeros(Next)
            c1[N:] = np.where(r >= 0.0, 1.0, -1.0)
            lo1 = lo_ext.copy()
            hi1 = hi_ext.copy()
            lo1[N:] = np.where(r >= 0.0, 0.0, -np.inf)
            hi1[N:] = np.where(r >= 0.0, np.inf, 0.0)
            status, it = self._iterate(
                c1, lo1, hi1, basis, vstat, Binv, xB,
                max_iter=max_iter, target=FEAS_BAND * 0.1,
            )
            iterations += it
            p1_obj = self._objective(c1, basis, vstat, lo1, hi1, xB)
            if status == ITERATION_LIMIT:
                return self._finish(
                    ITERATION_LIMIT, c_ext, basis, vstat, lo_ext, hi_ext,
                    Binv, xB, iterations, cold_restarted,
                )
            if p1_obj > FEAS_BAND * (1.0 + np.max(np.abs(self.b))):
                return self._finish(
                    INFEASIBLE, c_ext, basis, vstat, lo_ext, hi_ext,
                    Binv, xB, iterations, cold_restarted,
                )
            # artificials out of the basis where a structural pivot exists
            self._expel_artificials(basis, vstat, Binv, xB, lo_ext, hi_ext)
            vstat[N:][vstat[N:] != BASIC] = NB_LO
            if phase1_only:
                return self._finish(
                    OPTIMAL, c_ext, basis, vstat, lo_ext, hi_ext,
                    Binv, xB, iterations, cold_restarted,
                )

        status, it = self._iterate(
            c_ext, lo_ext, hi_ext, basis, vstat, Binv, xB,
            max_iter=max_iter, target=target,
        )
        iterations += it
        return self._finish(
            status, c_ext, basis, vstat, lo_ext, hi_ext, Binv, xB,
            iterations, cold_restarted,
        )

    # ------------------------------------------------------------------

    def _take_inverse(self, basis, given):
        """Copy of a caller-supplied basis inverse after a residual
        check, or a fresh one; None when the basis is singular."""
        if given is not None and given.shape == (self.k, self.k):
            r = self.A_ext[:, basis] @ (given @ self.b) - self.b
            if np.max(np.abs(r), initial=0.0) <= 1e-6 * (
                1.0 + np.max(np.abs(self.b), initial=0.0)
            ):
                return given.copy()
        try:
            return np.linalg.inv(self.A_ext[:, basis])
        except np.linalg.LinAlgError:
            return None

    def attach_inverse(self, state):
        """(basis, vstat) -> (basis, vstat, Binv) so several solves can
        share one factorization; returns the input when that fails."""
        if state is None or len(state) > 2:
            return state
        basis = np.asarray(state[0], dtype=np.int64)
        try:
            Binv = np.linalg.inv(self.A_ext[:, basis])
        except np.linalg.LinAlgError:
            return state
        return (basis, state[1], Binv)

    def _repair_statuses(self, vstat, lo, hi):
        nb = vstat != BASIC
        bad_lo = nb & (vstat == NB_LO) & ~np.isfinite(lo)
        vstat[bad_lo & np.isfinite(hi)] = NB_HI
        vstat[bad_lo & ~np.isfinite(hi)] = NB_FREE
        bad_hi = nb & (vstat == NB_HI) & ~np.isfinite(hi)
        vstat[bad_hi & np.isfinite(lo)] = NB_LO
        vstat[bad_hi & ~np.isfinite(lo)] = NB_FREE
        bad_free = nb & (vstat == NB_FREE) & np.isfinite(lo)
        vstat[bad_free] = NB_LO

    def _nonbasic_values(self, vstat, lo, hi):
        vals = np.where(vstat == NB_LO, lo, np.where(vstat == NB_HI, hi, 0.0))
        vals[~np.isfinite(vals)] = 0.0
        return vals

    def _basic_values(self, basis, vstat, lo, hi, Binv):
        xN = self._nonbasic_values(vstat, lo, hi)
        xN[basis] = 0.0
        return Binv @ (self.b - self.A_ext @ xN)

    def _objective(self, c, basis, vstat, lo, hi, xB):
        x = self._nonbasic_values(vstat, lo, hi)
        x[basis] = xB
        return float(c @ x)

    def _expel_artificials(self, basis, vstat, Binv, xB, lo, hi):
        N = self.N
        blocked = (vstat[:N] == BASIC) | ((hi[:N] - lo[:N]) <= 0.0)
        for i in range(self.k):
            if basis[i] < N:
                continue
            row = Binv[i] @ self.A_ext[:, :N]
            row[blocked] = 0.0
            j = int(np.argmax(np.abs(row)))
            if abs(row[j]) <= 1e-7:
                continue  # redundant row; artificial stays pinned at zero
            u = Binv @ self.A_ext[:, j]
            enter_val = self._entering_value(j, vstat, lo, hi)
            old = basis[i]
            basis[i] = j
            vstat[j] = BASIC
            vstat[old] = NB_LO
            blocked[j] = True
            piv = u[i]
            newrow = Binv[i] / piv
            _rank1_update(Binv, u, newrow)
            Binv[i] = newrow
            # a zero-step pivot: the entering variable keeps its bound value
            xB[i] = enter_val

    # ------------------------------------------------------------------

    def _iterate(self, c, lo, hi, basis, vstat, Binv, xB, max_iter, target=None):
        """Primal simplex loop; mutates basis/vstat/Binv/xB in place."""
        A = self.A_ext
        k = self.k
        fixed = (hi - lo) <= 0.0
        degen_run = 0
        bland = False
        bland_after = 3 * (k + A.shape[1])
        pivots = 0

        for it in range(1, max_iter + 1):
            y = c[basis] @ Binv
            rc = c - y @ A
            nb_lo = (vstat == NB_LO) & ~fixed
            nb_hi = (vstat == NB_HI) & ~fixed
            nb_fr = (vstat == NB_FREE) & ~fixed
            elig = (
                (nb_lo & (rc < -RC_TOL))
                | (nb_hi & (rc > RC_TOL))
                | (nb_fr & (np.abs(rc) > RC_TOL))
            )
            if not np.any(elig):
                return OPTIMAL, it - 1
            if target is not None:
                obj = self._objective(c, basis, vstat, lo, hi, xB)
                if obj <= target:
                    return OPTIMAL, it - 1
            if bland:
                q = int(np.argmax(elig))
            else:
                score = np.where(elig, np.abs(rc), -1.0)
                q = int(np.argmax(score))
            sigma = 1.0 if (vstat[q] == NB_LO or (vstat[q] == NB_FREE and rc[q] < 0)) else -1.0

            u = Binv @ A[:, q]
            du = sigma * u
            lo_b = lo[basis]
            hi_b = hi[basis]
            with np.errstate(divide="ignore", invalid="ignore"):
                t_low = np.where(du > PIV_TOL, (xB - lo_b) / du, np.inf)
                t_upp = np.where(du < -PIV_TOL, (hi_b - xB) / (-du), np.inf)
            t_low[np.isnan(t_low)] = np.inf
            t_upp[np.isnan(t_upp)] = np.inf
            t_basic = np.maximum(np.minimum(t_low, t_upp), 0.0)
            r = int(np.argmin(t_basic))
            t_row = t_basic[r]
            t_enter = hi[q] - lo[q] if (np.isfinite(hi[q]) and np.isfinite(lo[q])) else np.inf

            if t_row == np.inf and t_enter == np.inf:
                return UNBOUNDED, it

            if t_enter <= t_row:
                # bound flip, basis unchanged
                xB -= sigma * t_enter * u
                vstat[q] = NB_HI if vstat[q] == NB_LO else NB_LO
                continue

            # pivot row: among near-minimal ratios prefer a large pivot
            # element (stability); under Bland, smallest variable index.
            cand = np.flatnonzero(t_basic <= t_row + RATIO_TIE)
            if bland:
                r = int(cand[np.argmin(basis[cand])])
            else:
                r = int(cand[np.argmax(np.abs(du[cand]))])
            t = t_basic[r]

            enter_val = self._entering_value(q, vstat, lo, hi) + sigma * t
            xB -= sigma * t * u
            leave = basis[r]
            vstat[leave] = NB_LO if du[r] > 0 else NB_HI
            if vstat[leave] == NB_LO and not np.isfinite(lo[leave]):
                vstat[leave] = NB_FREE
            if vstat[leave] == NB_HI and not np.isfinite(hi[leave]):
                vstat[leave] = NB_FREE
            basis[r] = q
            vstat[q] = BASIC
            xB[r] = enter_val

            piv = u[r]
            if abs(piv) < 1e-11:
                self._refactorize(basis, vstat, lo, hi, Binv, xB)
            else:
                newrow = Binv[r] / piv
                _rank1_update(Binv, u, newrow)
                Binv[r] = newrow
            pivots += 1
            if pivots % REFACTOR_EVERY == 0:
                self._refactorize(basis, vstat, lo, hi, Binv, xB)

            if t <= DEGEN_STEP:
                degen_run += 1
                if degen_run >= bland_after:
                    bland = True
            else:
                degen_run = 0
                bland = False

        return ITERATION_LIMIT, max_iter

    def _entering_value(self, q, vstat, lo, hi):
        if vstat[q] == NB_LO:
            return lo[q]
        if vstat[q] == NB_HI:
            return hi[q]
        return 0.0

    def _refactorize(self, basis, vstat, lo, hi, Binv, xB):
        try:
            fresh = np.linalg.inv(self.A_ext[:, basis])
        except np.linalg.LinAlgError as exc:
            raise NumericalBreakdown("singular basis during refactorization") from exc
        Binv[...] = fresh
        xB[...] = self._basic_values(basis, vstat, lo, hi, Binv)

    def dual_pin(self, c, lo, hi, state, max_pivots=150):
        """Dual-simplex repair of a warm basis after bound tightening.

        ``state`` should be (near-)optimal for the same objective under
        looser bounds; reduced-cost signs then stay valid and each pivot
        moves the worst bound violation onto its bound.  The ratio test
        is bound-flipping: candidates are consumed in dual-ratio order,
        flipping each one whose full range still leaves violation, so a
        flip can never repeat within an iteration and the dual objective
        is nondecreasing.  Returns a (basis, vstat, Binv) snapshot once
        primal feasible, or None when the repair stalls; callers must
        still run ``solve`` on the result, so a bad outcome costs time,
        never correctness.
        """
        k, N = self.k, self.N
        Next = N + k
        c_ext = np.zeros(Next)
        c_ext[:N] = np.asarray(c, dtype=float).reshape(-1)
        lo_ext = np.empty(Next)
        hi_ext = np.empty(Next)
        lo_ext[:N] = np.asarray(lo, dtype=float).reshape(-1)
        hi_ext[:N] = np.asarray(hi, dtype=float).reshape(-1)
        lo_ext[N:] = 0.0
        hi_ext[N:] = 0.0

        basis = np.array(state[0], dtype=np.int64)
        vstat = np.array(state[1], dtype=np.int8)
        if basis.shape != (k,) or vstat.shape != (Next,):
            return None
        given = state[2] if len(state) > 2 else None
        self._repair_statuses(vstat, lo_ext, hi_ext)
        Binv = self._take_inverse(basis, given)
        if Binv is None:
            return None
        xB = self._basic_values(basis, vstat, lo_ext, hi_ext, Binv)
        band = FEAS_BAND * (1.0 + np.max(np.abs(self.b), initial=0.0))
        movable = (hi_ext - lo_ext) > 0.0
        y = c_ext[basis] @ Binv
        rc = c_ext - y @ self.A_ext

        for _ in range(max_pivots):
            over = xB - hi_ext[basis]
            under = lo_ext[basis] - xB
            worst = np.maximum(over, under)
            r = int(np.argmax(worst))
            if worst[r] <= band:
                return basis, vstat, Binv
            leave_upper = over[r] >= under[r]
            alpha = Binv[r] @ self.A_ext
            a = alpha if leave_upper else -alpha
            piv_floor = 1e-7 * max(1.0, float(np.max(np.abs(a))))
            elig_lo = (vstat == NB_LO) & (a > piv_floor)
            elig_hi = (vstat == NB_HI) & (a < -piv_floor)
            elig_fr = (vstat == NB_FREE) & (np.abs(a) > piv_floor)
            elig = (elig_lo | elig_hi | elig_fr) & movable
            cols = np.flatnonzero(elig)
            if cols.size == 0:
                return None
            with np.errstate(divide="ignore", invalid="ignore"):
                tau_all = np.where(elig_fr, np.abs(rc) / np.abs(a), rc / a)
            tau = np.maximum(tau_all[cols], 0.0)
            order = np.lexsort((-np.abs(a[cols]), tau))
            remain = float(worst[r])
            q = -1
            for idx in order:
                m = int(cols[idx])
                width = hi_ext[m] - lo_ext[m]
                absorb = abs(a[m]) * width
                if np.isfinite(width) and absorb < remain - band:
                    # column m cannot absorb the rest of the violation:
                    # flip it across its range and move on; a flip
                    # cannot repeat within this ratio pass
                    d = width if vstat[m] == NB_LO else -width
                    xB -= (Binv @ self.A_ext[:, m]) * d
                    vstat[m] = NB_HI if vstat[m] == NB_LO else NB_LO
                    remain -= absorb
                    continue
                q = m
                break
            if q < 0:
                return None
            step = remain / a[q]
            new_val = self._entering_value(q, vstat, lo_ext, hi_ext) + step
            u = Binv @ self.A_ext[:, q]
            piv = u[r]
            if abs(piv) < 1e-11:
                return None
            xB -= u * step
            leave = basis[r]
            vstat[leave] = NB_HI if leave_upper else NB_LO
            if not np.isfinite(hi_ext[leave]) and vstat[leave] == NB_HI:
                vstat[leave] = NB_FREE
            if not np.isfinite(lo_ext[leave]) and vstat[leave] == NB_LO:
                vstat[leave] = NB_FREE
            basis[r] = q
            vstat[q] = BASIC
            xB[r] = new_val
            newrow = Binv[r] / piv
            _rank1_update(Binv, u, newrow)
            Binv[r] = newrow
            # incremental reduced costs: the dual step is a multiple of
            # the sign-adjusted pivot row in both leave directions; any
            # column flipped above has a ratio at most this step, so its
            # sign condition holds at the new status
            theta = rc[q] / a[q]
            rc -= theta * a
            rc[q] = 0.0
        return None

    # ------------------------------------------------------------------

    def _finish(self, status, c, basis, vstat, lo, hi, Binv, xB, iterations, cold):
        x = self._nonbasic_values(vstat, lo, hi)
        x[basis] = xB
        y = c[basis] @ Binv
        return EngineResult(
            status=status,
            x=x[: self.N],
            objective=float(c[: self.N] @ x[: self.N]),
            duals=y,
            basis=basis,
            vstat=vstat,
            iterations=iterations,
            cold_restarted=cold,
        )
