"""Reference solutions and identifiability constants.

Small exact tools that anchor the solvers: the closed-form solution
family for orthonormal designs, exhaustive support enumeration for tiny
problems (the oracle that branch-and-bound is tested against), restricted
eigenvalues of the design, and the high-probability error-bound checker
built on them.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Tuple

import numpy as np

from .core import ProblemData, Solution, DesignMatrix
from .exceptions import (
    DimensionMismatch,
    GammaUnavailable,
    TieAtThreshold,
    TooLarge,
)
from .lp import PolytopeLp

ENUM_GUARD = 1_000_000


# ----------------------------------------------------------------------
# orthonormal closed form


@dataclass(frozen=True)
class OrthoSolutionSet:
    """Solution family of the L0 problem under an orthonormal design.

    With correlations c sorted by magnitude, every optimal vector keeps
    exactly the ``k`` coordinates whose |c_j| exceeds delta and perturbs
    each kept value by at most delta; all other coordinates are zero.
    ``base`` is the best-subset representative (kept values equal to c).
    """

    k: int
    support: Tuple[int, ...]
    base: np.ndarray
    delta: float

    def contains(self, beta, tol: float = 1e-9) -> bool:
        beta = np.asarray(beta, dtype=float).reshape(-1)
        if beta.shape != self.base.shape:
            raise DimensionMismatch("beta length disagrees with base")
        off = np.ones(len(self.base), dtype=bool)
        for j in self.support:
            off[j] = False
            if abs(beta[j] - self.base[j]) > self.delta + tol:
                return False
            if abs(beta[j]) <= tol:
                return False
        return bool(np.all(np.abs(beta[off]) <= tol))


def orthonormal_solution(c, delta: float) -> OrthoSolutionSet:
    """Closed-form L0 solution set when the Gram matrix is the identity.

    Parameters
    ----------
    c : array
        Correlations X'y.
    delta : float
        Constraint level; must not coincide with any |c_j| (within 1e-12)
        or the family is ill-defined and TieAtThreshold is raised.
    """
    c = np.asarray(c, dtype=float).reshape(-1)
    delta = float(delta)
    if delta < 0:
        raise DimensionMismatch("delta must be nonnegative")
    mags = np.abs(c)
    if np.any(np.abs(mags - delta) <= 1e-12):
        raise TieAtThreshold(f"|c_j| equals delta={delta} for some j")
    keep = mags > delta
    order = np.argsort(-mags[keep], kind="stable")
    support = tuple(int(j) for j in np.flatnonzero(keep)[order])
    base = np.where(keep, c, 0.0)
    return OrthoSolutionSet(k=int(keep.sum()), support=support, base=base, delta=delta)


# ----------------------------------------------------------------------
# exhaustive enumeration oracle


def brute_force_dds(problem: ProblemData, max_p: int = 14) -> Solution:
    """Exact minimum-support solution by enumerating supports.

    Walks cardinalities 0, 1, 2, ... and tests each support for polytope
    feasibility with a Phase-I simplex; the first feasible support is
    provably minimal.  Guarded by ``max_p`` since the work is
    combinatorial.
    """
    p = problem.p
    if p > max_p:
        raise TooLarge(f"p={p} exceeds enumeration guard max_p={max_p}")
    dmax = float(np.max(np.abs(problem.correlations), initial=0.0))
    if dmax <= problem.delta:
        return Solution.from_beta(problem, np.zeros(p))
    poly = PolytopeLp(problem.gram, problem.correlations, problem.delta)
    allj = list(range(p))
    for k in range(1, p + 1):
        for supp in itertools.combinations(allj, k):
            fixed = [j for j in allj if j not in supp]
            point = poly.feasible_point(fixed_zero=fixed)
            if point is not None:
                return Solution.from_beta(problem, point)
    # the unrestricted polytope is nonempty whenever the data are
    # consistent, so this is unreachable for valid inputs
    raise TooLarge("no feasible support found; malformed problem data")


# ----------------------------------------------------------------------
# restricted eigenvalues


def _count_combinations(n: int, k: int) -> int:
    return math.comb(n, k)


def gamma_constant(
    design: DesignMatrix,
    k: int,
    support_superset: Optional[Iterable[int]] = None,
    guard: int = ENUM_GUARD,
) -> float:
    """Smallest singular value of any k-column submatrix of the design.

    Equals the minimum of ||X theta|| / ||theta|| over k-sparse theta.
    ``support_superset`` restricts the enumeration to column sets that
    contain the given indices (the sharpened variant).  Raises TooLarge
    when the number of subsets exceeds ``guard``.
    """
    X = design.entries if isinstance(design, DesignMatrix) else np.asarray(design, float)
    p = X.shape[1]
    if not 1 <= k <= p:
        raise DimensionMismatch(f"k={k} outside [1, {p}]")
    fixed: Tuple[int, ...] = ()
    if support_superset is not None:
        fixed = tuple(sorted(set(int(j) for j in support_superset)))
        if any(j < 0 or j >= p for j in fixed):
            raise DimensionMismatch("support_superset index out of range")
        if len(fixed) > k:
            raise DimensionMismatch("support_superset larger than k")
    rest = [j for j in range(p) if j not in fixed]
    n_sub = _count_combinations(len(rest), k - len(fixed))
    if n_sub > guard:
        raise TooLarge(f"{n_sub} column subsets exceed guard {guard}")
    best = np.inf
    for extra in itertools.combinations(rest, k - len(fixed)):
        cols = sorted(fixed + extra)
        G = X[:, cols].T @ X[:, cols]
        ev = np.linalg.eigvalsh(G)[0]
        best = min(best, np.sqrt(max(ev, 0.0)))
    return float(best)


@dataclass(frozen=True)
class KappaResult:
    """Cone-restricted eigenvalue estimate; ``exact`` marks the dense-grid
    computation (p <= 4) as opposed to the multi-start upper estimate."""

    value: float
    exact: bool
    k: int
    c0: float
    m: Optional[int]


def _l1_ball_project(v: np.ndarray, radius: float) -> np.ndarray:
    """Euclidean projection of v onto the L1 ball of the given radius."""
    if radius <= 0:
        return np.zeros_like(v)
    a = np.abs(v)
    if a.sum() <= radius:
        return v.copy()
    u = np.sort(a)[::-1]
    css = np.cumsum(u)
    idx = np.arange(1, len(u) + 1)
    rho = np.max(np.flatnonzero(u * idx > (css - radius))) + 1
    theta = (css[rho - 1] - radius) / rho
    return np.sign(v) * np.maximum(a - theta, 0.0)


def _kappa_ratio(X, theta, J0, c0, m):
    """Ratio ||X theta|| / denom for one cone point; inf when invalid."""
    tJ = theta[J0]
    nJ1 = float(np.sum(np.abs(tJ)))
    off = np.delete(np.arange(len(theta)), J0)
    if np.sum(np.abs(theta[off])) > c0 * nJ1 + 1e-12:
        return np.inf
    if m is None:
        denom = float(np.linalg.norm(tJ))
    else:
        mags = np.abs(theta[off])
        take = off[np.argsort(-mags, kind="stable")[:m]]
        denom = float(np.sqrt(np.sum(tJ**2) + np.sum(theta[take] ** 2)))
    if denom <= 1e-12:
        return np.inf
    return float(np.linalg.norm(X @ theta) / denom)


def _sphere_grid(p: int, resolution: float):
    """Yield blocks of unit vectors covering the sphere at the given
    angular resolution; p <= 4."""
    if p == 1:
        yield np.array([[1.0], [-1.0]])
        return
    if p == 2:
        ang = np.arange(0.0, 2 * np.pi, resolution)
        yield np.column_stack([np.cos(ang), np.sin(ang)])
        return
    if p == 3:
        phi = np.arange(0.0, np.pi + resolution, resolution)
        psi = np.arange(0.0, 2 * np.pi, resolution)
        for f in phi:
            s = np.sin(f)
            yield np.column_stack(
                [np.full(len(psi), np.cos(f)), s * np.cos(psi), s * np.sin(psi)]
            )
        return
    if p == 4:
        phi1 = np.arange(0.0, np.pi + resolution, resolution)
        phi2 = np.arange(0.0, np.pi + resolution, resolution)
        psi = np.arange(0.0, 2 * np.pi, resolution)
        for f1 in phi1:
            s1 = np.sin(f1)
            for f2 in phi2:
                s2 = np.sin(f2)
                yield np.column_stack(
                    [
                        np.full(len(psi), np.cos(f1)),
                        np.full(len(psi), s1 * np.cos(f2)),
                        s1 * s2 * np.cos(psi),
                        s1 * s2 * np.sin(psi),
                    ]
                )
        return
    raise TooLarge("dense sphere grid limited to p <= 4")


def _kappa_grid(X, k, c0, m, resolution):
    p = X.shape[1]
    best = np.inf
    subsets = list(itertools.combinations(range(p), k))
    arange = np.arange(p)
    for block in _sphere_grid(p, resolution):
        Xb = block @ X.T  # rows are X theta
        row_norm = np.linalg.norm(Xb, axis=1)
        absb = np.abs(block)
        for J0 in subsets:
            J0a = np.array(J0)
            off = np.setdiff1d(arange, J0a, assume_unique=True)
            l1_in = absb[:, J0a].sum(axis=1)
            l1_out = absb[:, off].sum(axis=1) if len(off) else np.zeros(len(block))
            cone = l1_out <= c0 * l1_in + 1e-12
            if not np.any(cone):
                continue
            if m is None:
                denom = np.linalg.norm(block[:, J0a], axis=1)
            else:
                sorted_off = (
                    np.sort(absb[:, off], axis=1)[:, ::-1][:, :m]
                    if len(off)
                    else np.zeros((len(block), 0))
                )
                denom = np.sqrt(
                    np.sum(block[:, J0a] ** 2, axis=1)
                    + np.sum(sorted_off**2, axis=1)
                )
            ok = cone & (denom > 1e-12)
            if not np.any(ok):
                continue
            best = min(best, float(np.min(row_norm[ok] / denom[ok])))
    return best


def _kappa_multistart(X, k, c0, m, starts, iters, seed, subset_cap):
    p = X.shape[1]
    rng = np.random.Generator(np.random.Philox(key=seed))
    n_sub = _count_combinations(p, k)
    if n_sub <= subset_cap:
        subsets = list(itertools.combinations(range(p), k))
    else:
        subsets = [
            tuple(sorted(rng.choice(p, size=k, replace=False))) for _ in range(subset_cap)
        ]
    L = np.linalg.norm(X, 2) ** 2
    step = 1.0 / max(L, 1e-12)
    G = X.T @ X
    best = np.inf
    for J0 in subsets:
        J0a = np.array(J0)
        off = np.setdiff1d(np.arange(p), J0a, assume_unique=True)
        for s in range(starts):
            theta = rng.standard_normal(p)
            if s == 0:
                theta = np.zeros(p)
                theta[J0a] = 1.0
            # renormalize into the cone
            nJ = np.linalg.norm(theta[J0a])
            if nJ <= 1e-12:
                theta[J0a] = 1.0
                nJ = np.sqrt(k)
            theta /= nJ
            theta[off] = _l1_ball_project(theta[off], c0 * np.sum(np.abs(theta[J0a])))
            best = min(best, _kappa_ratio(X, theta, J0a, c0, m))
            for _ in range(iters):
                theta = theta - step * (G @ theta)
                nJ = np.linalg.norm(theta[J0a])
                if nJ <= 1e-12:
                    break
                theta /= nJ
                theta[off] = _l1_ball_project(
                    theta[off], c0 * np.sum(np.abs(theta[J0a]))
                )
                best = min(best, _kappa_ratio(X, theta, J0a, c0, m))
    return best


def kappa_estimate(
    design,
    k: int,
    c0: float,
    m: Optional[int] = None,
    method: str = "auto",
    resolution: float = 0.02,
    starts: int = 8,
    iters: int = 200,
    seed: int = 0,
    subset_cap: int = 2000,
) -> KappaResult:
    """Cone-restricted eigenvalue kappa(k, c0) or kappa(k, c0, m).

    For p <= 4 (method "grid" or "auto") the unit sphere is swept on a
    dense angular grid and the result is exact up to the grid resolution.
    Otherwise a multi-start projected-gradient search returns an upper
    estimate of the true minimum: every iterate is a feasible cone point,
    so the smallest observed ratio can only overestimate kappa.
    """
    X = design.entries if isinstance(design, DesignMatrix) else np.asarray(design, float)
    p = X.shape[1]
    if not 1 <= k <= p:
        raise DimensionMismatch(f"k={k} outside [1, {p}]")
    if c0 < 0:
        raise DimensionMismatch("c0 must be nonnegative")
    if method == "auto":
        method = "grid" if p <= 4 else "multistart"
    if method == "grid":
        if p > 4:
            raise TooLarge("dense sphere grid limited to p <= 4")
        val = _kappa_grid(X, k, c0, m, resolution)
        return KappaResult(value=val, exact=True, k=k, c0=c0, m=m)
    if method != "multistart":
        raise ValueError(f"unknown method {method!r}")
    val = _kappa_multistart(X, k, c0, m, starts, iters, seed, subset_cap)
    return KappaResult(value=val, exact=False, k=k, c0=c0, m=m)


# ----------------------------------------------------------------------
# high-probability error bounds


@dataclass(frozen=True)
class BoundCheck:
    name: str
    value: float
    bound: float
    holds: bool


@dataclass(frozen=True)
class ErrorBoundReport:
    s_star: int
    delta: float
    gamma: float
    checks: Tuple[BoundCheck, ...]

    @property
    def all_hold(self) -> bool:
        return all(c.holds for c in self.checks)


def error_bound_delta(sigma: float, p: int, a: float = 0.0) -> float:
    """The constraint level sigma * sqrt(2 (1+a) log p) of the guarantee."""
    if p < 2:
        raise DimensionMismatch("p must be at least 2")
    return float(sigma * np.sqrt(2.0 * (1.0 + a) * np.log(p)))


def error_bound_probability(p: int, a: float = 0.0) -> float:
    """Probability with which the error bounds hold: 1 - (p^a sqrt(pi log p))^-1."""
    if p < 2:
        raise DimensionMismatch("p must be at least 2")
    return float(1.0 - 1.0 / (p**a * np.sqrt(np.pi * np.log(p))))


def error_bound_check(
    design,
    beta_hat,
    beta_star,
    sigma: float,
    a: float = 0.0,
    gamma2s: Optional[float] = None,
    delta: Optional[float] = None,
    sharpened: bool = False,
    guard: int = 200_000,
    zero_tol: float = 1e-7,
) -> ErrorBoundReport:
    """Evaluate the four high-probability error bounds at a solution.

    Checks, with s* the true support size, gamma the restricted singular
    value at sparsity 2 s*, and delta = sigma sqrt(2 (1+a) log p) unless
    supplied:

    * support size:    ||beta_hat||_0 <= s*
    * l1 error:        ||beta_hat - beta*||_1   <= 4 gamma^-2 s* delta
    * l2 error:        ||beta_hat - beta*||_2^2 <= 8 gamma^-4 s* delta^2
    * prediction:      ||X(beta_hat - beta*)||^2 / n <= 8 gamma^-2 s* delta^2

    ``sharpened=True`` restricts the gamma enumeration to supersets of
    the true support.  GammaUnavailable is raised when gamma is neither
    supplied nor enumerable within ``guard`` subsets.
    """
    X = design.entries if isinstance(design, DesignMatrix) else np.asarray(design, float)
    n, p = X.shape
    bh = np.asarray(beta_hat, dtype=float).reshape(-1)
    bs = np.asarray(beta_star, dtype=float).reshape(-1)
    if bh.shape[0] != p or bs.shape[0] != p:
        raise DimensionMismatch("coefficient lengths disagree with design")
    supp_star = np.flatnonzero(np.abs(bs) > zero_tol)
    s_star = int(len(supp_star))
    if s_star == 0:
        raise DimensionMismatch("beta_star has empty support")
    if delta is None:
        delta = error_bound_delta(sigma, p, a)
    two_s = min(2 * s_star, p)
    if gamma2s is None:
        superset = supp_star if sharpened else None
        try:
            gamma2s = gamma_constant(
                DesignMatrix(X), two_s, support_superset=superset, guard=guard
            )
        except TooLarge as exc:
            raise GammaUnavailable(
                f"gamma({two_s}) not supplied and enumeration exceeds guard"
            ) from exc
    if gamma2s <= 0:
        raise GammaUnavailable(f"gamma({two_s}) = {gamma2s} is not positive")
    g2 = gamma2s * gamma2s
    diff = bh - bs
    checks = (
        BoundCheck(
            "support_size",
            float(np.count_nonzero(np.abs(bh) > zero_tol)),
            float(s_star),
            bool(np.count_nonzero(np.abs(bh) > zero_tol) <= s_star),
        ),
        BoundCheck(
            "l1_error",
            float(np.sum(np.abs(diff))),
            float(4.0 / g2 * s_star * delta),
            bool(np.sum(np.abs(diff)) <= 4.0 / g2 * s_star * delta + 1e-12),
        ),
        BoundCheck(
            "l2_error_sq",
            float(np.sum(diff**2)),
            float(8.0 / (g2 * g2) * s_star * delta**2),
            bool(np.sum(diff**2) <= 8.0 / (g2 * g2) * s_star * delta**2 + 1e-12),
        ),
        BoundCheck(
            "prediction_sq",
            float(np.sum((X @ diff) ** 2) / n),
            float(8.0 / g2 * s_star * delta**2),
            bool(np.sum((X @ diff) ** 2) / n <= 8.0 / g2 * s_star * delta**2 + 1e-12),
        ),
    )
    return ErrorBoundReport(
        s_star=s_star, delta=float(delta), gamma=float(gamma2s), checks=checks
    )
