"""Primitives: residuals, thresholds, standardization, polish."""

import numpy as np
import pytest

import oracles
from ddsel.core import (
    DesignMatrix,
    ProblemData,
    Solution,
    hard_threshold,
    polish,
    reference_delta,
    residual_inf,
    soft_threshold,
    standardize,
    support_of,
)
from ddsel.exceptions import ConstantColumn, DimensionMismatch, RankDeficient


def random_problem(rng, n=12, p=6, delta=0.3):
    X = rng.standard_normal((n, p))
    y = rng.standard_normal(n)
    return ProblemData.from_arrays(X, y, delta)


def test_residual_inf_matches_explicit_products():
    rng = np.random.default_rng(7)
    for _ in range(20):
        n, p = rng.integers(3, 15), rng.integers(2, 10)
        X = rng.standard_normal((n, p))
        y = rng.standard_normal(n)
        beta = rng.standard_normal(p)
        prob = ProblemData.from_arrays(X, y, 0.5)
        expect = np.max(np.abs(X.T @ (y - X @ beta)))
        assert residual_inf(prob, beta) == pytest.approx(expect, rel=1e-12, abs=1e-12)


def test_residual_inf_rejects_bad_shape():
    prob = random_problem(np.random.default_rng(0))
    with pytest.raises(DimensionMismatch):
        residual_inf(prob, np.zeros(prob.p + 1))


def test_hard_threshold_against_support_enumeration():
    # minimize ||b||_0 + (lam/2)||b - v||^2: for a fixed support S the best
    # choice is b_S = v_S at cost |S| + (lam/2) sum_{j not in S} v_j^2
    rng = np.random.default_rng(11)
    for _ in range(30):
        p = int(rng.integers(1, 9))
        v = rng.standard_normal(p) * rng.uniform(0.2, 3.0)
        lam = float(rng.uniform(0.05, 8.0))
        best = np.inf
        for mask in range(1 << p):
            keep = np.array([(mask >> j) & 1 for j in range(p)], dtype=bool)
            cost = keep.sum() + 0.5 * lam * np.sum(v[~keep] ** 2)
            best = min(best, cost)
        b = hard_threshold(v, lam)
        cost_b = np.count_nonzero(b) + 0.5 * lam * np.sum((b - v) ** 2)
        assert cost_b == pytest.approx(best, rel=1e-12, abs=1e-12)


def test_hard_threshold_cut_location():
    lam = 2.0  # cut at sqrt(2/lam) = 1
    v = np.array([-1.5, -1.0, -0.5, 0.0, 0.5, 1.0, 1.5])
    out = hard_threshold(v, lam)
    assert np.array_equal(out, np.array([-1.5, 0.0, 0.0, 0.0, 0.0, 0.0, 1.5]))


def test_soft_threshold_against_golden_section():
    rng = np.random.default_rng(23)
    for _ in range(25):
        v = float(rng.uniform(-4, 4))
        t = float(rng.uniform(0, 3))
        x, _ = oracles.golden_min(
            lambda b: t * abs(b) + 0.5 * (b - v) ** 2, -10.0, 10.0
        )
        assert soft_threshold(v, t) == pytest.approx(x, abs=1e-5)


def test_soft_threshold_vector_thresholds():
    v = np.array([3.0, -2.0, 0.5])
    t = np.array([1.0, 3.0, 0.0])
    assert np.allclose(soft_threshold(v, t), [2.0, 0.0, 0.5])
    with pytest.raises(ValueError):
        soft_threshold(v, -1.0)


def test_standardize_moments_and_idempotence():
    rng = np.random.default_rng(3)
    X = rng.standard_normal((40, 7)) * 3.0 + 5.0
    y = rng.standard_normal(40) + 2.0
    d, yc = standardize(X, y)
    assert np.allclose(d.entries.mean(axis=0), 0.0, atol=1e-12)
    assert np.allclose(np.linalg.norm(d.entries, axis=0), 1.0, atol=1e-12)
    assert yc.mean() == pytest.approx(0.0, abs=1e-12)
    d2 = standardize(d.entries)
    assert np.max(np.abs(d2.entries - d.entries)) < 1e-12


def test_standardize_constant_column():
    X = np.ones((10, 3))
    X[:, 0] = np.arange(10)
    X[:, 2] = np.arange(10) ** 2
    with pytest.raises(ConstantColumn) as exc:
        standardize(X)
    assert exc.value.column == 1


def test_polish_orthonormal_recovers_correlations():
    rng = np.random.default_rng(5)
    Q, _ = np.linalg.qr(rng.standard_normal((12, 12)))
    y = rng.standard_normal(12)
    prob = ProblemData.from_arrays(Q, y, 0.1)
    c = Q.T @ y
    sol = polish(prob, [0, 3])
    assert sol.beta[0] == pytest.approx(c[0], abs=1e-10)
    assert sol.beta[3] == pytest.approx(c[3], abs=1e-10)
    assert np.all(sol.beta[[1, 2] + list(range(4, 12))] == 0.0)


def test_polish_matches_lstsq():
    rng = np.random.default_rng(9)
    for _ in range(10):
        prob = random_problem(rng, n=20, p=8)
        supp = sorted(rng.choice(8, size=3, replace=False).tolist())
        sol = polish(prob, supp)
        ref, *_ = np.linalg.lstsq(prob.design.entries[:, supp], prob.response, rcond=None)
        assert np.allclose(sol.beta[supp], ref, atol=1e-9)


def test_polish_rank_deficient():
    X = np.ones((6, 2))
    X[:, 0] = np.arange(6)
    X[:, 1] = 2.0 * np.arange(6)
    prob = ProblemData.from_arrays(X, np.arange(6.0), 0.1)
    with pytest.raises(RankDeficient):
        polish(prob, [0, 1])


def test_reference_delta_zero_at_truth():
    rng = np.random.default_rng(13)
    X = rng.standard_normal((15, 6))
    beta = rng.standard_normal(6)
    y = X @ beta
    assert reference_delta(DesignMatrix(X), y, beta) == pytest.approx(0.0, abs=1e-10)


def test_reference_delta_equals_noise_correlation():
    rng = np.random.default_rng(17)
    X = rng.standard_normal((30, 5))
    beta = rng.standard_normal(5)
    eps = rng.standard_normal(30)
    got = reference_delta(DesignMatrix(X), X @ beta + eps, beta)
    assert got == pytest.approx(np.max(np.abs(X.T @ eps)), rel=1e-12)


def test_solution_support_uses_zero_tol():
    prob = random_problem(np.random.default_rng(1), n=10, p=4)
    beta = np.array([0.5, 1e-8, -1e-6, 0.0])
    sol = Solution.from_beta(prob, beta)
    assert sol.support == (0, 2)
    assert sol.objective == 2
    assert support_of(beta) == (0, 2)


def test_problem_data_validation_and_with_delta():
    rng = np.random.default_rng(2)
    X = rng.standard_normal((8, 3))
    y = rng.standard_normal(8)
    with pytest.raises(DimensionMismatch):
        ProblemData.from_arrays(X, y, -0.1)
    with pytest.raises(DimensionMismatch):
        ProblemData.from_arrays(X, y[:-1], 0.1)
    prob = ProblemData.from_arrays(X, y, 0.1)
    prob2 = prob.with_delta(0.7)
    assert prob2.delta == 0.7
    assert prob2.gram is prob.gram
    assert np.allclose(prob.gram, X.T @ X)
    assert np.allclose(prob.correlations, X.T @ y)
