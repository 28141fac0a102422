import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cdfnav.qp import INFEASIBLE, OPTIMAL, QpProblem, kkt_residual, qp_solve
from tests.oracles import projected_gradient_qp


def random_feasible_qp(rng, p=None, r=None):
    p = p or int(rng.integers(1, 10))
    r = int(rng.integers(0, 7)) if r is None else r
    M = rng.normal(size=(p, p))
    H = M @ M.T + 0.1 * np.eye(p)
    q = rng.normal(size=p) * 3
    A = rng.normal(size=(r, p))
    u_feas = rng.normal(size=p)
    b = A @ u_feas - rng.uniform(0, 1, size=r)
    lower = u_feas - rng.uniform(0.1, 2, size=p)
    upper = u_feas + rng.uniform(0.1, 2, size=p)
    # leave some bounds open
    lower[rng.uniform(size=p) < 0.3] = -np.inf
    upper[rng.uniform(size=p) < 0.3] = np.inf
    return QpProblem(H, q, A, b, lower, upper)


def test_halfspace_projection():
    sol = qp_solve(QpProblem(2 * np.eye(2), [0, 0], [[1, 0]], [1]))
    assert sol.status == OPTIMAL
    assert np.allclose(sol.u_star, [1, 0], atol=1e-12)
    assert sol.objective == pytest.approx(1.0)


def test_unconstrained():
    sol = qp_solve(QpProblem(np.eye(2), [-2, 3]))
    assert np.allclose(sol.u_star, [2, -3])
    assert sol.active_set == ()


def test_constraint_and_bound():
    sol = qp_solve(QpProblem(2 * np.eye(1), [0], [[1]], [1.5], upper=[2]))
    assert sol.u_star == pytest.approx([1.5])


def test_infeasible_reports_violated_row():
    # u >= 2 and u <= 1
    sol = qp_solve(QpProblem(np.eye(1), [0], [[1]], [2], upper=[1]))
    assert sol.status == INFEASIBLE
    assert sol.violated_row is not None and sol.violation < 0


def test_degenerate_duplicate_rows():
    A = np.array([[1.0, 1.0], [1.0, 1.0], [2.0, 2.0]])
    sol = qp_solve(QpProblem(np.eye(2), [0, 0], A, [1, 1, 2]))
    assert sol.status == OPTIMAL
    assert np.allclose(sol.u_star, [0.5, 0.5])
    assert sol.kkt_residual <= 1e-10


def test_deterministic():
    rng = np.random.default_rng(5)
    prob = random_feasible_qp(rng, 6, 5)
    a, b = qp_solve(prob), qp_solve(prob)
    assert np.array_equal(a.u_star, b.u_star) and a.active_set == b.active_set


def test_rejects_non_symmetric_h():
    with pytest.raises(ValueError):
        QpProblem([[1, 1], [0, 1]], [0, 0])


def test_matches_projected_gradient_oracle():
    rng = np.random.default_rng(2024)
    for _ in range(40):
        prob = random_feasible_qp(rng)
        sol = qp_solve(prob)
        ref = projected_gradient_qp(prob.H, prob.q, prob.A_ineq, prob.b_ineq, prob.lower, prob.upper)
        assert sol.status == OPTIMAL
        assert abs(sol.objective - prob.objective(ref)) <= 1e-6
        assert sol.kkt_residual <= 1e-8


@settings(max_examples=150, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1))
def test_kkt_certificate(seed):
    prob = random_feasible_qp(np.random.default_rng(seed))
    sol = qp_solve(prob)
    assert sol.status == OPTIMAL
    C, d, _ = prob.stacked_rows()
    assert np.all(C @ sol.u_star >= d - 1e-8)
    stat = prob.H @ sol.u_star + prob.q - C.T @ sol.multipliers
    assert np.max(np.abs(stat), initial=0) <= 1e-8
    assert np.all(sol.multipliers >= -1e-10)
    assert kkt_residual(prob, sol.u_star, sol.multipliers) <= 1e-8


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), scale=st.floats(1e-3, 1e3))
def test_scaling_covariance(seed, scale):
    prob = random_feasible_qp(np.random.default_rng(seed))
    scaled = QpProblem(scale * prob.H, scale * prob.q, prob.A_ineq, prob.b_ineq, prob.lower, prob.upper)
    a, b = qp_solve(prob), qp_solve(scaled)
    assert np.allclose(a.u_star, b.u_star, atol=1e-9, rtol=0)


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1))
def test_monotone_restriction(seed):
    rng = np.random.default_rng(seed)
    prob = random_feasible_qp(rng, r=4)
    fewer = QpProblem(prob.H, prob.q, prob.A_ineq[:2], prob.b_ineq[:2], prob.lower, prob.upper)
    assert qp_solve(fewer).objective <= qp_solve(prob).objective + 1e-12
