import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from reshapeqp.errors import RankDeficiencyError
from reshapeqp.qp import (
    ORACLE_TOL,
    QpProblem,
    QpStatus,
    brute_force_oracle,
    closed_form_active,
    delta_sherman_morrison,
    kkt_residuals,
    solve,
)


def random_problem(rng, n_rows=None, dim=None, box=None):
    dim = dim or int(rng.integers(2, 5))
    m = int(rng.integers(1, 13)) if n_rows is None else n_rows
    G = rng.normal(size=(m, dim))
    h = rng.normal(size=m)
    target = 2.0 * rng.normal(size=dim)
    if box is None:
        box = rng.random() < 0.5
    if box:
        return QpProblem(target, G, h, 0.0, float(rng.uniform(0.5, 3.0)))
    return QpProblem(target, G, h)


def test_unconstrained_interior():
    prob = QpProblem([1.0, -1.0], [[1.0, 0.0]], [5.0])
    sol = solve(prob)
    assert sol.optimal
    np.testing.assert_allclose(sol.u, [1.0, -1.0])
    assert sol.active_set == ()


def test_single_halfspace_projection():
    # project (2, 0) onto x <= 1
    sol = solve(QpProblem([2.0, 0.0], [[1.0, 0.0]], [1.0]))
    np.testing.assert_allclose(sol.u, [1.0, 0.0], atol=1e-12)
    np.testing.assert_allclose(sol.multipliers, [1.0], atol=1e-12)


def test_contradictory_halfspaces_infeasible():
    sol = solve(QpProblem([0.0, 0.0], [[1.0, 1.0], [-1.0, -1.0]], [-1.0, -1.0]))
    assert sol.status is QpStatus.INFEASIBLE
    assert sol.u is None


def test_box_is_folded_after_rows():
    prob = QpProblem([0.0, 5.0], np.zeros((1, 2)), [0.0], 0.0, 2.0)
    sol = solve(prob)
    np.testing.assert_allclose(sol.u, [0.0, 2.0])
    assert sol.active_set == (2,)


def test_mismatched_shapes_rejected():
    with pytest.raises(ValueError):
        QpProblem([0.0, 0.0], [[1.0, 0.0]], [1.0, 2.0])


def test_nonfinite_rejected():
    with pytest.raises(ValueError):
        QpProblem([np.nan, 0.0], [[1.0, 0.0]])


def test_degenerate_vertex_with_huge_multipliers():
    # feasible set is the single point 0; target needs multipliers ~1e6
    G = np.array(
        [
            [0.309016994, 0.951056516, -3.30195706e-03],
            [-0.809016994, 0.587785252, 9.91797557e-04],
            [-0.809016994, -0.587785252, 1.91259749e-03],
            [0.309016994, -0.951056516, -5.14689323e-03],
            [1.0, 0.0, -1.72403829e-03],
        ]
    )
    prob = QpProblem([1.0, -1.0, 100.0], G, np.zeros(5), 0.0, 100.0)
    sol = solve(prob)
    assert sol.optimal
    np.testing.assert_allclose(sol.u, 0.0, atol=1e-9)


def test_oracle_equivalence_random_suite():
    rng = np.random.default_rng(20240501)
    n_infeasible = 0
    for _ in range(600):
        prob = random_problem(rng)
        sol = solve(prob)
        ref = brute_force_oracle(prob)
        assert sol.status == ref.status
        if ref.optimal:
            np.testing.assert_allclose(sol.u, ref.u, atol=ORACLE_TOL)
            f_ref = prob.objective(ref.u)
            # vertices of random polyhedra can be far out; compare in relative terms
            assert abs(prob.objective(sol.u) - f_ref) <= ORACLE_TOL * max(1.0, abs(f_ref))
        else:
            n_infeasible += 1
    assert 0 < n_infeasible < 600


def test_kkt_residuals_small_on_optimal():
    rng = np.random.default_rng(7)
    for _ in range(300):
        prob = random_problem(rng)
        sol = solve(prob)
        if not sol.optimal:
            continue
        res = kkt_residuals(prob, sol)
        assert max(res.values()) <= 1e-9, res


def test_repeat_solve_identical():
    rng = np.random.default_rng(3)
    prob = random_problem(rng, n_rows=8, dim=3)
    a, b = solve(prob), solve(prob)
    assert a.status == b.status
    if a.optimal:
        assert np.array_equal(a.u, b.u)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_projection_nonexpansive(seed):
    rng = np.random.default_rng(seed)
    dim = int(rng.integers(2, 4))
    G = rng.normal(size=(int(rng.integers(1, 8)), dim))
    h = np.abs(rng.normal(size=G.shape[0]))  # origin is feasible
    t1, t2 = rng.normal(size=dim) * 3, rng.normal(size=dim) * 3
    u1 = solve(QpProblem(t1, G, h)).u
    u2 = solve(QpProblem(t2, G, h)).u
    assert np.linalg.norm(u1 - u2) <= np.linalg.norm(t1 - t2) + 1e-9


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_solution_is_feasible_and_optimal_against_oracle(seed):
    rng = np.random.default_rng(seed)
    prob = random_problem(rng, n_rows=int(rng.integers(1, 9)))
    sol = solve(prob)
    ref = brute_force_oracle(prob)
    assert sol.status == ref.status
    if sol.optimal:
        Gf, hf = prob.folded()
        assert np.max(Gf @ sol.u - hf) <= 1e-9 * max(1.0, np.abs(sol.multipliers).max(initial=0.0))
        f_ref = prob.objective(ref.u)
        assert prob.objective(sol.u) <= f_ref + ORACLE_TOL * max(1.0, abs(f_ref))


def test_closed_form_matches_solver_on_active_set():
    v_c = np.array([1.0, -1.0])
    A = np.array([[-np.sqrt(0.5), -np.sqrt(0.5)]])
    a = np.array([0.2])
    v, d = closed_form_active(v_c, 100.0, A, a)
    M = np.column_stack([A, a])
    np.testing.assert_allclose(M @ np.append(v, d), 0.0, atol=1e-12)
    assert d == pytest.approx(delta_sherman_morrison(v_c, 100.0, A, a), rel=1e-12)


def test_closed_form_empty_active_set():
    v, d = closed_form_active([1.0, 2.0], 5.0, np.zeros((0, 2)), np.zeros(0))
    np.testing.assert_allclose(v, [1.0, 2.0])
    assert d == 5.0


def test_closed_form_rank_deficient():
    A = np.array([[1.0, 0.0], [1.0, 0.0]])
    with pytest.raises(RankDeficiencyError):
        closed_form_active([1.0, 1.0], 1.0, A, np.array([0.0, 0.0]))


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_sherman_morrison_agrees_with_projection(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 4))
    k = int(rng.integers(1, n + 1))
    A = rng.normal(size=(k, n))
    a = rng.normal(size=k)
    v_c = rng.normal(size=n)
    _, d = closed_form_active(v_c, 3.0, A, a)
    assert d == pytest.approx(delta_sherman_morrison(v_c, 3.0, A, a), rel=1e-8, abs=1e-10)
