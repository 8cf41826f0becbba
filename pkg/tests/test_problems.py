import itertools

import numpy as np
import pytest

from mixedoracle.core import Mode
from mixedoracle.problems import (InvalidSpec, ProblemSpec, box_qp, generate_problem,
                                  max_convex_quadratic)


def grid(n, k=5, box=1.0):
    pts = np.linspace(-box, box, k)
    return [np.array(p) for p in itertools.product(pts, repeat=n)]


@pytest.mark.parametrize("family", ["QuadMinMin", "QuadSaddle"])
def test_declared_constants_are_exact(family):
    spec = ProblemSpec(family, 3, 4, mu_x=1.0, mu_y=2.0, L_xx=5.0, L_yy=7.0, L_xy=0.5, seed=3)
    problem, truth = generate_problem(spec)
    m = truth.matrices
    ea, ec = np.linalg.eigvalsh(m["A"]), np.linalg.eigvalsh(m["C"])
    assert abs(ea[0] - 1.0) < 1e-10 and abs(ea[-1] - 5.0) < 1e-10
    assert abs(ec[0] - 2.0) < 1e-10 and abs(ec[-1] - 7.0) < 1e-10
    assert abs(np.linalg.svd(m["B"], compute_uv=False)[0] - 0.5) < 1e-10
    assert problem.mode is (Mode.MIN_MIN if family == "QuadMinMin" else Mode.MIN_MAX)


def test_uncoupled_saddle_point():
    problem, truth = generate_problem(ProblemSpec("QuadSaddle", 2, 3, L_xy=0.0, seed=5))
    m = truth.matrices
    np.testing.assert_allclose(truth.x_star, -np.linalg.solve(m["A"], m["a"]), atol=1e-12)
    np.testing.assert_allclose(truth.y_star, np.linalg.solve(m["C"], m["b"]), atol=1e-12)


@pytest.mark.parametrize("family", ["QuadMinMin", "QuadSaddle", "LogSumExpSaddle"])
def test_optimum_beats_a_grid(family):
    problem, truth = generate_problem(ProblemSpec(family, 2, 2, L_xy=0.5, seed=1))
    assert problem.feasible_set.contains(truth.x_star, tol=1e-12)
    assert truth.g(truth.x_star) == pytest.approx(truth.value)
    vals = [truth.g(x) for x in grid(2, 9)]
    assert min(vals) >= truth.value - 1e-9
    # B_bound covers the range of g over the box
    assert max(vals) - truth.value <= problem.feasible_set.B_bound + 1e-9


@pytest.mark.parametrize("family", ["QuadMinMin", "QuadSaddle", "LogSumExpSaddle"])
def test_residual_bound_D(family):
    problem, truth = generate_problem(ProblemSpec(family, 2, 3, L_xy=0.5, seed=2))
    y0 = np.zeros(3)
    for x in grid(2, 7):
        r = abs(truth.g(x) - problem.f(x, y0))
        assert r <= problem.constants.D + 1e-9


@pytest.mark.parametrize("family", ["QuadSaddle", "LogSumExpSaddle"])
def test_weak_duality(family):
    problem, truth = generate_problem(ProblemSpec(family, 2, 2, L_xy=1.0, seed=7))
    rng = np.random.default_rng(0)
    assert truth.dual_gap(truth.y_star) == pytest.approx(0.0, abs=1e-8)
    for _ in range(20):
        y = rng.standard_normal(2)
        assert truth.h(y) <= truth.value + 1e-10


def test_partial_evaluation_matches_f():
    for family in ("QuadMinMin", "QuadSaddle"):
        problem, _ = generate_problem(ProblemSpec(family, 3, 2, L_xy=0.5, seed=8))
        rng = np.random.default_rng(1)
        x = rng.uniform(-1, 1, 3)
        fy = problem.f_partial(x)
        for _ in range(5):
            y = rng.standard_normal(2)
            assert fy(y) == pytest.approx(problem.f(x, y), rel=1e-12, abs=1e-12)


def test_gradient_by_finite_differences():
    problem, _ = generate_problem(ProblemSpec("LogSumExpSaddle", 3, 4, seed=0))
    rng = np.random.default_rng(2)
    x, y = rng.uniform(-1, 1, 3), rng.standard_normal(4)
    h = 1e-6
    fd = [(problem.f(x + h * e, y) - problem.f(x - h * e, y)) / (2 * h) for e in np.eye(3)]
    np.testing.assert_allclose(problem.grad_x(x, y), fd, atol=1e-7)


def test_generation_is_seeded():
    a = generate_problem(ProblemSpec("QuadSaddle", 2, 2, seed=11))[1].matrices
    b = generate_problem(ProblemSpec("QuadSaddle", 2, 2, seed=11))[1].matrices
    for k in a:
        np.testing.assert_array_equal(a[k], b[k])


def test_spec_validation():
    with pytest.raises(InvalidSpec):
        ProblemSpec("Nope", 1, 1)
    with pytest.raises(InvalidSpec):
        ProblemSpec("QuadSaddle", 0, 1)
    with pytest.raises(InvalidSpec):
        ProblemSpec("QuadSaddle", 1, 1, mu_x=5.0, L_xx=4.0)
    with pytest.raises(InvalidSpec):
        generate_problem(ProblemSpec("QuadMinMin", 2, 2, L_xy=3.0))


def test_box_qp_matches_enumeration():
    A = np.array([[2.0, 0.5], [0.5, 1.0]])
    c = np.array([-5.0, 1.0])
    x = box_qp(A, c, -np.ones(2), np.ones(2))
    best = min(0.5 * p @ A @ p + c @ p for p in grid(2, 201))
    assert 0.5 * x @ A @ x + c @ x <= best + 1e-12


def test_max_convex_quadratic():
    P = np.diag([1.0, 2.0])
    q = np.array([0.5, 0.0])
    assert max_convex_quadratic(P, q, -np.ones(2), np.ones(2), 1.0) == pytest.approx(3.0)
