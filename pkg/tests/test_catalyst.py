import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mixedoracle.catalyst import (CatalystConfig, SubsolverFailure, alpha_residual,
                                  catalyst_alpha_next, catalyst_beta, catalyst_iterations,
                                  catalyst_run)
from mixedoracle.core import InvalidParameter, NumericalFailure
from mixedoracle.problems import sym_with_spectrum


@settings(max_examples=200, deadline=None)
@given(st.floats(1e-6, 1.0), st.floats(1e-9, 1 - 1e-9))
def test_alpha_root_is_accurate(alpha_prev, q):
    a = catalyst_alpha_next(alpha_prev, q)
    assert 0 < a < 1 or (a == pytest.approx(1.0))
    assert alpha_residual(a, alpha_prev, q) <= 1e-14


def test_sqrt_q_is_a_fixed_point():
    q = 0.2
    assert catalyst_alpha_next(math.sqrt(q), q) == pytest.approx(math.sqrt(q), rel=1e-14)
    beta = catalyst_beta(math.sqrt(q), math.sqrt(q))
    assert beta == pytest.approx((1 - math.sqrt(q)) / (1 + math.sqrt(q)))


def test_alpha_input_checks():
    with pytest.raises(InvalidParameter):
        catalyst_alpha_next(0.0, 0.5)
    with pytest.raises(InvalidParameter):
        catalyst_alpha_next(0.5, 1.0)


def test_config():
    cfg = CatalystConfig(H1=3.0, mu_y=1.0, max_outer=5)
    assert cfg.q == 0.25 and cfg.initial_alpha == 0.5
    with pytest.raises(InvalidParameter):
        CatalystConfig(H1=0.0, mu_y=1.0, max_outer=5)
    with pytest.raises(InvalidParameter):
        CatalystConfig(H1=1.0, mu_y=1.0, max_outer=5, alpha0=1.5)


def test_iteration_count():
    assert catalyst_iterations(4.0, 1.0, 10.0, 1e-2) == math.ceil(2 * math.log(1000))
    assert catalyst_iterations(4.0, 1.0, 1e-3, 1e-2) == 1


def concave_quadratic(seed, n=4):
    rng = np.random.default_rng(seed)
    C = sym_with_spectrum(n, 1.0, 8.0, rng)
    y_star = rng.standard_normal(n)

    def h(y):
        return -0.5 * float((y - y_star) @ C @ (y - y_star))
    return C, y_star, h


@pytest.mark.parametrize("seed", range(4))
@pytest.mark.parametrize("H1", [1.0, 4.0, 30.0])
def test_exact_subproblems_converge_linearly(seed, H1):
    C, y_star, h = concave_quadratic(seed)
    n = len(y_star)

    def prox(z, eps, k):
        # argmax of h(y) - H1/2 ||y - z||^2
        return np.linalg.solve(C + H1 * np.eye(n), C @ y_star + H1 * z)
    cfg = CatalystConfig(H1=H1, mu_y=1.0, max_outer=40)
    y, rep = catalyst_run(prox, np.zeros(n), cfg, record=True)
    gap0 = -h(np.zeros(n))
    rate = 1 - math.sqrt(cfg.q) / 2
    for k, yk in enumerate(rep.trajectory):
        assert -h(yk) <= 2 * gap0 * rate ** k + 1e-15
    assert rep.outer_iterations == 40 and len(rep.steps) == 40
    assert max(s.residual for s in rep.steps) <= 1e-14


def test_subsolver_info_and_eps_are_passed_through():
    seen = []

    def sub(z, eps, k):
        seen.append((eps, k))
        return z * 0.5, {"k": k}
    cfg = CatalystConfig(H1=1.0, mu_y=1.0, max_outer=3, eps_subproblem=0.01)
    _, rep = catalyst_run(sub, np.ones(2), cfg)
    assert seen == [(0.01, 1), (0.01, 2), (0.01, 3)]
    assert [s.info for s in rep.steps] == [{"k": 1}, {"k": 2}, {"k": 3}]


def test_subsolver_failure_names_the_step():
    def sub(z, eps, k):
        if k == 2:
            raise NumericalFailure("boom")
        return z

    with pytest.raises(SubsolverFailure) as info:
        catalyst_run(sub, np.zeros(1), CatalystConfig(H1=1.0, mu_y=1.0, max_outer=5))
    assert info.value.outer_index == 2
