import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mixedoracle.core import InvalidParameter, NumericalFailure, OracleLedger, counted
from mixedoracle.problems import sym_with_spectrum
from mixedoracle.zeroth_order import (ArddConfig, ArddscConfig, ArddscDriver, ardd_run,
                                      arddsc_iterations_for, arddsc_run, restarts_for)


def quadratic(n, kappa, rng):
    Q = sym_with_spectrum(n, 1.0, kappa, rng)
    y_star = rng.standard_normal(n)

    def f(y):
        d = y - y_star
        return 0.5 * float(d @ Q @ d)
    return f, y_star


def test_config_validation():
    with pytest.raises(InvalidParameter):
        ArddConfig(L=0, N=1, n=1)
    with pytest.raises(InvalidParameter):
        ArddConfig(L=1, N=0, n=1)
    with pytest.raises(InvalidParameter):
        ArddConfig(L=1, N=1, n=1, tau=-1.0)
    with pytest.raises(InvalidParameter):
        ArddscConfig(mu=2, L=1, R0_sq=1, restarts=1, n=1)
    with pytest.raises(InvalidParameter):
        ArddscConfig(mu=1, L=1, R0_sq=1, restarts=-1, n=1)


def test_restart_length_formula():
    # N0 = ceil(sqrt(8 * 384 n^2 * L / mu)) in the Euclidean setup
    cfg = ArddscConfig(mu=1.0, L=10.0, R0_sq=1.0, restarts=1, n=4)
    assert cfg.rho_n == 1.0
    assert cfg.N0 == math.ceil(math.sqrt(8 * 384 * 16 * 10))
    assert ArddscConfig(mu=1, L=1, R0_sq=1, restarts=1, n=1).N0 == math.ceil(math.sqrt(8 * 384))


def test_restart_count():
    assert restarts_for(1.0, 8.0, 1e-3) == math.ceil(math.log2(4000))
    assert restarts_for(1.0, 1.0, 10.0) == 1
    with pytest.raises(InvalidParameter):
        restarts_for(1.0, 1.0, 0.0)
    cfg = ArddscConfig(mu=1.0, L=2.0, R0_sq=8.0, restarts=1, n=3)
    k, calls = arddsc_iterations_for(1e-3, cfg)
    assert k == 12 and calls == 2 * 12 * cfg.N0


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 6), st.integers(1, 40), st.integers(0, 10 ** 6))
def test_ardd_uses_two_calls_per_step(n, N, seed):
    led = OracleLedger()
    fn = counted(lambda y: float(y @ y), led)
    run = ardd_run(fn, np.ones(n), ArddConfig(L=2.0, N=N, n=n), np.random.default_rng(seed))
    assert run.calls == 2 * N == led.zeroth_calls
    assert run.y_final.shape == (n,)


def test_ardd_is_deterministic_given_the_stream():
    f, _ = quadratic(5, 4.0, np.random.default_rng(0))
    cfg = ArddConfig(L=4.0, N=200, n=5)
    a = ardd_run(f, np.zeros(5), cfg, np.random.default_rng(9)).y_final
    b = ardd_run(f, np.zeros(5), cfg, np.random.default_rng(9)).y_final
    np.testing.assert_array_equal(a, b)


def test_ardd_decreases_the_objective_on_average():
    errs = []
    for seed in range(10):
        rng = np.random.default_rng(seed)
        f, y_star = quadratic(8, 10.0, rng)
        run = ardd_run(f, np.zeros(8), ArddConfig(L=10.0, N=400, n=8), rng, record=True)
        errs.append(f(run.y_final) / f(np.zeros(8)))
        assert len(run.trajectory) == 401
    assert np.median(errs) < 0.1


def test_ardd_non_finite_objective():
    with pytest.raises(NumericalFailure):
        ardd_run(lambda y: math.inf if y[0] > 0 else 0.0, np.zeros(2),
                 ArddConfig(L=1.0, N=50, n=2, tau=1.0), np.random.default_rng(0))


@pytest.mark.parametrize("n", [4, 16])
@pytest.mark.parametrize("kappa", [1.0, 10.0])
def test_restarts_halve_the_error(n, kappa):
    ratios = []
    for seed in range(5):
        rng = np.random.default_rng(seed)
        f, y_star = quadratic(n, kappa, rng)
        R0_sq = float(y_star @ y_star)
        cfg = ArddscConfig(mu=1.0, L=kappa, R0_sq=R0_sq, restarts=3, n=n)
        hist = []
        u = arddsc_run(f, np.zeros(n), cfg, rng, history=hist)
        assert len(hist) == 4
        ratios.append(f(u) / (0.5 * R0_sq))
    assert np.median(ratios) <= 4 * 2.0 ** -3


def test_zero_restarts_returns_start():
    cfg = ArddscConfig(mu=1, L=1, R0_sq=1, restarts=0, n=2)
    np.testing.assert_array_equal(arddsc_run(lambda y: 0.0, np.ones(2), cfg,
                                             np.random.default_rng(0)), np.ones(2))


def test_driver_accounting_and_accuracy():
    rng = np.random.default_rng(2)
    f, y_star = quadratic(3, 4.0, rng)
    led = OracleLedger()
    drv = ArddscDriver(np.random.default_rng(5))
    R0_sq = float(y_star @ y_star)
    res = drv.solve(counted(f, led), 3, 4.0, 1.0, np.zeros(3), R0_sq, 1e-4, sigma=0.1)
    assert res.target == pytest.approx(1e-5)
    assert res.restarts == restarts_for(1.0, R0_sq, 1e-5)
    assert res.calls == led.zeroth_calls == drv.calls
    assert drv.solves == 1
    assert f(res.y) <= 1e-4
    with pytest.raises(InvalidParameter):
        drv.solve(f, 3, 4.0, 1.0, np.zeros(3), 1.0, 1e-3, sigma=0.0)
