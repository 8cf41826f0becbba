"""End-to-end solvers for ``min_x min_y f`` and ``min_x max_y f`` with mixed oracles.

* :func:`solve_minmin_small` and :func:`solve_minmax_small` run Vaidya's
  method over ``x`` with delta-subgradients built from an inner
  zeroth-order solve in ``y``.
* :func:`solve_minmax_large` runs Catalyst over ``y``; each regularized
  subproblem is a saddle problem solved by the fast gradient method over
  ``x`` with the zeroth-order solver innermost.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .catalyst import CatalystConfig, catalyst_iterations, catalyst_run
from .core import (InvalidDimension, InvalidParameter, MixedOracleError,
                   MixedOracleProblem, Mode, OracleLedger, SmoothnessConstants,
                   eval_f, eval_grad_x, inner_objective, make_rng)
from .cutting_plane import DeltaSubgradient, VaidyaParams, vaidya_solve
from .fgm import FgmConfig, InexactOracle, fgm_iterations_for, fgm_solve
from .zeroth_order import ArddscDriver

SMALL_DIM_LIMIT = 64


class StageFailure(MixedOracleError):
    def __init__(self, stage, cause):
        super().__init__(f"{stage}: {cause}")
        self.stage = stage
        self.cause = cause


@dataclass
class AccuracyBudget:
    eps: float
    sigma: float
    eps_x: float
    eps_y: float
    sigma_x: float
    sigma_y: float
    delta_tilde: Optional[float] = None
    eps_tilde: Optional[float] = None
    catalyst_iterations: Optional[int] = None
    fgm_iterations: Optional[int] = None
    H1: Optional[float] = None
    safety: float = 4.0


@dataclass
class StageRecord:
    name: str
    first_calls: int
    zeroth_calls: int
    detail: dict = field(default_factory=dict)


@dataclass
class ApproachReport:
    approach: str
    x_hat: np.ndarray
    y_hat: np.ndarray
    gap_estimate: float
    ledger: OracleLedger
    stages: list
    eps: float
    sigma: float
    budget: Optional[AccuracyBudget] = None
    extras: dict = field(default_factory=dict)

    def stage_totals(self) -> OracleLedger:
        return OracleLedger(sum(s.zeroth_calls for s in self.stages),
                            sum(s.first_calls for s in self.stages))


class _Stage:
    """Context manager charging ledger increments to a named stage."""

    def __init__(self, name, ledger, stages, detail=None):
        self.name, self.ledger, self.stages = name, ledger, stages
        self.detail = {} if detail is None else detail

    def __enter__(self):
        self.start = self.ledger.snapshot()
        return self

    def __exit__(self, exc_type, exc, tb):
        d = self.ledger.since(self.start)
        self.stages.append(StageRecord(self.name, d.first_calls, d.zeroth_calls, self.detail))
        if exc is not None and isinstance(exc, MixedOracleError) and not isinstance(exc, StageFailure):
            raise StageFailure(self.name, exc) from exc
        return False


# delta-subgradients -------------------------------------------------------

def delta_from_tilde(delta_tilde: float, c: SmoothnessConstants) -> float:
    """Subgradient inexactness ``6 sqrt(L_yy D delta_tilde / mu_y)`` of a min-min query."""
    if delta_tilde == math.inf:
        return 0.0
    return 6.0 * math.sqrt(c.L_yy * c.D * delta_tilde / c.mu_y)


def invert_delta(eps_outer: float, c: SmoothnessConstants) -> float:
    """Inner accuracy that makes the min-min inexactness equal ``eps_outer / 2``.

    Returns ``inf`` when ``D = 0``: then ``y = 0`` is exact and no inner solve
    is needed.
    """
    if not eps_outer > 0:
        raise InvalidParameter("eps_outer must be positive")
    if c.D == 0:
        return math.inf
    dt = c.mu_y * (eps_outer / 2) ** 2 / (36.0 * c.L_yy * c.D)
    return min(dt, c.D)


class InnerSolver:
    """Inner solves at fixed ``x`` with warm starts between nearby queries.

    The distance bound for a warm start adds the previous accuracy radius
    ``sqrt(2 acc / mu_y)`` to the drift ``(L_xy / mu_y) ||x - x_prev||`` of
    the inner solution map.
    """

    def __init__(self, problem: MixedOracleProblem, driver: ArddscDriver, ledger: OracleLedger,
                 sigma: float):
        self.problem, self.driver, self.ledger, self.sigma = problem, driver, ledger, sigma
        self.prev = None  # (x, y, acc)

    def start_for(self, x):
        c = self.problem.constants
        y0, R0_sq = np.zeros(self.problem.n_y), 2.0 * c.D / c.mu_y
        if self.prev is not None:
            xp, yp, acc = self.prev
            r = math.sqrt(2.0 * acc / c.mu_y) + c.L_xy / c.mu_y * float(np.linalg.norm(x - xp))
            if r * r < R0_sq:
                y0, R0_sq = yp.copy(), r * r
        return y0, R0_sq

    def solve(self, x, acc: float, sigma: Optional[float] = None) -> np.ndarray:
        c = self.problem.constants
        x = np.asarray(x, dtype=float)
        sigma = self.sigma if sigma is None else sigma
        if acc >= c.D:
            # y = 0 already has residual at most D
            y = np.zeros(self.problem.n_y)
            self.prev = (x.copy(), y, c.D)
            return y
        y0, R0_sq = self.start_for(x)
        fn = inner_objective(self.problem, x, self.ledger)
        res = self.driver.solve(fn, self.problem.n_y, c.L_yy, c.mu_y, y0, R0_sq, acc, sigma)
        self.prev = (x.copy(), res.y, acc)
        return res.y


def delta_subgrad_minmin(problem: MixedOracleProblem, x_prime, delta_tilde: float,
                         inner: InnerSolver, ledger: OracleLedger) -> DeltaSubgradient:
    if problem.mode is not Mode.MIN_MIN:
        raise InvalidParameter("min-min delta-subgradient needs a min-min problem")
    x_prime = np.asarray(x_prime, dtype=float)
    if delta_tilde == math.inf:
        y = np.zeros(problem.n_y)
        g = eval_grad_x(problem, x_prime, y, ledger)
        return DeltaSubgradient(-g, 0.0, True, None)
    y = inner.solve(x_prime, delta_tilde)
    v = eval_f(problem, x_prime, y, ledger)
    g = eval_grad_x(problem, x_prime, y, ledger)
    sg = DeltaSubgradient(-g, delta_from_tilde(delta_tilde, problem.constants), True, v)
    sg.y = y
    return sg


def delta_subgrad_minmax(problem: MixedOracleProblem, x_prime, delta: float,
                         inner: InnerSolver, ledger: OracleLedger) -> DeltaSubgradient:
    if problem.mode is not Mode.MIN_MAX:
        raise InvalidParameter("min-max delta-subgradient needs a min-max problem")
    x_prime = np.asarray(x_prime, dtype=float)
    if problem.constants.D == 0:
        y = np.zeros(problem.n_y)
        g = eval_grad_x(problem, x_prime, y, ledger)
        return DeltaSubgradient(-g, 0.0, True, None)
    y = inner.solve(x_prime, delta)
    v = eval_f(problem, x_prime, y, ledger)
    g = eval_grad_x(problem, x_prime, y, ledger)
    sg = DeltaSubgradient(-g, delta, True, v)
    sg.y = y
    return sg


# small dimension ----------------------------------------------------------

def _check_small(problem, allow_large):
    if problem.n_x > SMALL_DIM_LIMIT and not allow_large:
        raise InvalidDimension(
            f"n_x = {problem.n_x} exceeds {SMALL_DIM_LIMIT}; pass allow_large=True to override")


def _solve_small(problem, eps, params, rng, ledger, inner_sigma, allow_large, record_queries,
                 mode, name):
    if problem.mode is not mode:
        raise InvalidParameter(f"{name} needs a {mode.value} problem")
    if not eps > 0:
        raise InvalidParameter("eps must be positive")
    _check_small(problem, allow_large)
    params = params or VaidyaParams.practical()
    rng = make_rng(0) if rng is None else rng
    ledger = OracleLedger() if ledger is None else ledger
    driver = ArddscDriver(rng)
    inner = InnerSolver(problem, driver, ledger, inner_sigma)
    c = problem.constants
    if mode is Mode.MIN_MIN:
        dt = invert_delta(eps, c)
        delta = delta_from_tilde(dt, c)

        def query(x):
            return delta_subgrad_minmin(problem, x, dt, inner, ledger)
    else:
        dt = None
        delta = eps / 2

        def query(x):
            return delta_subgrad_minmax(problem, x, delta, inner, ledger)

    queries = [] if record_queries else None
    last_y = {}

    def oracle(x):
        sg = query(x)
        if getattr(sg, "y", None) is not None:
            last_y[x.tobytes()] = sg.y
        if queries is not None:
            queries.append((x.copy(), sg))
        return sg

    stages = []
    with _Stage("outer", ledger, stages) as st:
        x_hat, vrep = vaidya_solve(oracle, problem.feasible_set, params,
                                   eps_geometric=eps / 2, delta=delta)
        st.detail.update(N=vrep.N, iterations=vrep.iterations, queries=vrep.first_calls,
                         inner_solves=driver.solves)
    with _Stage("final-y", ledger, stages):
        y_prev = last_y.get(x_hat.tobytes())
        if y_prev is not None:
            inner.prev = (x_hat.copy(), y_prev, dt if mode is Mode.MIN_MIN else delta)
        y_hat = inner.solve(x_hat, eps) if c.D > 0 else np.zeros(problem.n_y)

    budget = AccuracyBudget(eps=eps, sigma=inner_sigma, eps_x=eps / 2,
                            eps_y=dt if mode is Mode.MIN_MIN else delta,
                            sigma_x=0.0, sigma_y=inner_sigma, delta_tilde=dt)
    return ApproachReport(name, x_hat, y_hat, vrep.predicted_gap, ledger.snapshot(), stages,
                          eps, inner_sigma, budget,
                          extras=dict(vaidya=vrep, delta=delta, queries=queries))


def solve_minmin_small(problem: MixedOracleProblem, eps: float, params: Optional[VaidyaParams] = None,
                       rng=None, ledger: Optional[OracleLedger] = None, inner_sigma: float = 0.1,
                       allow_large: bool = False, record_queries: bool = False) -> ApproachReport:
    """Vaidya over ``x`` with inner zeroth-order minimization over ``y``.

    The inner accuracy is set so each query is an ``eps/2``-subgradient and
    the iteration count drives the geometric term below ``eps/2``. Inner
    solves meet their accuracy with probability ``1 - inner_sigma`` each.
    """
    return _solve_small(problem, eps, params, rng, ledger, inner_sigma, allow_large,
                        record_queries, Mode.MIN_MIN, "minmin-small")


def solve_minmax_small(problem: MixedOracleProblem, eps: float, params: Optional[VaidyaParams] = None,
                       rng=None, ledger: Optional[OracleLedger] = None, inner_sigma: float = 0.1,
                       allow_large: bool = False, record_queries: bool = False) -> ApproachReport:
    """Vaidya over ``x`` with inner zeroth-order maximization over ``y``.

    Each query solves the inner problem to accuracy ``eps/2``, which is
    directly the subgradient inexactness.
    """
    return _solve_small(problem, eps, params, rng, ledger, inner_sigma, allow_large,
                        record_queries, Mode.MIN_MAX, "minmax-small")


# large dimension ----------------------------------------------------------

def lemma4_coefficients(c: SmoothnessConstants, H1: float = 0.0):
    """Weights ``(w_y, w_x)`` of the error propagation ``w_y eps_y + w_x eps_x``.

    ``mu_y`` and ``L_yy`` are replaced by ``mu_y + H1`` and ``L_yy + H1``.
    """
    if not c.mu_x > 0:
        raise InvalidParameter("error propagation needs mu_x > 0")
    mu, L = c.mu_y + H1, c.L_yy + H1
    w_y = L / mu + 2 * c.L_xy ** 2 / (c.mu_x * mu)
    w_x = c.L_xy ** 2 * L / (c.mu_x * mu ** 2) + 2 * c.L_xy ** 4 / (c.mu_x ** 2 * mu ** 2)
    return w_y, w_x


def lemma4_error_bound(c: SmoothnessConstants, eps_x: float, eps_y: float, H1: float = 0.0) -> float:
    w_y, w_x = lemma4_coefficients(c, H1)
    return w_y * eps_y + w_x * eps_x


@dataclass
class LargeParams:
    safety: float = 4.0
    eps_tilde_ratio: float = 0.25
    H1: Optional[float] = None  # None: L_yy
    C: Optional[float] = None  # initial residual of y0 = 0; None: D
    max_outer: Optional[int] = None
    fgm_max_doublings: int = 60


def minmax_large_budget(problem: MixedOracleProblem, eps: float, sigma: float,
                        params: Optional[LargeParams] = None) -> AccuracyBudget:
    params = params or LargeParams()
    c = problem.constants
    H1 = c.L_yy if params.H1 is None else params.H1
    s = params.safety
    eps_tilde = params.eps_tilde_ratio * eps
    w_y, w_x = lemma4_coefficients(c, H1)
    # each term of the propagation gets half of eps_tilde; the max(., 1)
    # guard keeps the budgets finite when the coupling vanishes
    eps_x = eps_tilde / (s * max(2 * w_x, 1.0))
    L_g = c.L_xx + 2 * c.L_xy ** 2 / (c.mu_y + H1)
    L_fgm = 2 * L_g
    # the fgm noise floor (1 + sqrt(L/mu)) * 2 eps_y stays below eps_x / 2
    eps_y = min(eps_tilde / (s * max(2 * w_y, 1.0)),
                eps_x / (4 * (1 + math.sqrt(L_fgm / c.mu_x))))
    R2_sq = 0.5 * problem.feasible_set.diameter ** 2
    N_fgm = fgm_iterations_for(eps_x / 2, L_fgm, c.mu_x, R2_sq)
    C = c.D if params.C is None else params.C
    K = catalyst_iterations(H1, c.mu_y, C, eps) if params.max_outer is None else params.max_outer
    # sigma >= K (sigma_x + sigma_y) with sigma_x = N_fgm sigma_y
    sigma_y = sigma / (s * K * (N_fgm + 1))
    sigma_x = N_fgm * sigma_y
    return AccuracyBudget(eps=eps, sigma=sigma, eps_x=eps_x, eps_y=eps_y, sigma_x=sigma_x,
                          sigma_y=sigma_y, eps_tilde=eps_tilde, catalyst_iterations=K,
                          fgm_iterations=N_fgm, H1=H1, safety=s)


def solve_minmax_large(problem: MixedOracleProblem, eps: float, sigma: float,
                       params: Optional[LargeParams] = None, rng=None,
                       ledger: Optional[OracleLedger] = None) -> ApproachReport:
    """Catalyst over ``y``, fast gradient method over ``x``, zeroth-order inner solver."""
    if problem.mode is not Mode.MIN_MAX:
        raise InvalidParameter("minmax-large needs a min-max problem")
    c = problem.constants
    if not (c.mu_x > 0 and c.mu_y > 0):
        raise InvalidParameter("minmax-large needs mu_x > 0 and mu_y > 0")
    if not (eps > 0 and 0 < sigma < 1):
        raise InvalidParameter("need eps > 0 and 0 < sigma < 1")
    params = params or LargeParams()
    rng = make_rng(0) if rng is None else rng
    ledger = OracleLedger() if ledger is None else ledger
    budget = minmax_large_budget(problem, eps, sigma, params)
    driver = ArddscDriver(rng)
    X = problem.feasible_set
    H1 = budget.H1
    stages = []
    state = dict(x=X.inner_center)

    def subsolver(z, eps_sub, k):
        with _Stage(f"catalyst-{k}", ledger, stages) as st:
            # the previous inner answer belongs to another z, so no warm start
            oracle = InexactOracle(problem, driver, budget.eps_y, budget.sigma_y, ledger,
                                   H1=H1, z=z)
            cfg = FgmConfig(L0=oracle.L, mu=oracle.mu, N=budget.fgm_iterations,
                            feasible_set=X, delta=oracle.delta,
                            max_doublings=params.fgm_max_doublings)
            x_hat, frep = fgm_solve(oracle, state["x"], cfg)
            y_hat = oracle.inner(x_hat)
            state["x"] = x_hat
            st.detail.update(fgm_iterations=frep.iterations, oracle_calls=frep.oracle_calls,
                             L_max=frep.L_max, z=np.array(z), x_hat=x_hat.copy(),
                             y_hat=y_hat.copy())
        return y_hat, stages[-1].detail

    cat_cfg = CatalystConfig(H1=H1, mu_y=c.mu_y, max_outer=budget.catalyst_iterations,
                             eps_subproblem=budget.eps_tilde)
    y_hat, crep = catalyst_run(subsolver, np.zeros(problem.n_y), cat_cfg)
    q = cat_cfg.q
    C = c.D if params.C is None else params.C
    gap_est = (C * (1 - math.sqrt(q) / 2) ** crep.outer_iterations
               + lemma4_error_bound(c, budget.eps_x, budget.eps_y, H1))
    return ApproachReport("minmax-large", state["x"], y_hat, gap_est, ledger.snapshot(), stages,
                          eps, sigma, budget, extras=dict(catalyst=crep))
