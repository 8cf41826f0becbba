"""Fast adaptive gradient method with a probabilistic inexact oracle.

An oracle maps ``x`` to an :class:`InexactOracleSample` ``(value, grad)``
such that, with probability at least ``1 - sigma``,

    mu/2 ||x' - x||^2 <= f(x') - value - <grad, x' - x> <= L/2 ||x' - x||^2 + delta

for all feasible ``x'``. :func:`make_inexact_oracle` builds such an oracle for
``g(x) = max_y f(x, y)`` (optionally with a Catalyst regularizer in ``y``)
from an inner zeroth-order solver.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .core import (EPS_MACHINE, FeasibleSet, InvalidParameter, MixedOracleError, Mode,
                   MixedOracleProblem, OracleLedger, eval_f, eval_grad_x,
                   inner_objective)
from .zeroth_order import ArddscDriver


class LineSearchDiverged(MixedOracleError):
    pass


@dataclass
class InexactOracleSample:
    value: float
    grad: np.ndarray
    delta: float = 0.0
    sigma: float = 0.0


@dataclass
class FgmConfig:
    L0: float
    mu: float
    N: int
    feasible_set: FeasibleSet
    delta: Union[float, Sequence[float], Callable[[int], float]] = 0.0
    R2_sq: Optional[float] = None  # bound on 1/2 ||x0 - x*||^2; default from the set diameter
    max_doublings: int = 60

    def __post_init__(self):
        if not self.L0 > 0:
            raise InvalidParameter("L0 must be positive")
        if self.mu < 0:
            raise InvalidParameter("mu must be non-negative")
        if self.N < 0:
            raise InvalidParameter("N must be non-negative")

    def delta_at(self, k: int) -> float:
        if callable(self.delta):
            return float(self.delta(k))
        if np.ndim(self.delta) == 0:
            return float(self.delta)
        return float(self.delta[k])

    @property
    def radius_sq(self) -> float:
        if self.R2_sq is not None:
            return self.R2_sq
        return 0.5 * self.feasible_set.diameter ** 2


@dataclass
class FgmState:
    x: np.ndarray
    y: np.ndarray
    u: np.ndarray
    A: float = 0.0
    L_cur: float = 1.0
    k: int = 0


@dataclass
class FgmReport:
    iterations: int
    oracle_calls: int
    L_history: list = field(default_factory=list)
    A_history: list = field(default_factory=list)
    alpha_history: list = field(default_factory=list)
    x_history: Optional[list] = None
    L_max: float = 0.0
    predicted_gap: float = math.inf
    certified_gap: float = math.inf
    sigma_total: float = 0.0  # union bound over iterations of the oracle failure rates


def fgm_alpha(A_k: float, L_next: float, mu: float) -> float:
    """Largest root of ``(A_k + a)(1 + A_k mu) = L_next a^2``."""
    c = 1.0 + A_k * mu
    return (c + math.sqrt(c * c + 4.0 * L_next * A_k * c)) / (2.0 * L_next)


def fgm_prox_step(grad, y_ref, u_prev, A_k: float, alpha_next: float, mu: float,
                  feasible_set: FeasibleSet) -> np.ndarray:
    """Exact minimizer over the set of

    ``alpha <grad, x - y_ref> + (1 + A_k mu)/2 ||x - u_prev||^2 + alpha mu/2 ||x - y_ref||^2``.

    The objective has identity-scaled curvature, so projecting the
    unconstrained minimizer is exact.
    """
    c = 1.0 + A_k * mu
    free = (c * u_prev + alpha_next * mu * y_ref - alpha_next * grad) / (c + alpha_next * mu)
    return feasible_set.project(free)


def corollary_gap(L: float, mu: float, N: int, R2_sq: float, delta: float) -> float:
    """``2 L exp(-(N-1)/2 sqrt(mu/L)) R^2 + (1 + sqrt(L/mu)) delta``."""
    if mu <= 0:
        return math.inf
    return (2 * L * math.exp(-(N - 1) / 2 * math.sqrt(mu / L)) * R2_sq
            + (1 + math.sqrt(L / mu)) * delta)


def fgm_iterations_for(eps: float, L: float, mu: float, R2_sq: float) -> int:
    """Smallest ``N`` with ``2 L exp(-(N-1)/2 sqrt(mu/L)) R^2 <= eps``."""
    if not (eps > 0 and mu > 0):
        raise InvalidParameter("need eps > 0 and mu > 0")
    ratio = 2 * L * R2_sq / eps
    if ratio <= 1:
        return 1
    return 1 + math.ceil(2 * math.sqrt(L / mu) * math.log(ratio))


def fgm_solve(oracle: Callable[[np.ndarray], InexactOracleSample], x0, config: FgmConfig,
              record: bool = False):
    """Run ``config.N`` iterations; return ``(x_N, FgmReport)``."""
    X = config.feasible_set
    x = X.project(np.asarray(x0, dtype=float))
    st = FgmState(x=x, y=x.copy(), u=x.copy(), A=0.0, L_cur=config.L0)
    mu = config.mu
    calls = 0
    rep = FgmReport(iterations=0, oracle_calls=0, x_history=[x.copy()] if record else None)
    weighted_delta = 0.0
    # a valid oracle has L >= mu; without a floor, converged iterates with
    # delta > 0 pass every first trial and L_k halves until A overflows
    L_floor = mu if mu > 0 else 1e-12 * config.L0

    for k in range(config.N):
        delta_k = config.delta_at(k)
        cached_y, cached_s = None, None
        for i in range(config.max_doublings + 1):
            L_next = max(2.0 ** (i - 1) * st.L_cur, L_floor)
            alpha = fgm_alpha(st.A, L_next, mu)
            A_next = st.A + alpha
            y = (alpha * st.u + st.A * st.x) / A_next
            if cached_y is not None and np.array_equal(y, cached_y):
                s = cached_s
            else:
                s = oracle(y)
                calls += 1
                cached_y, cached_s = y, s
            u_next = fgm_prox_step(s.grad, y, st.u, st.A, alpha, mu, X)
            x_next = (alpha * u_next + st.A * st.x) / A_next
            t = oracle(x_next)
            calls += 1
            d = x_next - y
            lin = float(s.grad @ d)
            # rounding slack: near convergence the test compares numbers at
            # the level of machine precision times |f|
            tol = 4 * EPS_MACHINE * (abs(t.value) + abs(s.value) + abs(lin))
            if t.value <= s.value + lin + 0.5 * L_next * float(d @ d) + delta_k + tol:
                break
        else:
            raise LineSearchDiverged(
                f"line search exceeded {config.max_doublings} doublings at iteration {k}")
        weighted_delta += A_next * delta_k
        rep.sigma_total += s.sigma
        st = FgmState(x=x_next, y=y, u=u_next, A=A_next, L_cur=L_next, k=k + 1)
        rep.L_history.append(L_next)
        rep.A_history.append(A_next)
        rep.alpha_history.append(alpha)
        if record:
            rep.x_history.append(x_next.copy())

    rep.iterations = st.k
    rep.oracle_calls = calls
    if rep.L_history:
        rep.L_max = max(rep.L_history)
        deltas = [config.delta_at(k) for k in range(st.k)]
        R2 = config.radius_sq
        rep.predicted_gap = corollary_gap(rep.L_max, mu, st.k, R2, max(deltas))
        rep.certified_gap = (R2 + 2 * weighted_delta) / st.A
    return st.x, rep


class InexactOracle:
    """Oracle for ``x -> max_y [f(x, y) - H1/2 ||y - z||^2]`` via an inner solver.

    Each call solves the inner maximization to ``(eps_y, sigma_y)`` accuracy,
    warm-started from the previous answer, then returns ``f`` minus the
    regularizer and ``grad_x f`` at the approximate maximizer. The resulting
    oracle has inexactness ``2 eps_y``, smoothness ``2 L_g`` with
    ``L_g = L_xx + 2 L_xy^2 / (mu_y + H1)`` and strong convexity ``mu_x``.
    """

    def __init__(self, problem: MixedOracleProblem, driver: ArddscDriver, eps_y: float,
                 sigma_y: float, ledger: OracleLedger, H1: float = 0.0, z=None,
                 warm_start=None):
        if problem.mode is not Mode.MIN_MAX:
            raise InvalidParameter("the inexact oracle needs a min-max problem")
        if H1 < 0:
            raise InvalidParameter("H1 must be non-negative")
        c = problem.constants
        self.problem = problem
        self.driver = driver
        self.eps_y = float(eps_y)
        self.sigma_y = float(sigma_y)
        self.ledger = ledger
        self.H1 = float(H1)
        self.z = np.zeros(problem.n_y) if z is None else np.asarray(z, dtype=float)
        self.mu_in = c.mu_y + self.H1
        self.L_in = c.L_yy + self.H1
        self.L_g = c.L_xx + 2 * c.L_xy ** 2 / self.mu_in
        self.L = 2 * self.L_g
        self.mu = c.mu_x
        self.delta = 2 * self.eps_y
        self.calls = 0
        self.last = warm_start  # (x, y) of the previous answer
        self.last_y = None

    def cold_start(self):
        """Start point and squared-distance bound that need no history."""
        D, mu_y = self.problem.constants.D, self.problem.constants.mu_y
        r_f = math.sqrt(2 * D / mu_y)
        if self.H1 > 0:
            # the regularized maximizer is a prox point of z, hence no farther
            # from z than the unregularized one
            return self.z.copy(), (float(np.linalg.norm(self.z)) + r_f) ** 2
        return np.zeros(self.problem.n_y), r_f ** 2

    def start_for(self, x):
        y0, R0_sq = self.cold_start()
        if self.last is not None:
            x_p, y_p = self.last
            lip = self.problem.constants.L_xy / self.mu_in
            r = math.sqrt(2 * self.eps_y / self.mu_in) + lip * float(np.linalg.norm(x - x_p))
            if r * r < R0_sq:
                y0, R0_sq = np.array(y_p, dtype=float), r * r
        return y0, R0_sq

    def inner(self, x):
        x = np.asarray(x, dtype=float)
        y0, R0_sq = self.start_for(x)
        fn = inner_objective(self.problem, x, self.ledger, H1=self.H1, z=self.z)
        res = self.driver.solve(fn, self.problem.n_y, self.L_in, self.mu_in, y0, R0_sq,
                                self.eps_y, self.sigma_y)
        self.last = (x.copy(), res.y)
        self.last_y = res.y
        return res.y

    def __call__(self, x) -> InexactOracleSample:
        x = np.asarray(x, dtype=float)
        y = self.inner(x)
        v = eval_f(self.problem, x, y, self.ledger)
        if self.H1 > 0:
            d = y - self.z
            v -= 0.5 * self.H1 * float(d @ d)
        g = eval_grad_x(self.problem, x, y, self.ledger)
        self.calls += 1
        return InexactOracleSample(v, g, self.delta, self.sigma_y)


def make_inexact_oracle(problem: MixedOracleProblem, driver: ArddscDriver, eps_y: float,
                        sigma_y: float, ledger: OracleLedger, H1: float = 0.0, z=None,
                        warm_start=None) -> InexactOracle:
    return InexactOracle(problem, driver, eps_y, sigma_y, ledger, H1=H1, z=z,
                         warm_start=warm_start)
