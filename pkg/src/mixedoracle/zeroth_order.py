"""Accelerated randomized directional-derivative methods (Euclidean setup).

``ardd_run`` is the accelerated method for smooth convex objectives and
``arddsc_run`` restarts it for strongly convex ones, halving the expected
error per restart. Each iteration costs exactly two objective evaluations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np

from .core import (InvalidParameter, NumericalFailure, default_tau,
                   sample_unit_sphere_batch)


@dataclass
class ArddConfig:
    L: float
    N: int
    n: int
    tau: Optional[float] = None  # None: default_tau at the starting point

    def __post_init__(self):
        if not self.L > 0:
            raise InvalidParameter("L must be positive")
        if self.N < 1:
            raise InvalidParameter("N must be >= 1")
        if self.n < 1:
            raise InvalidParameter("n must be >= 1")
        if self.tau is not None and not self.tau > 0:
            raise InvalidParameter("tau must be positive")


@dataclass
class ArddRun:
    y_final: np.ndarray
    iterations: int
    calls: int
    trajectory: Optional[List[np.ndarray]] = None


def ardd_run(objective: Callable[[np.ndarray], float], x0, config: ArddConfig,
             rng: np.random.Generator, record: bool = False) -> ArddRun:
    """Run ``config.N`` accelerated steps from ``x0`` and return ``y_N``.

    Step ``k`` uses the coupling weight ``2/(k+2)``, a gradient step of length
    ``1/(2L)`` along the sampled direction and a mirror step with weight
    ``(k+1)/(96 n^2 L)`` on the ``n``-scaled two-point estimate.
    """
    n, L, N = config.n, config.L, config.N
    y = np.array(x0, dtype=float)
    if y.shape != (n,):
        raise InvalidParameter(f"x0 has shape {y.shape}, expected ({n},)")
    w = y.copy()
    tau = config.tau if config.tau is not None else default_tau(y)
    E = sample_unit_sphere_batch(n, N, rng)
    TE = list(tau * E)
    E = list(E)
    mirror = n / (96.0 * n * n * L)
    half_inv_L = 0.5 / L
    inv_tau = 1.0 / tau
    isfinite = math.isfinite
    traj = [y.copy()] if record else None
    for k in range(N):
        t = 2.0 / (k + 2)
        x = y + t * (w - y)
        fx = objective(x)
        d = (objective(x + TE[k]) - fx) * inv_tau
        if not isfinite(d):
            raise NumericalFailure("non-finite directional derivative", y=x, iteration=k)
        e = E[k]
        # the n-scaled estimate overshoots along e for n > 4, so the gradient
        # step uses the directional derivative itself
        y = x - (half_inv_L * d) * e
        w = w - ((k + 1) * mirror * d) * e
        if record:
            traj.append(y.copy())
    return ArddRun(y, N, 2 * N, traj)


def _rho_n(n: int) -> float:
    # min{q-1, 16 ln n - 8} n^{2/q - 1} with q = 2; the second term is
    # negative for n = 1, where the Euclidean constant 1 is used
    if n < 2:
        return 1.0
    return min(1.0, 16.0 * math.log(n) - 8.0)


@dataclass
class ArddscConfig:
    mu: float
    L: float
    R0_sq: float
    restarts: int
    n: int
    Omega2: float = 1.0
    tau: Optional[float] = None

    def __post_init__(self):
        if not (0 < self.mu <= self.L):
            raise InvalidParameter("need 0 < mu <= L")
        if self.restarts < 0:
            raise InvalidParameter("restarts must be >= 0")
        if self.R0_sq < 0:
            raise InvalidParameter("R0_sq must be non-negative")
        if self.n < 1:
            raise InvalidParameter("n must be >= 1")

    @property
    def rho_n(self) -> float:
        return _rho_n(self.n)

    @property
    def a_const(self) -> float:
        return 384.0 * self.n ** 2 * self.rho_n

    @property
    def N0(self) -> int:
        return math.ceil(math.sqrt(8.0 * self.a_const * self.L * self.Omega2 / self.mu))


def arddsc_run(objective: Callable[[np.ndarray], float], x0, config: ArddscConfig,
               rng: np.random.Generator, history: Optional[list] = None) -> np.ndarray:
    """Restart ARDD ``config.restarts`` times, ``N0`` steps each.

    In the Euclidean setup the rescaled prox-function of each round only moves
    the starting point, so a round is a plain ARDD run from ``u_k``.
    """
    u = np.array(x0, dtype=float)
    if history is not None:
        history.append(u.copy())
    if config.restarts == 0:
        return u
    inner = ArddConfig(L=config.L, N=config.N0, n=config.n,
                       tau=config.tau if config.tau is not None else default_tau(u))
    for _ in range(config.restarts):
        u = ardd_run(objective, u, inner, rng).y_final
        if history is not None:
            history.append(u.copy())
    return u


def restarts_for(mu: float, R0_sq: float, eps: float) -> int:
    """Smallest restart count with ``mu R0^2 / 2 * 2^-k <= eps`` (at least 1)."""
    if not eps > 0:
        raise InvalidParameter("eps must be positive")
    ratio = mu * R0_sq / (2.0 * eps)
    if ratio <= 1.0:
        return 1
    return max(1, math.ceil(math.log2(ratio)))


def arddsc_iterations_for(eps: float, config: ArddscConfig):
    """``(restarts, zeroth-order calls)`` to reach expected accuracy ``eps``."""
    k = restarts_for(config.mu, config.R0_sq, eps)
    return k, 2 * k * config.N0


@dataclass
class InnerSolve:
    y: np.ndarray
    restarts: int
    calls: int
    target: float
    R0_sq: float


@dataclass
class ArddscDriver:
    """Solves inner problems to ``(eps, sigma)`` accuracy.

    The restart analysis bounds the expected error only, so a confidence
    ``1 - sigma`` at accuracy ``eps`` is obtained by targeting ``sigma * eps``
    in expectation (Markov's inequality).
    """

    rng: np.random.Generator
    Omega2: float = 1.0
    solves: int = 0
    calls: int = 0
    log: list = field(default_factory=list)

    def solve(self, objective, n: int, L: float, mu: float, y0, R0_sq: float,
              eps: float, sigma: float = 1.0) -> InnerSolve:
        if not (0 < sigma <= 1):
            raise InvalidParameter("sigma must lie in (0, 1]")
        target = sigma * eps
        k = restarts_for(mu, R0_sq, target)
        cfg = ArddscConfig(mu=mu, L=L, R0_sq=R0_sq, restarts=k, n=n, Omega2=self.Omega2)
        y = arddsc_run(objective, y0, cfg, self.rng)
        calls = 2 * k * cfg.N0
        self.solves += 1
        self.calls += calls
        return InnerSolve(y, k, calls, target, R0_sq)
