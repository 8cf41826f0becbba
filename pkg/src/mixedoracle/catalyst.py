"""Catalyst acceleration for maximizing a strongly concave function ``h``.

Each outer step approximately maximizes ``h(y) - H1/2 ||y - z||^2`` and then
extrapolates ``z`` with Nesterov-style momentum. The subproblem solver is
supplied by the caller; its accuracy contract is certified by the caller, not
measured here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Optional

import numpy as np

from .core import InvalidParameter, MixedOracleError


class SubsolverFailure(MixedOracleError):
    def __init__(self, message, outer_index):
        super().__init__(message)
        self.outer_index = outer_index


@dataclass
class CatalystConfig:
    H1: float
    mu_y: float
    max_outer: int
    eps_subproblem: float = 0.0
    alpha0: Optional[float] = None  # None: sqrt(q)

    def __post_init__(self):
        if not self.H1 > 0:
            raise InvalidParameter("H1 must be positive")
        if not self.mu_y > 0:
            raise InvalidParameter("mu_y must be positive")
        if self.max_outer < 0:
            raise InvalidParameter("max_outer must be non-negative")
        a0 = self.initial_alpha
        if not 0 < a0 <= 1:
            raise InvalidParameter("alpha0 must lie in (0, 1]")

    @property
    def q(self) -> float:
        return self.mu_y / (self.mu_y + self.H1)

    @property
    def initial_alpha(self) -> float:
        return math.sqrt(self.q) if self.alpha0 is None else float(self.alpha0)


@dataclass
class CatalystState:
    y_cur: np.ndarray
    y_prev: np.ndarray
    z: np.ndarray
    alpha_cur: float
    alpha_prev: float
    k: int = 0


@dataclass
class CatalystStep:
    k: int
    alpha: float
    beta: float
    residual: float
    eps_subproblem: float
    info: Any = None


@dataclass
class CatalystReport:
    outer_iterations: int
    steps: list = field(default_factory=list)
    trajectory: Optional[list] = None


def catalyst_alpha_next(alpha_prev: float, q: float) -> float:
    """Root in ``(0, 1)`` of ``a^2 = (1 - a) alpha_prev^2 + q a``."""
    if not (0 < alpha_prev <= 1):
        raise InvalidParameter("alpha_prev must lie in (0, 1]")
    if not (0 < q < 1):
        raise InvalidParameter("q must lie in (0, 1)")
    a2 = alpha_prev * alpha_prev
    p = a2 - q
    # a^2 + p a - a2 = 0; the product of the roots is -a2 < 0, so the positive
    # root is computed without cancellation from whichever form is stable
    disc = math.sqrt(p * p + 4.0 * a2)
    if p >= 0:
        return 2.0 * a2 / (p + disc)
    return (-p + disc) / 2.0


def alpha_residual(alpha: float, alpha_prev: float, q: float) -> float:
    return abs(alpha * alpha - (1.0 - alpha) * alpha_prev * alpha_prev - q * alpha)


def catalyst_beta(alpha_prev: float, alpha: float) -> float:
    return alpha_prev * (1.0 - alpha_prev) / (alpha_prev * alpha_prev + alpha)


def catalyst_iterations(H1: float, mu_y: float, C: float, eps: float) -> int:
    """``ceil(sqrt(H1/mu_y) ln(C/eps))``, at least 1."""
    if not (eps > 0 and H1 > 0 and mu_y > 0):
        raise InvalidParameter("need positive H1, mu_y and eps")
    if C <= eps:
        return 1
    return max(1, math.ceil(math.sqrt(H1 / mu_y) * math.log(C / eps)))


def catalyst_run(subsolver: Callable[[np.ndarray, float, int], Any], y0,
                 config: CatalystConfig, record: bool = False):
    """Run ``config.max_outer`` outer steps; return ``(y_final, CatalystReport)``.

    ``subsolver(z, eps, k)`` returns either a y-vector or a pair
    ``(y, info)``; ``info`` is kept in the report.
    """
    y0 = np.array(y0, dtype=float)
    q = config.q
    a0 = config.initial_alpha
    st = CatalystState(y_cur=y0.copy(), y_prev=y0.copy(), z=y0.copy(),
                       alpha_cur=a0, alpha_prev=a0)
    rep = CatalystReport(0, trajectory=[y0.copy()] if record else None)
    for k in range(1, config.max_outer + 1):
        try:
            out = subsolver(st.z, config.eps_subproblem, k)
        except MixedOracleError as exc:
            raise SubsolverFailure(f"outer step {k}: {exc}", k) from exc
        y_new, info = out if isinstance(out, tuple) else (out, None)
        y_new = np.asarray(y_new, dtype=float)
        alpha = catalyst_alpha_next(st.alpha_cur, q) if q < 1 else 1.0
        beta = catalyst_beta(st.alpha_cur, alpha)
        res = alpha_residual(alpha, st.alpha_cur, q)
        z = y_new + beta * (y_new - st.y_cur)
        st = CatalystState(y_cur=y_new, y_prev=st.y_cur, z=z, alpha_cur=alpha,
                           alpha_prev=st.alpha_cur, k=k)
        rep.steps.append(CatalystStep(k, alpha, beta, res, config.eps_subproblem, info))
        if record:
            rep.trajectory.append(y_new.copy())
    rep.outer_iterations = st.k
    return st.y_cur, rep
