"""Vaidya's volumetric-center cutting-plane method driven by delta-subgradients.

The polytope is ``{x : A x >= b}``. With slacks ``s_i = a_i^T x - b_i`` and
scaled rows ``a_i / s_i`` stacked into ``As``:

* log-barrier Hessian ``H = As^T As``
* leverage scores ``sigma = diag(As H^{-1} As^T)``, summing to ``n``
* volumetric barrier ``F = 1/2 log det H``
* ``grad F = -As^T sigma`` and ``hess F = As^T (3 diag(sigma) - 2 P*P) As``
  where ``P = As H^{-1} As^T`` and ``*`` is the elementwise product.

Centering uses Newton's method on ``F`` with the exact Hessian above.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np
from scipy.linalg import cho_solve, solve_triangular

from .core import FeasibleSet, InvalidParameter, MixedOracleError


class NotInterior(MixedOracleError, ValueError):
    pass


class CenteringFailure(MixedOracleError):
    pass


class RowCapExceeded(MixedOracleError):
    pass


class BudgetExceeded(MixedOracleError):
    def __init__(self, message, best_point=None, best_value=None, report=None):
        super().__init__(message)
        self.best_point = best_point
        self.best_value = best_value
        self.report = report


@dataclass
class Polytope:
    A: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        self.A = np.atleast_2d(np.asarray(self.A, dtype=float))
        self.b = np.asarray(self.b, dtype=float).reshape(-1)
        if self.A.shape[0] != self.b.shape[0]:
            raise InvalidParameter("A and b have different row counts")

    @property
    def n(self) -> int:
        return self.A.shape[1]

    @property
    def m(self) -> int:
        return self.A.shape[0]

    def slacks(self, x) -> np.ndarray:
        return self.A @ x - self.b

    def contains(self, x, tol=0.0) -> bool:
        return bool(np.all(self.slacks(x) >= -tol))

    def with_row(self, a, beta) -> "Polytope":
        return Polytope(np.vstack([self.A, a]), np.append(self.b, beta))

    def without_row(self, i) -> "Polytope":
        keep = np.arange(self.m) != i
        return Polytope(self.A[keep], self.b[keep])


@dataclass
class DeltaSubgradient:
    """Oracle answer at a query point ``z``.

    ``-c`` is a ``delta``-subgradient of the outer objective at ``z`` when
    ``feasible``; otherwise ``c`` separates ``z`` from the feasible set. ``value``
    is the oracle's estimate of the objective at ``z`` (absent when infeasible).
    """

    c: np.ndarray
    delta: float = 0.0
    feasible: bool = True
    value: Optional[float] = None


@dataclass
class VaidyaParams:
    eta: float = 1e-4
    gamma: float = 1e-7
    newton_tol: float = 1e-9
    max_newton: int = 50
    m_max: Optional[int] = None

    def __post_init__(self):
        if not (self.eta > 0 and self.gamma > 0):
            raise InvalidParameter("eta and gamma must be positive")
        if not self.entering_leverage < 1:
            raise InvalidParameter("1/2 sqrt(eta*gamma) must be below 1")

    @classmethod
    def practical(cls, **kw) -> "VaidyaParams":
        """Settings that finish in seconds at desk scale.

        They leave the ``eta <= 1e-4, gamma <= 1e-3 eta`` regime, so the
        iteration count is still computed from the same formula but the
        theoretical guarantee no longer applies verbatim.
        """
        kw.setdefault("eta", 1.0)
        kw.setdefault("gamma", 0.05)
        return cls(**kw)

    @property
    def entering_leverage(self) -> float:
        return 0.5 * math.sqrt(self.eta * self.gamma)

    @property
    def within_theory(self) -> bool:
        return self.eta <= 1e-4 and self.gamma <= 1e-3 * self.eta

    def row_cap(self, n: int) -> int:
        # an add step needs every leverage >= gamma and leverages sum to n,
        # so m <= n / gamma + 1 always holds
        if self.m_max is not None:
            return self.m_max
        return max(10 * n + 20, int(n / self.gamma) + 2)


@dataclass
class _Terms:
    s: np.ndarray
    As: np.ndarray
    chol: np.ndarray
    sigma: np.ndarray
    W: np.ndarray  # L^{-1} As^T, so P = W^T W
    F: float


def _cholesky(H):
    try:
        return np.linalg.cholesky(H)
    except np.linalg.LinAlgError:
        n = H.shape[0]
        jitter = 1e-12 * np.trace(H) / n
        try:
            return np.linalg.cholesky(H + jitter * np.eye(n))
        except np.linalg.LinAlgError as exc:
            raise CenteringFailure("log-barrier Hessian is not positive definite") from exc


def _terms(poly: Polytope, x) -> _Terms:
    s = poly.A @ x - poly.b
    if not np.all(s > 0):
        raise NotInterior(f"point is not strictly interior (min slack {s.min():.3e})")
    As = poly.A / s[:, None]
    L = _cholesky(As.T @ As)
    W = solve_triangular(L, As.T, lower=True)
    sigma = np.einsum("ij,ij->j", W, W)
    F = float(np.sum(np.log(np.diag(L))))
    return _Terms(s, As, L, sigma, W, F)


def log_barrier_hessian(poly: Polytope, x) -> np.ndarray:
    s = poly.slacks(x)
    if not np.all(s > 0):
        raise NotInterior(f"point is not strictly interior (min slack {s.min():.3e})")
    As = poly.A / s[:, None]
    return As.T @ As


def leverage_scores(poly: Polytope, x) -> np.ndarray:
    return _terms(poly, np.asarray(x, dtype=float)).sigma


def volumetric_barrier(poly: Polytope, x) -> float:
    return _terms(poly, np.asarray(x, dtype=float)).F


def volumetric_gradient(poly: Polytope, x) -> np.ndarray:
    t = _terms(poly, np.asarray(x, dtype=float))
    return -t.As.T @ t.sigma


def volumetric_hessian(poly: Polytope, x) -> np.ndarray:
    t = _terms(poly, np.asarray(x, dtype=float))
    return _hessian_from_terms(t)


def _hessian_from_terms(t: _Terms) -> np.ndarray:
    P = t.W.T @ t.W
    M = 3 * np.diag(t.sigma) - 2 * P * P
    return t.As.T @ M @ t.As


def initial_simplex(n: int, R: float):
    """Simplex ``{x_j >= -R, sum x_j <= n R}`` and its volumetric center."""
    if n < 1:
        raise InvalidParameter("dimension must be >= 1")
    if not R > 0:
        raise InvalidParameter("R must be positive")
    A = np.vstack([np.eye(n), -np.ones((1, n))])
    b = -R * np.append(np.ones(n), n)
    omega = (n - 1) / (n + 1) * R * np.ones(n)
    return Polytope(A, b), omega


def simplex_barrier_at_center(n: int, R: float) -> float:
    """Closed form ``F(omega) = (n + 1/2) ln(n+1) - n ln(2 n R)``."""
    return (n + 0.5) * math.log(n + 1) - n * math.log(2 * n * R)


@dataclass
class CenteringResult:
    z: np.ndarray
    F: float
    grad_norm: float
    steps: int
    converged: bool
    F_trace: List[float] = field(default_factory=list)


def volumetric_center(poly: Polytope, z0, tol: float = 1e-9, max_steps: int = 50,
                      max_backtracks: int = 60) -> CenteringResult:
    """Damped Newton on the volumetric barrier starting from interior ``z0``.

    Stops when ``||grad F(z)||_{H(z)^{-1}} <= tol``.
    """
    z = np.array(z0, dtype=float)
    t = _terms(poly, z)
    trace = [t.F]
    steps = 0
    converged = False
    gnorm = math.inf
    for steps in range(max_steps + 1):
        g = -t.As.T @ t.sigma
        hg = cho_solve((t.chol, True), g)
        gnorm = math.sqrt(max(float(g @ hg), 0.0))
        if gnorm <= tol:
            converged = True
            break
        if steps == max_steps:
            break
        Hf = _hessian_from_terms(t)
        try:
            d = -np.linalg.solve(Hf, g)
        except np.linalg.LinAlgError:
            d = -hg
        slope = float(g @ d)
        if slope >= 0:  # rounding made the exact Hessian indefinite
            d = -hg
            slope = float(g @ d)
        lam2 = -slope
        step = 1.0
        accepted = None
        any_interior = False
        for _ in range(max_backtracks):
            zn = z + step * d
            if np.all(poly.A @ zn - poly.b > 0):
                any_interior = True
                tn = _terms(poly, zn)
                if tn.F <= t.F + 1e-4 * step * slope:
                    accepted = (zn, tn)
                    break
                if lam2 < 1e-12 and tn.F <= t.F + 1e-13 * max(1.0, abs(t.F)):
                    # round-off floor: quadratic convergence region
                    accepted = (zn, tn)
                    break
            step *= 0.5
        if accepted is None:
            if not any_interior:
                raise CenteringFailure("backtracking could not stay inside the polytope")
            # no further decrease is representable in floating point
            converged = gnorm <= 1e3 * tol
            break
        z, t = accepted
        trace.append(t.F)
    return CenteringResult(z, t.F, gnorm, steps, converged, trace)


@dataclass
class VaidyaState:
    poly: Polytope
    z: np.ndarray
    params: VaidyaParams
    best_point: Optional[np.ndarray] = None
    best_value: Optional[float] = None
    iteration: int = 0
    adds: int = 0
    removes: int = 0
    feasible_queries: int = 0
    max_rows: int = 0
    history: Optional[list] = None

    @classmethod
    def start(cls, n: int, R: float, params: Optional[VaidyaParams] = None,
              record: bool = False) -> "VaidyaState":
        params = params or VaidyaParams()
        poly, omega = initial_simplex(n, R)
        st = cls(poly, omega, params, max_rows=poly.m, history=[] if record else None)
        if record:
            st.history.append(("start", poly.m, omega.copy(), volumetric_barrier(poly, omega)))
        return st


def recentre(state: VaidyaState) -> CenteringResult:
    res = volumetric_center(state.poly, state.z, tol=state.params.newton_tol,
                            max_steps=state.params.max_newton)
    state.z = res.z
    return res


def cut_offset(c, H, z, entering_leverage: float) -> float:
    """``beta`` with ``c^T H^{-1} c / (c^T z - beta)^2 = entering_leverage``."""
    r = float(c @ np.linalg.solve(H, c))
    if not r > 0:
        raise CenteringFailure("c^T H^{-1} c is not positive")
    return float(c @ z) - math.sqrt(r / entering_leverage)


def vaidya_step(state: VaidyaState, oracle: Callable[[np.ndarray], DeltaSubgradient],
                feasible_set: Optional[FeasibleSet] = None) -> VaidyaState:
    """One add-or-remove step followed by recentring.

    When ``feasible_set`` is given, query points outside it are cut by a
    separating hyperplane without calling ``oracle``.
    """
    p = state.params
    t = _terms(state.poly, state.z)
    n = state.poly.n
    i_min = int(np.argmin(t.sigma))
    kind = "add"
    if t.sigma[i_min] < p.gamma and state.poly.m > n + 1:
        state.poly = state.poly.without_row(i_min)
        state.removes += 1
        kind = "remove"
    else:
        z = state.z
        if feasible_set is not None and not feasible_set.contains(z):
            sg = DeltaSubgradient(feasible_set.separating(z), 0.0, feasible=False)
        else:
            sg = oracle(z)
        if sg.feasible:
            state.feasible_queries += 1
            if sg.value is None:
                # no value estimate: the latest center is the best guess
                state.best_point = z.copy()
            elif state.best_value is None or sg.value < state.best_value:
                state.best_value = float(sg.value)
                state.best_point = z.copy()
        c = np.asarray(sg.c, dtype=float)
        if not np.any(c):
            # zero subgradient: z is optimal up to delta, nothing to cut
            kind = "stationary"
        else:
            if state.poly.m >= p.row_cap(n):
                raise RowCapExceeded(f"polytope reached the row cap {p.row_cap(n)}")
            H = t.As.T @ t.As
            beta = cut_offset(c, H, z, p.entering_leverage)
            state.poly = state.poly.with_row(c, beta)
            state.adds += 1
    state.max_rows = max(state.max_rows, state.poly.m)
    if kind != "stationary":
        res = recentre(state)
        F = res.F
    else:
        F = t.F
    state.iteration += 1
    if state.history is not None:
        state.history.append((kind, state.poly.m, state.z.copy(), F))
    return state


def vaidya_iterations(n: int, R: float, rho: float, gamma: float, eps_scale: float) -> int:
    """Iterations after which the geometric term is at most ``B * eps_scale``."""
    if not (R > 0 and rho > 0 and gamma > 0 and eps_scale > 0):
        raise InvalidParameter("R, rho, gamma and eps_scale must be positive")
    N = (2 * n / gamma) * math.log(n ** 1.5 * R / (gamma * rho * eps_scale)) + math.log(math.pi) / gamma
    return max(1, math.ceil(N))


def vaidya_gap_bound(B: float, n: int, R: float, rho: float, gamma: float, N: int,
                     delta: float = 0.0) -> float:
    geo = B * n ** 1.5 * R / (gamma * rho) * math.exp((math.log(math.pi) - gamma * N) / (2 * n))
    return geo + delta


@dataclass
class VaidyaReport:
    N: int
    iterations: int
    first_calls: int
    adds: int
    removes: int
    max_rows: int
    best_value: Optional[float]
    predicted_gap: float
    within_theory: bool
    history: Optional[list] = None


def vaidya_solve(oracle: Callable[[np.ndarray], DeltaSubgradient], feasible_set: FeasibleSet,
                 params: Optional[VaidyaParams] = None, N: Optional[int] = None,
                 eps_geometric: Optional[float] = None, delta: float = 0.0,
                 max_iter: Optional[int] = None, record: bool = False):
    """Run Vaidya's method for ``N`` iterations and return the best feasible query.

    ``N`` defaults to the count that drives the geometric error term below
    ``eps_geometric``. ``delta`` is the oracle's inexactness, used only for the
    predicted gap in the report.
    """
    params = params or VaidyaParams()
    n = feasible_set.dim
    R, rho, B = feasible_set.R, feasible_set.rho, feasible_set.B_bound
    if N is None:
        if eps_geometric is None:
            raise InvalidParameter("either N or eps_geometric is required")
        N = vaidya_iterations(n, R, rho, params.gamma, eps_geometric / B)
    state = VaidyaState.start(n, R, params, record=record)
    limit = N if max_iter is None else min(N, max_iter)
    for _ in range(limit):
        vaidya_step(state, oracle, feasible_set)

    report = VaidyaReport(
        N=N, iterations=state.iteration, first_calls=state.feasible_queries,
        adds=state.adds, removes=state.removes, max_rows=state.max_rows,
        best_value=state.best_value,
        predicted_gap=vaidya_gap_bound(B, n, R, rho, params.gamma, N, delta),
        within_theory=params.within_theory, history=state.history)
    if limit < N:
        raise BudgetExceeded(f"required {N} iterations, cap is {max_iter}",
                             state.best_point, state.best_value, report)
    if state.best_point is None:
        raise CenteringFailure("no feasible query point was visited")
    return state.best_point, report
