"""Problem definitions, oracle accounting and the sphere-sampled gradient estimator.

Everything that touches the objective goes through :func:`eval_f` or
:func:`eval_grad_x`, so an :class:`OracleLedger` passed along a solver run
counts exactly the zeroth- and first-order calls the run made.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

EPS_MACHINE = float(np.finfo(float).eps)


class MixedOracleError(Exception):
    """Base class of all errors raised by this package."""


class NumericalFailure(MixedOracleError, ArithmeticError):
    def __init__(self, message, x=None, y=None, iteration=None):
        super().__init__(message)
        self.x = None if x is None else np.array(x, copy=True)
        self.y = None if y is None else np.array(y, copy=True)
        self.iteration = iteration


class InvalidDimension(MixedOracleError, ValueError):
    pass


class InvalidParameter(MixedOracleError, ValueError):
    pass


class Mode(enum.Enum):
    MIN_MIN = "minmin"
    MIN_MAX = "minmax"


@dataclass(frozen=True)
class SmoothnessConstants:
    """Curvature constants of ``f(x, y)``.

    ``D`` bounds the inner-problem residual at ``y = 0`` over the feasible set:
    ``max_X f(x, 0) - g(x)`` for min-min and ``max_X g(x) - f(x, 0)`` for
    min-max. It also bounds ``||y*(x)||^2 <= 2 D / mu_y``.
    """

    mu_x: float
    mu_y: float
    L_xx: float
    L_xy: float
    L_yy: float
    D: float = 0.0

    def __post_init__(self):
        if not self.mu_y > 0:
            raise InvalidParameter(f"mu_y must be positive, got {self.mu_y}")
        if self.mu_x < 0 or self.D < 0 or self.L_xy < 0:
            raise InvalidParameter("mu_x, L_xy and D must be non-negative")
        if not (self.L_xx > 0 and self.L_yy > 0):
            raise InvalidParameter("L_xx and L_yy must be positive")
        if self.L_yy < self.mu_y:
            raise InvalidParameter("L_yy must be >= mu_y")
        if self.mu_x > 0 and self.L_xx < self.mu_x:
            raise InvalidParameter("L_xx must be >= mu_x")


@dataclass(frozen=True)
class FeasibleSet:
    """Box or Euclidean ball in R^n.

    ``B_bound`` is a bound on the oscillation ``|g(x) - g(x')|`` of the outer
    objective over the set; it depends on the objective and is supplied by the
    caller (the synthetic generators compute it in closed form).
    """

    kind: str
    lower: Optional[np.ndarray] = None
    upper: Optional[np.ndarray] = None
    center: Optional[np.ndarray] = None
    radius: float = 0.0
    B_bound: float = 1.0

    @classmethod
    def box(cls, lower, upper, B_bound=1.0):
        lower = np.asarray(lower, dtype=float)
        upper = np.asarray(upper, dtype=float)
        if lower.shape != upper.shape or lower.ndim != 1:
            raise InvalidDimension("box bounds must be 1-D arrays of equal length")
        if np.any(upper <= lower):
            raise InvalidParameter("box must have non-empty interior")
        return cls("box", lower=lower, upper=upper, B_bound=float(B_bound))

    @classmethod
    def ball(cls, center, radius, B_bound=1.0):
        center = np.asarray(center, dtype=float)
        if center.ndim != 1:
            raise InvalidDimension("ball center must be a 1-D array")
        if not radius > 0:
            raise InvalidParameter("ball radius must be positive")
        return cls("ball", center=center, radius=float(radius), B_bound=float(B_bound))

    @property
    def dim(self) -> int:
        return len(self.lower) if self.kind == "box" else len(self.center)

    @property
    def R(self) -> float:
        """Radius of an origin-centred ball containing the set."""
        if self.kind == "box":
            return float(np.linalg.norm(np.maximum(np.abs(self.lower), np.abs(self.upper))))
        return float(np.linalg.norm(self.center) + self.radius)

    @property
    def rho(self) -> float:
        """Radius of a ball contained in the set."""
        if self.kind == "box":
            return float(np.min(self.upper - self.lower) / 2)
        return self.radius

    @property
    def inner_center(self) -> np.ndarray:
        if self.kind == "box":
            return (self.lower + self.upper) / 2
        return self.center.copy()

    @property
    def diameter(self) -> float:
        if self.kind == "box":
            return float(np.linalg.norm(self.upper - self.lower))
        return 2 * self.radius

    def contains(self, x, tol=0.0) -> bool:
        x = np.asarray(x, dtype=float)
        if self.kind == "box":
            return bool(np.all(x >= self.lower - tol) and np.all(x <= self.upper + tol))
        return bool(np.linalg.norm(x - self.center) <= self.radius + tol)

    def project(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.kind == "box":
            return np.clip(x, self.lower, self.upper)
        d = x - self.center
        r = np.linalg.norm(d)
        if r <= self.radius:
            return x.copy()
        return self.center + d * (self.radius / r)

    def separating(self, z) -> np.ndarray:
        """Return ``c`` with ``c @ x >= c @ z`` for every ``x`` in the set.

        ``z`` must lie outside the set.
        """
        z = np.asarray(z, dtype=float)
        if self.kind == "box":
            over = z - self.upper
            under = self.lower - z
            i_over = int(np.argmax(over))
            i_under = int(np.argmax(under))
            c = np.zeros_like(z)
            if over[i_over] >= under[i_under]:
                c[i_over] = -1.0
            else:
                c[i_under] = 1.0
            return c
        return self.center - z


@dataclass(frozen=True)
class MixedOracleProblem:
    """``f(x, y)`` with exact ``grad_x`` and values only in ``y``.

    ``f_partial(x)``, when given, returns ``y -> f(x, y)`` with the
    ``x``-dependent work done once; it must agree with ``f``.
    """

    n_x: int
    n_y: int
    f: Callable[[np.ndarray, np.ndarray], float]
    grad_x: Callable[[np.ndarray, np.ndarray], np.ndarray]
    mode: Mode
    constants: SmoothnessConstants
    feasible_set: FeasibleSet
    f_partial: Optional[Callable[[np.ndarray], Callable[[np.ndarray], float]]] = None

    def __post_init__(self):
        if self.n_x < 1 or self.n_y < 1:
            raise InvalidDimension("n_x and n_y must be positive")
        if self.feasible_set.dim != self.n_x:
            raise InvalidDimension("feasible set dimension differs from n_x")
        if not isinstance(self.mode, Mode):
            object.__setattr__(self, "mode", Mode(self.mode))


@dataclass
class OracleLedger:
    """Monotone counters of oracle calls."""

    zeroth_calls: int = 0
    first_calls: int = 0

    def snapshot(self) -> "OracleLedger":
        return OracleLedger(self.zeroth_calls, self.first_calls)

    def since(self, earlier: "OracleLedger") -> "OracleLedger":
        return OracleLedger(self.zeroth_calls - earlier.zeroth_calls,
                            self.first_calls - earlier.first_calls)


def make_rng(seed) -> np.random.Generator:
    """Deterministic PCG64 generator; ``seed`` may also be a SeedSequence."""
    return np.random.default_rng(seed)


def eval_f(problem: MixedOracleProblem, x, y, ledger: OracleLedger) -> float:
    ledger.zeroth_calls += 1
    v = float(problem.f(x, y))
    if not math.isfinite(v):
        raise NumericalFailure(f"non-finite objective value {v}", x=x, y=y)
    return v


def eval_grad_x(problem: MixedOracleProblem, x, y, ledger: OracleLedger) -> np.ndarray:
    ledger.first_calls += 1
    g = np.asarray(problem.grad_x(x, y), dtype=float)
    if not np.all(np.isfinite(g)):
        raise NumericalFailure("non-finite x-gradient", x=x, y=y)
    return g


def counted(fn: Callable[[np.ndarray], float], ledger: OracleLedger):
    """Wrap a scalar callback so every call is charged as a zeroth-order call."""

    def wrapped(y):
        ledger.zeroth_calls += 1
        v = float(fn(y))
        if not math.isfinite(v):
            raise NumericalFailure(f"non-finite objective value {v}", y=y)
        return v

    return wrapped


def inner_objective(problem: MixedOracleProblem, x, ledger: OracleLedger,
                    H1: float = 0.0, z=None):
    """Return the inner objective at fixed ``x`` as a function to *minimize*.

    Min-min: ``y -> f(x, y)``. Min-max: ``y -> -(f(x, y) - H1/2 ||y - z||^2)``.
    The regularizer is only meaningful for min-max (Catalyst subproblems).
    """
    x = np.asarray(x, dtype=float)
    if problem.f_partial is not None:
        fx = problem.f_partial(x)
    else:
        f = problem.f

        def fx(y):
            return f(x, y)

    def value(y):
        ledger.zeroth_calls += 1
        v = float(fx(y))
        if not math.isfinite(v):
            raise NumericalFailure(f"non-finite objective value {v}", x=x, y=y)
        return v

    if problem.mode is Mode.MIN_MIN:
        return value

    if H1 > 0:
        z = np.asarray(z, dtype=float)
        half = 0.5 * H1

        def fn(y):
            ledger.zeroth_calls += 1
            v = float(fx(y))
            if not math.isfinite(v):
                raise NumericalFailure(f"non-finite objective value {v}", x=x, y=y)
            d = y - z
            return half * float(d @ d) - v
        return fn

    def fn(y):
        return -value(y)
    return fn


def sample_unit_sphere(n: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform direction on the unit sphere in R^n (normalized Gaussian)."""
    if n < 1:
        raise InvalidDimension(f"dimension must be >= 1, got {n}")
    while True:
        e = rng.standard_normal(n)
        r = np.linalg.norm(e)
        if r > 0:
            return e / r


def sample_unit_sphere_batch(n: int, count: int, rng: np.random.Generator) -> np.ndarray:
    """``count`` directions at once; row ``k`` equals the ``k``-th sequential draw."""
    if n < 1:
        raise InvalidDimension(f"dimension must be >= 1, got {n}")
    E = rng.standard_normal((count, n))
    norms = np.linalg.norm(E, axis=1)
    for k in np.flatnonzero(norms == 0):
        E[k] = sample_unit_sphere(n, rng)
        norms[k] = 1.0
    return E / norms[:, None]


def default_tau(y) -> float:
    """Forward-difference radius ``sqrt(eps) * (1 + ||y||)``."""
    return math.sqrt(EPS_MACHINE) * (1.0 + float(np.linalg.norm(y)))


def grad_estimate(fn, y, tau: float, e, n: Optional[int] = None) -> np.ndarray:
    """Two-point estimate ``(n / tau) (fn(y + tau e) - fn(y)) e``."""
    if not tau > 0:
        raise InvalidParameter(f"smoothing radius must be positive, got {tau}")
    y = np.asarray(y, dtype=float)
    e = np.asarray(e, dtype=float)
    if n is None:
        n = len(e)
    return (n / tau) * (fn(y + tau * e) - fn(y)) * e
