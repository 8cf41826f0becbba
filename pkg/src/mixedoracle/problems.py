"""Synthetic test problems with known optima.

Each generator returns a :class:`MixedOracleProblem` whose declared constants
are exact for the instance, together with a :class:`GroundTruth` that
evaluates ``g(x)`` and ``h(y)`` independently of the solvers.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.optimize import lsq_linear, minimize
from scipy.special import logsumexp, softmax

from .core import (FeasibleSet, InvalidParameter, MixedOracleProblem, Mode,
                   SmoothnessConstants)

FAMILIES = ("QuadMinMin", "QuadSaddle", "LogSumExpSaddle")
VERTEX_LIMIT = 12  # exact vertex enumeration up to this many box dimensions


class InvalidSpec(InvalidParameter):
    pass


@dataclass(frozen=True)
class ProblemSpec:
    family: str
    n_x: int
    n_y: int
    mu_x: float = 1.0
    mu_y: float = 1.0
    L_xx: float = 4.0
    L_yy: float = 4.0
    L_xy: float = 0.5
    box: float = 1.0  # X = [-box, box]^n_x
    seed: int = 0
    name: str = ""

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise InvalidSpec(f"unknown family {self.family!r}; expected one of {FAMILIES}")
        if self.n_x < 1 or self.n_y < 1:
            raise InvalidSpec("n_x and n_y must be positive")
        if not (0 < self.mu_x <= self.L_xx and 0 < self.mu_y <= self.L_yy):
            raise InvalidSpec("need 0 < mu <= L in both blocks")
        if self.L_xy < 0 or not self.box > 0:
            raise InvalidSpec("need L_xy >= 0 and box > 0")

    @property
    def label(self) -> str:
        return self.name or f"{self.family}-{self.n_x}x{self.n_y}-s{self.seed}"


@dataclass
class GroundTruth:
    x_star: np.ndarray
    y_star: np.ndarray
    value: float  # min over X of g
    g: Callable[[np.ndarray], float]
    h: Optional[Callable[[np.ndarray], float]] = None  # min over X of f(., y), min-max only

    def outer_gap(self, x) -> float:
        return self.g(np.asarray(x, dtype=float)) - self.value

    def dual_gap(self, y) -> float:
        return self.value - self.h(np.asarray(y, dtype=float))


def random_orthogonal(n: int, rng: np.random.Generator) -> np.ndarray:
    Q, R = np.linalg.qr(rng.standard_normal((n, n)))
    return Q * np.sign(np.diag(R))


def spectrum(n: int, lo: float, hi: float) -> np.ndarray:
    if n == 1:
        return np.array([hi])
    return np.linspace(lo, hi, n)


def sym_with_spectrum(n: int, lo: float, hi: float, rng) -> np.ndarray:
    Q = random_orthogonal(n, rng)
    M = (Q * spectrum(n, lo, hi)) @ Q.T
    return (M + M.T) / 2


def coupling(n_x: int, n_y: int, norm: float, rng) -> np.ndarray:
    k = min(n_x, n_y)
    s = rng.uniform(0, norm, k)
    s[0] = norm
    U = random_orthogonal(n_x, rng)[:, :k]
    V = random_orthogonal(n_y, rng)[:, :k]
    return (U * s) @ V.T


def box_qp(A, c, lower, upper) -> np.ndarray:
    """Minimize ``1/2 x^T A x + c^T x`` over a box (``A`` positive definite)."""
    w, V = np.linalg.eigh(A)
    S = (V * np.sqrt(w)) @ V.T
    t = -np.linalg.solve(S, c)
    return lsq_linear(S, t, bounds=(lower, upper), method="bvls", tol=1e-14).x


def box_vertices(lower, upper):
    for bits in itertools.product((0, 1), repeat=len(lower)):
        yield np.where(np.array(bits, dtype=bool), upper, lower)


def max_convex_quadratic(P, q, lower, upper, const=0.0) -> float:
    """Max over the box of the convex ``1/2 x^T P x + q^T x + const``.

    Exact by vertex enumeration in low dimension, otherwise an upper bound.
    """
    if len(lower) <= VERTEX_LIMIT:
        return max(0.5 * v @ P @ v + q @ v for v in box_vertices(lower, upper)) + const
    r = float(np.linalg.norm(np.maximum(np.abs(lower), np.abs(upper))))
    return 0.5 * float(np.linalg.eigvalsh(P)[-1]) * r * r + float(np.linalg.norm(q)) * r + const


def farthest_sq(x, lower, upper) -> float:
    return float(np.sum(np.maximum(np.abs(x - lower), np.abs(upper - x)) ** 2))


def _quadratic(spec: ProblemSpec, rng, sign_y: float):
    A = sym_with_spectrum(spec.n_x, spec.mu_x, spec.L_xx, rng)
    C = sym_with_spectrum(spec.n_y, spec.mu_y, spec.L_yy, rng)
    B = coupling(spec.n_x, spec.n_y, spec.L_xy, rng)
    x_star = rng.uniform(-0.5, 0.5, spec.n_x) * spec.box
    y_star = rng.standard_normal(spec.n_y) / math.sqrt(spec.n_y)
    a = -A @ x_star - B @ y_star
    # stationarity in y: B^T x + sign_y C y + b = 0 with sign_y = -1 (max) or +1 (min)
    b = -B.T @ x_star - sign_y * (C @ y_star)
    return A, B, C, a, b, x_star, y_star


def _quad_problem(spec: ProblemSpec, rng):
    saddle = spec.family == "QuadSaddle"
    sy = -1.0 if saddle else 1.0
    A, B, C, a, b, x_star, y_star = _quadratic(spec, rng, sy)
    Cinv = np.linalg.inv(C)
    G = B @ Cinv @ B.T
    Hg = A + G if saddle else A - G
    if not saddle and np.linalg.eigvalsh(Hg)[0] < -1e-12:
        raise InvalidSpec("min-min instance is not jointly convex: need L_xy^2 <= mu_x mu_y")
    lo, hi = -spec.box * np.ones(spec.n_x), spec.box * np.ones(spec.n_x)

    def f(x, y):
        return float(0.5 * x @ A @ x + x @ B @ y + sy * 0.5 * y @ C @ y + a @ x + b @ y)

    def grad_x(x, y):
        return A @ x + B @ y + a

    half_C = 0.5 * sy * C

    def f_partial(x):
        x = np.asarray(x, dtype=float)
        cx = float(0.5 * x @ A @ x + a @ x)
        u = B.T @ x + b

        def fy(y):
            return cx + float(y @ (u + half_C @ y))
        return fy

    q0 = B @ Cinv @ b
    c0 = 0.5 * b @ Cinv @ b

    def g(x):
        x = np.asarray(x, dtype=float)
        u = B.T @ x + b
        return float(0.5 * x @ A @ x + a @ x - sy * 0.5 * u @ Cinv @ u)

    value = g(x_star)
    # residual of y = 0 for the inner problem, identical in both modes
    D = max(0.0, max_convex_quadratic(G, q0, lo, hi, c0))
    B_bound = 0.5 * float(np.linalg.eigvalsh(Hg)[-1]) * farthest_sq(x_star, lo, hi)
    X = FeasibleSet.box(lo, hi, B_bound=max(B_bound, 1e-12))
    consts = SmoothnessConstants(spec.mu_x, spec.mu_y, spec.L_xx, spec.L_xy, spec.L_yy, float(D))
    mode = Mode.MIN_MAX if saddle else Mode.MIN_MIN
    prob = MixedOracleProblem(spec.n_x, spec.n_y, f, grad_x, mode, consts, X, f_partial)

    h = None
    if saddle:
        def h(y):
            y = np.asarray(y, dtype=float)
            xh = box_qp(A, B @ y + a, lo, hi)
            return f(xh, y)

    truth = GroundTruth(x_star, y_star, value, g, h)
    truth.matrices = dict(A=A, B=B, C=C, a=a, b=b)
    return prob, truth


def _lse_problem(spec: ProblemSpec, rng):
    """``1/2 x^T A x + a^T x + x^T B y + b^T y - 1/2 y^T C y - s lse(y)``."""
    s = (spec.L_yy - spec.mu_y) / 2
    A = sym_with_spectrum(spec.n_x, spec.mu_x, spec.L_xx, rng)
    C = sym_with_spectrum(spec.n_y, spec.mu_y, spec.L_yy - s, rng)
    B = coupling(spec.n_x, spec.n_y, spec.L_xy, rng)
    a = rng.standard_normal(spec.n_x) * 0.5
    b = rng.standard_normal(spec.n_y) * 0.5
    lo, hi = -spec.box * np.ones(spec.n_x), spec.box * np.ones(spec.n_x)

    def f(x, y):
        return float(0.5 * x @ A @ x + a @ x + x @ B @ y + b @ y - 0.5 * y @ C @ y
                     - s * logsumexp(y))

    def grad_x(x, y):
        return A @ x + B @ y + a

    def y_best(x, y0=None):
        u = B.T @ x + b
        y = np.zeros(spec.n_y) if y0 is None else y0.copy()
        for _ in range(100):
            p = softmax(y)
            gr = u - C @ y - s * p
            Hs = C + s * (np.diag(p) - np.outer(p, p))
            step = np.linalg.solve(Hs, gr)
            y = y + step
            if np.linalg.norm(step) < 1e-14 * (1 + np.linalg.norm(y)):
                break
        return y

    def g(x):
        x = np.asarray(x, dtype=float)
        return f(x, y_best(x))

    def g_and_grad(x):
        y = y_best(x)
        return f(x, y), grad_x(x, y)

    res = minimize(g_and_grad, np.zeros(spec.n_x), jac=True, method="L-BFGS-B",
                   bounds=list(zip(lo, hi)), options=dict(ftol=1e-16, gtol=1e-13, maxiter=5000))
    x_star = res.x
    y_star = y_best(x_star)
    value = g(x_star)

    def h(y):
        y = np.asarray(y, dtype=float)
        return f(box_qp(A, B @ y + a, lo, hi), y)

    # g(x) - f(x, 0) <= ||B^T x + b - s/n 1||^2 / (2 mu_y) by Jensen on lse
    shift = b - s / spec.n_y
    D = max_convex_quadratic(B @ B.T / spec.mu_y, B @ shift / spec.mu_y, lo, hi,
                             shift @ shift / (2 * spec.mu_y))
    Lg = float(np.linalg.eigvalsh(A)[-1]) + spec.L_xy ** 2 / spec.mu_y
    _, gr = g_and_grad(x_star)
    far = farthest_sq(x_star, lo, hi)
    B_bound = float(np.linalg.norm(gr)) * math.sqrt(far) + 0.5 * Lg * far
    X = FeasibleSet.box(lo, hi, B_bound=B_bound)
    consts = SmoothnessConstants(spec.mu_x, spec.mu_y, spec.L_xx, spec.L_xy, spec.L_yy, float(max(D, 0.0)))
    prob = MixedOracleProblem(spec.n_x, spec.n_y, f, grad_x, Mode.MIN_MAX, consts, X)
    truth = GroundTruth(x_star, y_star, value, g, h)
    truth.matrices = dict(A=A, B=B, C=C, a=a, b=b, s=s)
    return prob, truth


def generate_problem(spec: ProblemSpec, rng: Optional[np.random.Generator] = None):
    """Return ``(problem, truth)``; ``rng`` defaults to one seeded by ``spec.seed``."""
    rng = np.random.default_rng(spec.seed) if rng is None else rng
    if spec.family == "LogSumExpSaddle":
        return _lse_problem(spec, rng)
    return _quad_problem(spec, rng)
