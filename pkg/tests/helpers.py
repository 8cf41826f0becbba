"""Independent oracles shared by the unit and acceptance tests."""

import itertools
import math

import numpy as np

from mixedoracle.core import FeasibleSet
from mixedoracle.cutting_plane import DeltaSubgradient, Polytope


def random_polytope(n, m, rng):
    """Bounded polytope ``{A x >= b}`` with the origin strictly inside.

    The first ``2n`` rows are the box ``[-1, 1]^n``; the rest are random
    cuts whose slack at the origin lies in ``[0.05, 1]``.
    """
    A = [np.eye(n), -np.eye(n)]
    b = [-np.ones(n), -np.ones(n)]
    k = m - 2 * n
    if k > 0:
        W = rng.standard_normal((k, n))
        W /= np.linalg.norm(W, axis=1, keepdims=True)
        A.append(W)
        b.append(-rng.uniform(0.05, 1.0, k))
    return Polytope(np.vstack(A), np.concatenate(b))


def random_interior_point(poly, rng):
    """Shrink a random box point towards the origin until it is interior."""
    x = rng.uniform(-1, 1, poly.n)
    while not np.all(poly.slacks(x) > 1e-6):
        x *= 0.5
    return x


def barrier_by_slogdet(poly, x):
    """``1/2 ln det(sum a_i a_i^T / s_i^2)`` assembled row by row."""
    s = poly.A @ x - poly.b
    H = sum(np.outer(a, a) / si ** 2 for a, si in zip(poly.A, s))
    sign, logdet = np.linalg.slogdet(H)
    assert sign > 0
    return 0.5 * logdet


def leverages_by_definition(poly, x):
    s = poly.A @ x - poly.b
    H = sum(np.outer(a, a) / si ** 2 for a, si in zip(poly.A, s))
    Hinv = np.linalg.inv(H)
    return np.array([a @ Hinv @ a / si ** 2 for a, si in zip(poly.A, s)])


class BoxQuadratic:
    """``g(x) = 1/2 (x - x0)^T Q (x - x0)`` over a box, ``Q`` diagonal.

    The constrained minimizer is the clip of ``x0``, so the optimal value
    is exact. With ``delta > 0`` the gradient is taken at a point at
    distance ``sqrt(2 delta / max Q)`` from the query, which makes ``-c`` a
    ``delta``-subgradient while the reported value stays exact.
    """

    def __init__(self, q_diag, x0, lower, upper, delta=0.0, rng=None):
        self.q = np.asarray(q_diag, dtype=float)
        self.x0 = np.asarray(x0, dtype=float)
        self.lower = np.asarray(lower, dtype=float)
        self.upper = np.asarray(upper, dtype=float)
        self.delta = delta
        self.rng = rng if rng is not None else np.random.default_rng(0)
        self.x_star = np.clip(self.x0, self.lower, self.upper)
        self.value_star = self.g(self.x_star)
        verts = itertools.product(*zip(self.lower, self.upper))
        self.B = max(self.g(np.array(v)) for v in verts) - self.value_star
        self.set = FeasibleSet.box(self.lower, self.upper, B_bound=self.B)
        self.calls = 0

    def g(self, x):
        d = x - self.x0
        return 0.5 * float(d @ (self.q * d))

    def __call__(self, z):
        self.calls += 1
        zp = z
        if self.delta > 0:
            u = self.rng.standard_normal(len(z))
            r = math.sqrt(2 * self.delta / self.q.max())
            zp = z + r * u / np.linalg.norm(u)
        return DeltaSubgradient(-(self.q * (zp - self.x0)), self.delta, True, self.g(z))


def regularized_value(m, x, H1=0.0, z=None):
    """``max_y f(x, y) - H1/2 ||y - z||^2`` for the quadratic saddle family."""
    A, B, C, a, b = m["A"], m["B"], m["C"], m["a"], m["b"]
    z = np.zeros(len(b)) if z is None else z
    u = B.T @ x + b + H1 * z
    K = C + H1 * np.eye(len(b))
    return float(0.5 * x @ A @ x + a @ x + 0.5 * u @ np.linalg.solve(K, u) - 0.5 * H1 * z @ z)


def regularized_argmax(m, x, H1=0.0, z=None):
    B, C, b = m["B"], m["C"], m["b"]
    z = np.zeros(len(b)) if z is None else z
    return np.linalg.solve(C + H1 * np.eye(len(b)), B.T @ x + b + H1 * z)


def box_grid(n, k, box=1.0):
    pts = np.linspace(-box, box, k)
    return [np.array(p) for p in itertools.product(pts, repeat=n)]


def subgradient_slack(g, x_query, c, delta, points):
    """``min_x g(x) - g(x') - <-c, x - x'> + delta``; non-negative when ``-c`` is valid."""
    gq = g(x_query)
    return min(g(x) - gq + float(c @ (x - x_query)) + delta for x in points)


def subproblem_values(m, H1, z, y_hat, lower, upper):
    """Optimal and achieved values of ``y -> min_X f(x, y) - H1/2 ||y - z||^2``.

    The optimum is ``min_X max_y`` of the same function, which has a closed
    form in ``y``; both minimizations over the box are box QPs.
    """
    from mixedoracle.problems import box_qp
    A, B, C, a, b = m["A"], m["B"], m["C"], m["a"], m["b"]
    K = C + H1 * np.eye(len(b))
    w = b + H1 * z
    P = A + B @ np.linalg.solve(K, B.T)
    q = a + B @ np.linalg.solve(K, w)
    x = box_qp(P, q, lower, upper)
    best = regularized_value(m, x, H1, z)

    def f(xx, yy):
        return float(0.5 * xx @ A @ xx + xx @ B @ yy - 0.5 * yy @ C @ yy + a @ xx + b @ yy)
    xh = box_qp(A, B @ y_hat + a, lower, upper)
    reached = f(xh, y_hat) - 0.5 * H1 * float((y_hat - z) @ (y_hat - z))
    return best, reached


# one summary line per acceptance criterion, printed by conftest
ACCEPTANCE_LINES = []


def report_criterion(number, title, ok, elapsed, limit, details):
    within = elapsed < limit
    status = "PASS" if ok and within else "FAIL"
    timing = f"{elapsed:.1f}s < {limit:g}s" if within else f"{elapsed:.1f}s exceeds {limit:g}s"
    ACCEPTANCE_LINES.append(f"criterion {number} {status}: {title} [{timing}] {details}")
    return ok and within
