"""Integration over affine k-simplices.

The reference simplex is Delta_k = {s in R^k : s_i >= 0, sum s_i <= 1} with
Lebesgue measure m_k(Delta_k) = 1/k!.  A simplex in R^n is the ordered tuple
(x_0, ..., x_k); quadrature happens on Delta_k through the affine chart
phi(s) = x_0 + sum_i s_i (x_i - x_0).

Three rules: Grundmann-Moller (odd degree, default 7) for smooth
integrands, jittered-stratified nodes for rough segment integrands, and a
sorted-uniform-spacings Monte Carlo rule for rough higher orders.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ArgumentError
from .exterior import _batch_det
from .forms import Polynomial

__all__ = [
    "SimplexTuple",
    "SimplexQuadratureRule",
    "grundmann_moller_rule",
    "monte_carlo_rule",
    "stratified_segment_rule",
    "default_rule",
    "gram_jacobian",
    "integrate_form",
    "integrate_scalar",
    "integrate_polynomial_form_exact",
    "reference_monomial_integral",
]


class SimplexTuple:
    """An ordered tuple of k+1 points in R^n; orientation is listed order.

    Degenerate (affinely dependent) tuples are legal; their Gram Jacobian
    is zero.
    """

    def __init__(self, points):
        pts = np.asarray(points, dtype=float)
        if pts.ndim != 2:
            raise ArgumentError("simplex points must form a (k+1, n) array")
        if pts.shape[0] - 1 > pts.shape[1]:
            raise ArgumentError("need k <= n")
        self.points = pts

    @property
    def order(self):
        return self.points.shape[0] - 1

    @property
    def dimension(self):
        return self.points.shape[1]

    def edges(self):
        return self.points[1:] - self.points[0]

    def __repr__(self):
        return f"SimplexTuple({self.points.tolist()})"


def _as_points(simplex):
    if isinstance(simplex, SimplexTuple):
        return simplex.points
    return SimplexTuple(simplex).points


@dataclass(frozen=True)
class SimplexQuadratureRule:
    """Nodes and weights on the reference simplex Delta_k.

    Weights sum to m_k(Delta_k) = 1/k!.
    """

    kind: str
    order: int
    points: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.points.shape != (len(self.weights), self.order):
            raise ArgumentError("rule nodes and weights are inconsistent")


def _compositions(total, parts):
    """All tuples of `parts` nonnegative integers summing to `total`."""
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def grundmann_moller_rule(k, degree=7):
    """The Grundmann-Moller rule of odd degree on Delta_k.

    Exact for polynomials of total degree <= degree; weights (which mix
    signs) sum to 1/k!.
    """
    if k < 0:
        raise ArgumentError("simplex order must be >= 0")
    if k == 0:
        return SimplexQuadratureRule(
            "grundmann-moller", 0, np.zeros((1, 0)), np.array([1.0])
        )
    if degree < 1 or degree % 2 == 0:
        raise ArgumentError("grundmann-moller degree must be odd")
    s = (degree - 1) // 2
    d = degree
    pts = []
    wts = []
    for i in range(s + 1):
        coef = (
            (-1.0) ** i
            * 2.0 ** (-2 * s)
            * float(d + k - 2 * i) ** d
            / (math.factorial(i) * math.factorial(d + k - i))
        )
        denom = float(d + k - 2 * i)
        for beta in _compositions(s - i, k + 1):
            bary = (2.0 * np.asarray(beta, dtype=float) + 1.0) / denom
            pts.append(bary[1:])
            wts.append(coef)
    return SimplexQuadratureRule(
        "grundmann-moller", k, np.asarray(pts), np.asarray(wts)
    )


def monte_carlo_rule(k, samples=1024, seed=0):
    """Uniform nodes on Delta_k by sorted-uniform spacings, equal weights."""
    if k < 0:
        raise ArgumentError("simplex order must be >= 0")
    if k == 0:
        return SimplexQuadratureRule(
            "monte-carlo", 0, np.zeros((1, 0)), np.array([1.0])
        )
    if samples < 1:
        raise ArgumentError("need at least one sample")
    rng = (
        seed
        if isinstance(seed, np.random.Generator)
        else np.random.default_rng(np.random.SeedSequence(seed))
    )
    u = np.sort(rng.random((samples, k)), axis=1)
    pts = np.diff(u, axis=1, prepend=0.0)
    wts = np.full(samples, 1.0 / (math.factorial(k) * samples))
    return SimplexQuadratureRule("monte-carlo", k, pts, wts)


def stratified_segment_rule(samples=1024, seed=0):
    """Jittered equispaced nodes on [0, 1], one per cell, equal weights.

    For an integrand that is smooth apart from finitely many jumps the
    error is at most (number of jumps) * sup|f| / samples with probability
    one, since only the cells containing a jump misestimate their piece.
    That hard bound (against the soft 1/sqrt(samples) of iid sampling) is
    what lets the coboundary snap guard separate quadrature noise from
    genuine jump signal.
    """
    if samples < 1:
        raise ArgumentError("need at least one sample")
    rng = (
        seed
        if isinstance(seed, np.random.Generator)
        else np.random.default_rng(np.random.SeedSequence(seed))
    )
    pts = ((np.arange(samples) + rng.random(samples)) / samples)[:, np.newaxis]
    wts = np.full(samples, 1.0 / samples)
    return SimplexQuadratureRule("stratified", 1, pts, wts)


def default_rule(k, smooth=True):
    """Grundmann-Moller degree 7 for smooth integrands; stratified nodes
    for rough segments, plain MC 1024 for rough higher orders."""
    if smooth:
        return grundmann_moller_rule(k, degree=7)
    if k == 1:
        return stratified_segment_rule(samples=1024)
    return monte_carlo_rule(k, samples=1024)


def gram_jacobian(simplex):
    """sqrt(det G) with G_ij = <x_i - x_0, x_j - x_0>; 0 when degenerate."""
    pts = _as_points(simplex)
    if pts.shape[0] == 1:
        return 1.0
    e = pts[1:] - pts[0]
    g = e @ e.T
    det = float(np.linalg.det(g))
    return math.sqrt(max(det, 0.0))


def integrate_form(omega, simplex, rule=None):
    """The oriented integral of the k-form omega over the simplex.

    Pulls back through the affine chart: sum_q w_q omega_{phi(s_q)}(edges).
    Odd permutations of the corners negate the value.
    """
    pts = _as_points(simplex)
    k = pts.shape[0] - 1
    if omega.degree != k:
        raise ArgumentError(
            f"form degree {omega.degree} does not match simplex order {k}"
        )
    if omega.dimension != pts.shape[1]:
        raise ArgumentError("form and simplex dimension mismatch")
    if rule is None:
        rule = default_rule(k, smooth=omega.backend != "rough")
    if rule.order != k:
        raise ArgumentError("rule order does not match simplex order")
    base = pts[0]
    edges = pts[1:] - pts[0]
    positions = base + rule.points @ edges
    if k == 0:
        vals = omega.coefficients_batch(positions)[:, 0] if omega.indices else (
            np.zeros(1)
        )
        return float(np.sum(rule.weights * vals))
    coeffs = omega.coefficients_batch(positions)  # (Q, m)
    total = np.zeros(len(positions))
    for col, idx in enumerate(omega.indices):
        cols = [i - 1 for i in idx]
        minor = edges[:, cols][np.newaxis, :, :]
        total += coeffs[:, col] * _batch_det(minor)[0]
    return float(np.sum(rule.weights * total))


def integrate_scalar(rho, simplex, rule=None):
    """The unsigned H^k integral of a scalar field over the simplex.

    rho is a vectorized callable on positions, shape (Q, n) -> (Q,).
    """
    pts = _as_points(simplex)
    k = pts.shape[0] - 1
    if rule is None:
        rule = default_rule(k, smooth=True)
    if rule.order != k:
        raise ArgumentError("rule order does not match simplex order")
    base = pts[0]
    edges = pts[1:] - pts[0]
    positions = base + rule.points @ edges
    vals = np.asarray(rho(positions), dtype=float)
    return gram_jacobian(pts) * float(np.sum(rule.weights * vals))


def reference_monomial_integral(alpha):
    """Exact integral of prod s_i^{alpha_i} over Delta_k:
    prod(alpha_i!) / (|alpha| + k)!."""
    alpha = tuple(int(a) for a in alpha)
    k = len(alpha)
    num = 1
    for a in alpha:
        num *= math.factorial(a)
    return num / math.factorial(sum(alpha) + k)


def integrate_polynomial_form_exact(omega, simplex):
    """Symbolic reference for integrate_form on polynomial backends.

    Expands the pullback coefficients in the simplex coordinates and
    integrates monomial by monomial.
    """
    if omega.backend != "polynomial":
        raise ArgumentError("exact integration needs a polynomial backend")
    pts = _as_points(simplex)
    k = pts.shape[0] - 1
    if omega.degree != k:
        raise ArgumentError("form degree does not match simplex order")
    base = pts[0]
    edges = pts[1:] - pts[0]
    total = 0.0
    for idx in omega.indices:
        poly = omega.components[idx]
        if not isinstance(poly, Polynomial):
            raise ArgumentError("exact integration needs polynomial coefficients")
        if k == 0:
            total += sum(
                c * float(np.prod(base ** np.asarray(p)))
                for p, c in poly.terms.items()
            )
            continue
        cols = [i - 1 for i in idx]
        det = float(_batch_det(edges[:, cols][np.newaxis, :, :])[0])
        if det == 0.0:
            continue
        pulled = poly.compose_affine(base, edges)
        total += det * sum(
            c * reference_monomial_integral(p) for p, c in pulled.terms.items()
        )
    return total
