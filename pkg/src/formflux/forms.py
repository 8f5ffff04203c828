"""Differential k-forms on R^n as coefficient fields.

A FormField carries one coefficient function per strictly increasing
multi-index.  Three backends:

  polynomial  sparse multivariate polynomials, exact exterior derivative
  analytic    vectorized callables, optionally with exact partials
  rough       vectorized callables with no smoothness; d is refused

An optional support domain extends the form by zero outside it.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import ArgumentError, UnsupportedOperationError
from .estimates import SeminormEstimate
from .exterior import Covector, _batch_det, sort_with_sign, sphere_quadrature

__all__ = [
    "Polynomial",
    "FormField",
    "Mollifier",
    "mollify",
    "LpEstimatorConfig",
    "lp_norm",
    "lp_sphere_norm",
    "form_to_json",
    "form_from_json",
]


class Polynomial:
    """Sparse multivariate polynomial: {exponent tuple: coefficient}."""

    def __init__(self, dimension, terms=None):
        self.dimension = int(dimension)
        clean = {}
        for powers, c in (terms or {}).items():
            powers = tuple(int(e) for e in powers)
            if len(powers) != self.dimension or any(e < 0 for e in powers):
                raise ArgumentError(f"bad exponent tuple {powers}")
            c = float(c)
            if c != 0.0:
                clean[powers] = clean.get(powers, 0.0) + c
        self.terms = clean

    @classmethod
    def constant(cls, dimension, value):
        return cls(dimension, {(0,) * dimension: value})

    @classmethod
    def coordinate(cls, dimension, j):
        """The polynomial x_j (1-based)."""
        powers = [0] * dimension
        powers[j - 1] = 1
        return cls(dimension, {tuple(powers): 1.0})

    def evaluate_batch(self, pts):
        pts = np.asarray(pts, dtype=float)
        out = np.zeros(pts.shape[0])
        for powers, c in self.terms.items():
            out += c * np.prod(pts ** np.asarray(powers), axis=1)
        return out

    def __call__(self, x):
        return float(self.evaluate_batch(np.asarray(x, dtype=float)[np.newaxis])[0])

    def partial(self, j):
        """Exact partial derivative with respect to x_j (1-based)."""
        out = {}
        for powers, c in self.terms.items():
            e = powers[j - 1]
            if e == 0:
                continue
            lowered = list(powers)
            lowered[j - 1] = e - 1
            out[tuple(lowered)] = out.get(tuple(lowered), 0.0) + c * e
        return Polynomial(self.dimension, out)

    def __add__(self, other):
        if isinstance(other, (int, float)):
            other = Polynomial.constant(self.dimension, other)
        out = dict(self.terms)
        for powers, c in other.terms.items():
            out[powers] = out.get(powers, 0.0) + c
        return Polynomial(self.dimension, out)

    def __mul__(self, other):
        if isinstance(other, Polynomial):
            if other.dimension != self.dimension:
                raise ArgumentError("polynomial dimension mismatch")
            out = {}
            for pa, ca in self.terms.items():
                for pb, cb in other.terms.items():
                    key = tuple(a + b for a, b in zip(pa, pb))
                    out[key] = out.get(key, 0.0) + ca * cb
            return Polynomial(self.dimension, out)
        return Polynomial(
            self.dimension, {p: c * float(other) for p, c in self.terms.items()}
        )

    __rmul__ = __mul__

    def compose_affine(self, base, edges):
        """The polynomial s -> self(base + s @ edges), in the s variables.

        edges has shape (k, n); the result lives in dimension k.  Exact
        (symbolic expansion), used as the reference for quadrature tests.
        """
        base = np.asarray(base, dtype=float)
        edges = np.atleast_2d(np.asarray(edges, dtype=float))
        k = edges.shape[0]
        lines = []
        for j in range(self.dimension):
            terms = {(0,) * k: float(base[j])}
            for i in range(k):
                key = tuple(1 if t == i else 0 for t in range(k))
                terms[key] = float(edges[i, j])
            lines.append(Polynomial(k, terms))
        out = Polynomial(k, {})
        for powers, c in self.terms.items():
            term = Polynomial.constant(k, c)
            for j, e in enumerate(powers):
                for _ in range(e):
                    term = term * lines[j]
            out = out + term
        return out

    def is_zero(self):
        return not self.terms

    def is_constant(self):
        return all(sum(p) == 0 for p in self.terms)

    def degree(self):
        return max((sum(p) for p in self.terms), default=0)

    def __repr__(self):
        return f"Polynomial({self.dimension}, {self.terms})"


def _normalize_components(dimension, degree, components):
    out = {}
    for idx, comp in (components or {}).items():
        idx = tuple(int(i) for i in idx)
        if len(idx) != degree or any(not 1 <= i <= dimension for i in idx):
            raise ArgumentError(f"bad index {idx} for degree {degree} in R^{dimension}")
        if any(a >= b for a, b in zip(idx, idx[1:])):
            raise ArgumentError(f"index {idx} must be strictly increasing")
        out[idx] = comp
    return out


class FormField:
    """A differential k-form with one coefficient function per index."""

    def __init__(self, dimension, degree, components, backend, support=None,
                 partials=None):
        if degree < 0:
            raise ArgumentError("degree must be >= 0")
        if degree > dimension and components:
            raise ArgumentError("forms of degree above n are identically zero")
        self.dimension = int(dimension)
        self.degree = int(degree)
        self.backend = backend
        if backend not in ("polynomial", "analytic", "rough"):
            raise ArgumentError(f"unknown backend {backend!r}")
        self.components = _normalize_components(dimension, degree, components)
        self.indices = sorted(self.components)
        self.support = support
        self.partials = partials  # {index: callable pts -> (N, n)} or None
        if support is not None and support.dimension != dimension:
            raise ArgumentError("support domain dimension mismatch")

    # -- constructors --------------------------------------------------------

    @classmethod
    def from_polynomials(cls, dimension, degree, components, support=None):
        comps = {}
        for idx, poly in components.items():
            if isinstance(poly, (int, float)):
                poly = Polynomial.constant(dimension, poly)
            elif isinstance(poly, dict):
                poly = Polynomial(dimension, poly)
            if poly.dimension != dimension:
                raise ArgumentError("polynomial dimension mismatch")
            comps[idx] = poly
        return cls(dimension, degree, comps, "polynomial", support=support)

    @classmethod
    def constant_form(cls, dimension, coefficients):
        """Constant-coefficient form from {index: value}."""
        degree = len(next(iter(coefficients)))
        return cls.from_polynomials(
            dimension,
            degree,
            {idx: Polynomial.constant(dimension, c) for idx, c in coefficients.items()},
        )

    @classmethod
    def from_callables(cls, dimension, degree, components, smooth=False,
                       support=None, partials=None):
        backend = "analytic" if smooth else "rough"
        if backend == "rough":
            partials = None
        return cls(dimension, degree, components, backend, support=support,
                   partials=partials)

    def with_support(self, domain):
        return FormField(self.dimension, self.degree, self.components,
                         self.backend, support=domain, partials=self.partials)

    # -- evaluation ----------------------------------------------------------

    def coefficients_batch(self, pts):
        """Coefficient values at pts (N, n), ordered by self.indices -> (N, m)."""
        pts = np.asarray(pts, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != self.dimension:
            raise ArgumentError(f"expected points of shape (N, {self.dimension})")
        out = np.empty((pts.shape[0], len(self.indices)))
        for col, idx in enumerate(self.indices):
            comp = self.components[idx]
            if isinstance(comp, Polynomial):
                out[:, col] = comp.evaluate_batch(pts)
            else:
                out[:, col] = np.asarray(comp(pts), dtype=float)
        if self.support is not None:
            out *= self.support.contains_batch(pts)[:, np.newaxis]
        return out

    def evaluate(self, x) -> Covector:
        """The covector omega_x."""
        x = np.asarray(x, dtype=float)
        coeffs = self.coefficients_batch(x[np.newaxis])[0]
        return Covector(
            self.dimension,
            self.degree,
            {idx: c for idx, c in zip(self.indices, coeffs)},
        )

    __call__ = evaluate

    def apply_batch(self, pts, vectors):
        """omega_{pts[i]}(vectors[i, 0], ..., vectors[i, k-1]) for each row i."""
        coeffs = self.coefficients_batch(pts)
        if self.degree == 0:
            return coeffs[:, 0] if self.indices else np.zeros(len(pts))
        vectors = np.asarray(vectors, dtype=float)
        out = np.zeros(len(pts))
        for col, idx in enumerate(self.indices):
            cols = [i - 1 for i in idx]
            out += coeffs[:, col] * _batch_det(vectors[:, :, cols])
        return out

    def euclidean_norm_batch(self, pts):
        coeffs = self.coefficients_batch(pts)
        if coeffs.shape[1] == 0:
            return np.zeros(len(pts))
        return np.sqrt(np.sum(coeffs**2, axis=1))

    def is_constant(self):
        return self.backend == "polynomial" and all(
            p.is_constant() for p in self.components.values()
        )

    def is_zero(self):
        return all(
            isinstance(p, Polynomial) and p.is_zero()
            for p in self.components.values()
        ) or not self.components

    # -- calculus ------------------------------------------------------------

    def has_derivative(self):
        return self.backend == "polynomial" or (
            self.backend == "analytic" and self.partials is not None
        )

    def exterior_derivative(self):
        """The (k+1)-form d(omega); exact for the polynomial backend."""
        if self.backend == "rough":
            raise UnsupportedOperationError(
                "exterior derivative of a rough form is not computed"
            )
        if self.degree >= self.dimension:
            return FormField(self.dimension, self.degree + 1, {}, "polynomial")
        if self.backend == "polynomial":
            out = {}
            for idx, poly in self.components.items():
                for j in range(1, self.dimension + 1):
                    dj = poly.partial(j)
                    if dj.is_zero():
                        continue
                    merged, sign = sort_with_sign((j,) + idx)
                    if sign == 0:
                        continue
                    cur = out.get(merged)
                    out[merged] = dj * sign if cur is None else cur + dj * sign
            out = {idx: p for idx, p in out.items() if not p.is_zero()}
            return FormField(self.dimension, self.degree + 1, out, "polynomial",
                             support=self.support)
        if self.partials is None:
            raise UnsupportedOperationError(
                "analytic form carries no derivative information"
            )
        # analytic with partials: assemble d from the stored gradients
        terms = {}  # index -> list of (source index, axis j, sign)
        for idx in self.indices:
            for j in range(1, self.dimension + 1):
                merged, sign = sort_with_sign((j,) + idx)
                if sign == 0:
                    continue
                terms.setdefault(merged, []).append((idx, j, sign))

        def make_component(contribs):
            def component(pts, contribs=contribs):
                acc = np.zeros(len(pts))
                for src, j, sign in contribs:
                    acc += sign * np.asarray(self.partials[src](pts))[:, j - 1]
                return acc

            return component

        comps = {idx: make_component(contribs) for idx, contribs in terms.items()}
        return FormField(self.dimension, self.degree + 1, comps, "analytic",
                         support=self.support)

    def pullback_affine(self, base, edges):
        """The scalar field s -> omega_{phi(s)}(edges) on the reference simplex.

        phi(s) = base + sum_i s_i * edges[i].  The returned callable accepts
        an (M, k) array of simplex coordinates.
        """
        base = np.asarray(base, dtype=float)
        edges = np.atleast_2d(np.asarray(edges, dtype=float))
        if edges.shape != (self.degree, self.dimension):
            raise ArgumentError(
                f"need {self.degree} edges of dimension {self.dimension}, "
                f"got shape {edges.shape}"
            )

        def field(s):
            s = np.atleast_2d(np.asarray(s, dtype=float))
            if s.shape[1] != self.degree:
                raise ArgumentError(
                    f"simplex coordinates must have {self.degree} columns"
                )
            pts = base + s @ edges
            vs = np.broadcast_to(edges, (len(pts),) + edges.shape)
            return self.apply_batch(pts, vs)

        return field

    def __repr__(self):
        return (
            f"FormField(n={self.dimension}, k={self.degree}, "
            f"backend={self.backend!r}, indices={self.indices})"
        )


def pullback_affine(omega, base, edges):
    return omega.pullback_affine(base, edges)


def exterior_derivative(omega):
    return omega.exterior_derivative()


# ---------------------------------------------------------------------------
# mollification


class Mollifier:
    """The standard bump exp(-1/(1 - |y/eps|^2)) on |y| < eps, unit mass.

    Quadrature nodes for convolutions are a tensor Gauss-Legendre grid on
    [-eps, eps]^n restricted to the open ball; the normalization is fixed at
    construction and verified against a refined grid to 1e-6.
    """

    def __init__(self, dimension, radius, nodes=48):
        if radius <= 0:
            raise ArgumentError("mollifier radius must be positive")
        self.dimension = int(dimension)
        self.radius = float(radius)
        self.nodes = int(nodes)
        self._ys, self._wraw = self._grid(self.nodes)
        raw = self._bump(self._ys)
        self._mass_raw = float(np.sum(self._wraw * raw))
        if self._mass_raw <= 0:
            raise ArgumentError("degenerate mollifier grid")
        # verify the normalized mass against a refined grid
        ys2, w2 = self._grid(2 * self.nodes)
        mass2 = float(np.sum(w2 * self._bump(ys2)))
        if abs(mass2 / self._mass_raw - 1.0) > 1e-6:
            raise ArgumentError(
                "mollifier quadrature has not converged; increase nodes"
            )
        self._weights = self._wraw * raw / self._mass_raw  # sum = 1

    def _grid(self, m):
        x, w = np.polynomial.legendre.leggauss(m)
        x = x * self.radius
        w = w * self.radius
        grids = np.meshgrid(*([x] * self.dimension), indexing="ij")
        ys = np.stack([g.reshape(-1) for g in grids], axis=1)
        ws = np.prod(
            np.stack(np.meshgrid(*([w] * self.dimension), indexing="ij"), axis=0),
            axis=0,
        ).reshape(-1)
        keep = np.linalg.norm(ys, axis=1) < self.radius
        return ys[keep], ws[keep]

    def _bump(self, ys):
        u = np.sum((ys / self.radius) ** 2, axis=1)
        out = np.zeros(len(ys))
        inside = u < 1.0
        out[inside] = np.exp(-1.0 / (1.0 - u[inside]))
        return out

    def profile(self, y):
        """The normalized kernel eta(y)."""
        y = np.atleast_2d(np.asarray(y, dtype=float))
        return self._bump(y) / self._mass_raw

    def with_nodes(self, nodes):
        return Mollifier(self.dimension, self.radius, nodes)

    def convolution_rule(self):
        """Nodes y_q and weights w_q with sum_q w_q = 1, so that
        (eta * f)(x) ~= sum_q w_q f(x - y_q)."""
        return self._ys, self._weights

    def gradient_rule(self):
        """Nodes and per-axis weights g_q so that
        (d_j eta * f)(x) ~= sum_q g_q[j] f(x - y_q)."""
        u = np.sum((self._ys / self.radius) ** 2, axis=1)
        factor = -2.0 / (self.radius**2 * (1.0 - u) ** 2)
        grad = self._weights[:, np.newaxis] * factor[:, np.newaxis] * self._ys
        return self._ys, grad


def mollify(omega, eta, quadrature_nodes=None):
    """The convolved form (eta * omega), coefficient-wise.

    Returns an analytic-backend field with exact-to-quadrature partials
    (derivatives hit the kernel), so the result always supports
    exterior_derivative, even when omega is rough.
    """
    if eta.dimension != omega.dimension:
        raise ArgumentError("mollifier and form dimension mismatch")
    if quadrature_nodes is not None and quadrature_nodes != eta.nodes:
        eta = eta.with_nodes(quadrature_nodes)
    ys, ws = eta.convolution_rule()
    _, grad_ws = eta.gradient_rule()

    def conv(component, weights):
        def value(pts, component=component, weights=weights):
            pts = np.asarray(pts, dtype=float)
            out = np.zeros(len(pts))
            chunk = max(1, (1 << 22) // max(1, len(ys)))
            for lo in range(0, len(pts), chunk):
                shifted = (
                    pts[lo : lo + chunk, np.newaxis, :] - ys[np.newaxis, :, :]
                )
                flat = shifted.reshape(-1, omega.dimension)
                vals = _component_values(omega, component, flat).reshape(
                    -1, len(ys)
                )
                out[lo : lo + chunk] = vals @ weights
            return out

        return value

    comps = {}
    partials = {}
    for idx in omega.indices:
        comps[idx] = conv(idx, ws)

        def grad(pts, idx=idx):
            pts = np.asarray(pts, dtype=float)
            out = np.zeros((len(pts), omega.dimension))
            chunk = max(1, (1 << 22) // max(1, len(ys)))
            for lo in range(0, len(pts), chunk):
                shifted = (
                    pts[lo : lo + chunk, np.newaxis, :] - ys[np.newaxis, :, :]
                )
                flat = shifted.reshape(-1, omega.dimension)
                vals = _component_values(omega, idx, flat).reshape(-1, len(ys))
                out[lo : lo + chunk] = vals @ grad_ws
            return out

        partials[idx] = grad
    return FormField(omega.dimension, omega.degree, comps, "analytic",
                     partials=partials)


def _component_values(omega, idx, pts):
    comp = omega.components[idx]
    if isinstance(comp, Polynomial):
        vals = comp.evaluate_batch(pts)
    else:
        vals = np.asarray(comp(pts), dtype=float)
    if omega.support is not None:
        vals = vals * omega.support.contains_batch(pts)
    return vals


# ---------------------------------------------------------------------------
# L^p norms over a domain


class LpEstimatorConfig:
    """Monte Carlo settings for the spatial integral."""

    def __init__(self, samples=20000, seed=0, sphere_nodes=64):
        if samples < 2:
            raise ArgumentError("need at least 2 samples")
        self.samples = int(samples)
        self.seed = int(seed)
        self.sphere_nodes = int(sphere_nodes)


def _power_mean_estimate(values, p, volume, extra_rel_error=0.0):
    mean = float(np.mean(values))
    stderr = float(np.std(values, ddof=1)) / math.sqrt(len(values))
    power = volume * mean
    power_err = volume * stderr + abs(power) * extra_rel_error * p
    if power <= 0.0:
        return 0.0, 0.0, max(power, 0.0), power_err
    value = power ** (1.0 / p)
    err = power_err * value / (p * power)
    return value, err, power, power_err


def lp_norm(omega, domain, p, config=None):
    """(int_Omega |omega_x|^p dx)^{1/p} with |.| the coefficient norm."""
    if p < 1:
        raise ArgumentError("p must be >= 1")
    config = config or LpEstimatorConfig()
    pts = domain.sample_uniform(config.samples, seed=config.seed)
    norms = omega.euclidean_norm_batch(pts)
    value, err, power, power_err = _power_mean_estimate(
        norms**p, p, domain.volume()
    )
    return SeminormEstimate(
        value=value,
        stderr=err,
        power_value=power,
        power_stderr=power_err,
        samples=config.samples,
        acceptance_ratio=1.0,
        config={"kind": "lp_norm", "p": p, "samples": config.samples,
                "seed": config.seed},
    )


def lp_sphere_norm(omega, domain, p, config=None):
    """(int_Omega |omega_x|_{S,p}^p dx)^{1/p}: sphere norm composed with L^p.

    The sphere integral reuses one fixed quadrature rule for every sample
    point, so the pointwise power integral is a matrix product against the
    precomputed basis determinants.
    """
    if p < 1:
        raise ArgumentError("p must be >= 1")
    config = config or LpEstimatorConfig()
    n, k = omega.dimension, omega.degree
    pts = domain.sample_uniform(config.samples, seed=config.seed)
    if k == 0:
        vals = np.abs(omega.coefficients_batch(pts)[:, 0]) ** p
        rel_sphere = 0.0
    else:
        vals, rel_sphere = _sphere_power_batch(omega, pts, p,
                                               config.sphere_nodes)
    value, err, power, power_err = _power_mean_estimate(
        vals, p, domain.volume(), extra_rel_error=rel_sphere
    )
    return SeminormEstimate(
        value=value,
        stderr=err,
        power_value=power,
        power_stderr=power_err,
        samples=config.samples,
        acceptance_ratio=1.0,
        config={"kind": "lp_sphere_norm", "p": p, "samples": config.samples,
                "seed": config.seed, "sphere_nodes": config.sphere_nodes},
    )


def _sphere_power_batch(omega, pts, p, nodes):
    """int |omega_x(v_1..v_k)|^p over the sphere product, for each x in pts.

    Returns the per-point power integrals and a relative quadrature error
    bound taken from a half-resolution rule.
    """
    n, k = omega.dimension, omega.degree
    if n > 3:
        raise UnsupportedOperationError(
            "sphere-product quadrature is limited to n <= 3"
        )
    if not omega.indices:
        return np.zeros(len(pts)), 0.0

    def run(m):
        sp, sw = sphere_quadrature(n, m)
        npts = len(sp)
        combos = np.stack(
            np.unravel_index(np.arange(npts**k), (npts,) * k), axis=1
        )
        vs = sp[combos]  # (C, k, n)
        w = np.prod(sw[combos], axis=1)
        design = np.stack(
            [
                _batch_det(vs[:, :, [i - 1 for i in idx]])
                for idx in omega.indices
            ],
            axis=1,
        )  # (C, m_indices)
        coeffs = omega.coefficients_batch(pts)  # (N, m_indices)
        out = np.empty(len(pts))
        chunk = max(1, (1 << 24) // max(1, len(vs)))
        for lo in range(0, len(pts), chunk):
            block = coeffs[lo : lo + chunk] @ design.T  # (chunk, C)
            out[lo : lo + chunk] = np.abs(block) ** p @ w
        return out

    full = run(nodes)
    half = run(max(2, nodes // 2))
    denom = np.maximum(np.abs(full), 1e-300)
    rel = float(np.max(np.abs(full - half) / denom))
    if p != 2.0 * round(p / 2.0):
        rel *= 10.0
    return full, rel


# ---------------------------------------------------------------------------
# JSON serialization (polynomial backend)


def form_to_json(omega):
    if omega.backend != "polynomial":
        raise UnsupportedOperationError("only polynomial forms serialize to JSON")
    terms = []
    for idx in omega.indices:
        poly = omega.components[idx]
        terms.append(
            {
                "index": list(idx),
                "monomials": [
                    {"powers": list(powers), "coeff": c}
                    for powers, c in sorted(poly.terms.items())
                ],
            }
        )
    doc = {"n": omega.dimension, "k": omega.degree, "terms": terms}
    if omega.support is not None:
        doc["support"] = omega.support.to_json()
    return doc


def form_from_json(doc):
    from .domains import domain_from_json

    n = int(doc["n"])
    k = int(doc["k"])
    comps = {}
    for term in doc.get("terms", []):
        idx = tuple(int(i) for i in term["index"])
        poly = Polynomial(
            n,
            {
                tuple(int(e) for e in mono["powers"]): float(mono["coeff"])
                for mono in term.get("monomials", [])
            },
        )
        if idx in comps:
            poly = comps[idx] + poly
        comps[idx] = poly
    support = doc.get("support")
    if support is not None:
        support = domain_from_json(support)
    return FormField.from_polynomials(n, k, comps, support=support)
