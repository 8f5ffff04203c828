"""Multifunctions on tuples of points and the Alexander-Spanier calculus.

A multifunction of degree k maps (k+1)-tuples of points to reals.  The
differential inserts alternating-sign face omissions:

    dF(x_0, ..., x_{k+1}) = sum_i (-1)^i F(..., omit x_i, ...).

I_omega integrates a k-form over the simplex spanned by the tuple; its
differential dI_omega is the discrete boundary pairing that the singular
seminorms probe.

Seminorm estimators evaluate tuples of the shape x_i = x_0 + r_i v_i where
the radii r_i shrink to the float floor as theta -> 1.  Every multifunction
therefore exposes evaluate_scaled_batch, which returns F(tuple) divided by
prod r_i computed without the catastrophic cancellation of forming the
quotient directly: integration multifunctions pull the radii out of the
edge determinants analytically, and coboundaries of derivative-carrying
untruncated forms are rewritten through the simplex Stokes identity
dI_omega = I_{d omega}.  The generic face-sum fallback keeps a cancellation
snap guard: face sums smaller than the quadrature resolution times the face
magnitude are floored to zero.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import ArgumentError
from .exterior import _batch_det
from .forms import FormField
from .simplex import default_rule, integrate_form

__all__ = [
    "Multifunction",
    "UserMultifunction",
    "IntegrationMultifunction",
    "CoboundaryMultifunction",
    "integration_multifunction",
    "as_differential",
    "stokes_residual",
    "StokesResult",
]


class Multifunction:
    """Base class: a measurable function of (degree+1) points in R^n."""

    def __init__(self, dimension, degree, provenance="user"):
        if degree < 0:
            raise ArgumentError("multifunction degree must be >= 0")
        self.dimension = int(dimension)
        self.degree = int(degree)
        self.provenance = provenance

    @property
    def arity(self):
        return self.degree + 1

    def evaluate(self, points) -> float:
        points = np.asarray(points, dtype=float)
        if points.shape != (self.arity, self.dimension):
            raise ArgumentError(
                f"expected {self.arity} points of dimension {self.dimension}"
            )
        return float(self.evaluate_batch(points[np.newaxis])[0])

    __call__ = evaluate

    def evaluate_batch(self, tuples):
        raise NotImplementedError

    def _evaluate_sub(self, root, subset, memo):
        """Evaluate on root[subset]; memo is shared within one outer call."""
        key = (id(self), subset)
        if key not in memo:
            memo[key] = self.evaluate(root[list(subset)])
        return memo[key]

    def evaluate_scaled_batch(self, x0, vs, rs):
        """F(x0, x0 + r_1 v_1, ...) / prod_i r_i for each row.

        The generic implementation forms the quotient directly; subclasses
        with analytic structure override it with a stable version.
        """
        x0 = np.asarray(x0, dtype=float)
        vs = np.asarray(vs, dtype=float)
        rs = np.asarray(rs, dtype=float)
        tuples = np.concatenate(
            [x0[:, np.newaxis, :], x0[:, np.newaxis, :] + rs[..., np.newaxis] * vs],
            axis=1,
        )
        vals = self.evaluate_batch(tuples)
        prod = np.prod(rs, axis=1) if self.degree else np.ones(len(x0))
        with np.errstate(divide="ignore", invalid="ignore"):
            out = vals / prod
        return np.where(np.isfinite(out), out, 0.0)

    def __add__(self, other):
        if not isinstance(other, Multifunction):
            return NotImplemented
        return _Combination([(1.0, self), (1.0, other)])

    def __sub__(self, other):
        if not isinstance(other, Multifunction):
            return NotImplemented
        return _Combination([(1.0, self), (-1.0, other)])

    def __mul__(self, scalar):
        return _Combination([(float(scalar), self)])

    __rmul__ = __mul__


class UserMultifunction(Multifunction):
    """Wraps a caller-supplied evaluator; batch form optional."""

    def __init__(self, dimension, degree, func, batch_func=None):
        super().__init__(dimension, degree, provenance="user")
        self._func = func
        self._batch = batch_func

    def evaluate_batch(self, tuples):
        tuples = np.asarray(tuples, dtype=float)
        if self._batch is not None:
            return np.asarray(self._batch(tuples), dtype=float)
        return np.array([float(self._func(t)) for t in tuples])


class _Combination(Multifunction):
    """A finite linear combination of multifunctions of equal shape."""

    def __init__(self, parts):
        terms = []
        for a, f in parts:
            if isinstance(f, _Combination):
                terms.extend((a * b, g) for b, g in f.terms)
            else:
                terms.append((a, f))
        base = terms[0][1]
        for _, f in terms:
            if f.dimension != base.dimension or f.degree != base.degree:
                raise ArgumentError("combined multifunctions must match in shape")
        super().__init__(base.dimension, base.degree, provenance="user")
        self.terms = terms

    def evaluate_batch(self, tuples):
        tuples = np.asarray(tuples, dtype=float)
        out = np.zeros(len(tuples))
        for a, f in self.terms:
            out += a * f.evaluate_batch(tuples)
        return out

    def _evaluate_sub(self, root, subset, memo):
        return sum(a * f._evaluate_sub(root, subset, memo) for a, f in self.terms)

    def evaluate_scaled_batch(self, x0, vs, rs):
        out = np.zeros(len(np.asarray(x0)))
        for a, f in self.terms:
            out += a * f.evaluate_scaled_batch(x0, vs, rs)
        return out


class IntegrationMultifunction(Multifunction):
    """I_omega: the tuple is read as a simplex and omega integrated over it.

    For degree 0 this is evaluation: I_f(x) = f(x).
    """

    def __init__(self, omega: FormField, rule=None):
        super().__init__(omega.dimension, omega.degree,
                         provenance="integration-of-form")
        self.omega = omega
        self.rule = rule or default_rule(
            omega.degree, smooth=omega.backend != "rough"
        )
        if self.rule.order != omega.degree:
            raise ArgumentError("rule order must equal the form degree")

    def evaluate_batch(self, tuples):
        tuples = np.asarray(tuples, dtype=float)
        x0 = tuples[:, 0, :]
        edges = tuples[:, 1:, :] - tuples[:, :1, :]
        return self._edge_integrals(x0, edges)

    def evaluate_batch_with_mass(self, tuples):
        """(integral, quadrature mass) per tuple, the mass being
        sum_q |w_q| |integrand_q|.  The mass dominates |integral| and, unlike
        it, cannot cancel to zero, so it is the right scale for deciding
        whether a small alternating sum is signal or rule noise."""
        tuples = np.asarray(tuples, dtype=float)
        x0 = tuples[:, 0, :]
        edges = tuples[:, 1:, :] - tuples[:, :1, :]
        return self._edge_integrals(x0, edges, with_mass=True)

    def _edge_integrals(self, base, edges, unit_vectors=None, with_mass=False):
        """sum_q w_q omega_{base + s_q . edges}(det edges), batched.

        When unit_vectors is given the determinant part uses it instead of
        edges (the radii having been factored out analytically).
        """
        n = self.dimension
        k = self.degree
        P, W = self.rule.points, self.rule.weights
        if k == 0:
            if not self.omega.indices:
                out = np.zeros(len(base))
                return (out, np.zeros(len(base))) if with_mass else out
            out = self.omega.coefficients_batch(base)[:, 0]
            return (out, np.abs(out)) if with_mass else out
        disp = np.einsum("qk,nkd->nqd", P, edges)
        pos = (base[:, np.newaxis, :] + disp).reshape(-1, n)
        coeffs = self.omega.coefficients_batch(pos).reshape(
            len(base), len(P), -1
        )
        det_source = edges if unit_vectors is None else unit_vectors
        dets = np.empty((len(base), len(self.omega.indices)))
        for col, idx in enumerate(self.omega.indices):
            cols = [i - 1 for i in idx]
            dets[:, col] = _batch_det(det_source[:, :, cols])
        integrand = np.einsum("nqm,nm->nq", coeffs, dets)
        out = integrand @ W
        if not with_mass:
            return out
        return out, np.abs(integrand) @ np.abs(W)

    def evaluate_scaled_batch(self, x0, vs, rs):
        """I_omega / prod r_i with the radii cancelled inside the pullback:
        the determinant uses the unit directions, positions use r_i v_i.
        Finite for every r_i >= 0, including 0."""
        x0 = np.asarray(x0, dtype=float)
        if self.degree == 0:
            if not self.omega.indices:
                return np.zeros(len(x0))
            return self.omega.coefficients_batch(x0)[:, 0]
        vs = np.asarray(vs, dtype=float)
        rs = np.asarray(rs, dtype=float)
        return self._edge_integrals(x0, rs[..., np.newaxis] * vs,
                                    unit_vectors=vs)


class CoboundaryMultifunction(Multifunction):
    """dI_omega, of degree k+1 for a k-form omega.

    Two evaluation routes.  When omega carries a derivative and is not
    truncated by a support domain, dI_omega = I_{d omega} identically, so
    the scaled evaluation reuses the integration route on d omega.
    Otherwise the alternating face sum is formed explicitly; a snap guard
    floors sums below the rule resolution, measured against the quadrature
    mass of the faces, to zero.  Scaled face sums divide by prod(r_i), so
    rule noise that survived the guard would be amplified without bound as
    radii shrink; the mass scale (which never cancels) together with the
    stratified segment rule's hard error bound keeps noise below the guard
    while genuine jumps, whose face sums are a fixed fraction of the mass,
    pass through.
    """

    def __init__(self, omega: FormField, face_rule=None, volume_rule=None,
                 snap_tol=None):
        super().__init__(omega.dimension, omega.degree + 1,
                         provenance="differential-of")
        self.omega = omega
        smooth = omega.backend != "rough"
        self.face_rule = face_rule or default_rule(omega.degree, smooth=smooth)
        self._faces = IntegrationMultifunction(omega, self.face_rule)
        self.stokes_route = omega.has_derivative() and omega.support is None
        if self.stokes_route:
            self._volume = IntegrationMultifunction(
                omega.exterior_derivative(),
                volume_rule or default_rule(omega.degree + 1, smooth=smooth),
            )
        else:
            self._volume = None
        if snap_tol is None:
            nodes = len(self.face_rule.weights)
            if omega.degree == 0:
                # faces are point evaluations: only rounding error
                snap_tol = 1e-13
            elif self.face_rule.kind == "stratified":
                # jump error <= (few jumps) * sup|f| / nodes, surely
                snap_tol = 64.0 / nodes
            elif self.face_rule.kind == "monte-carlo":
                snap_tol = 12.0 / math.sqrt(nodes)
            else:
                snap_tol = 1e-10
        self.snap_tol = float(snap_tol)

    def _face_sum_batch(self, tuples, with_mass=False):
        """(signed face sum, quadrature mass of the faces) for each tuple."""
        tuples = np.asarray(tuples, dtype=float)
        m = self.arity
        total = np.zeros(len(tuples))
        mass = np.zeros(len(tuples)) if with_mass else None
        for omit in range(m):
            keep = [j for j in range(m) if j != omit]
            face = tuples[:, keep, :]
            sign = -1.0 if omit % 2 else 1.0
            if with_mass:
                vals, face_mass = self._faces.evaluate_batch_with_mass(face)
                mass += face_mass
            else:
                vals = self._faces.evaluate_batch(face)
            total += sign * vals
        return total, mass

    def evaluate_batch(self, tuples):
        total, _ = self._face_sum_batch(tuples)
        return total

    def evaluate_scaled_batch(self, x0, vs, rs):
        x0 = np.asarray(x0, dtype=float)
        vs = np.asarray(vs, dtype=float)
        rs = np.asarray(rs, dtype=float)
        if self.stokes_route:
            return self._volume.evaluate_scaled_batch(x0, vs, rs)
        tuples = np.concatenate(
            [x0[:, np.newaxis, :], x0[:, np.newaxis, :] + rs[..., np.newaxis] * vs],
            axis=1,
        )
        total, mass = self._face_sum_batch(tuples, with_mass=True)
        total = np.where(np.abs(total) < self.snap_tol * mass, 0.0, total)
        prod = np.prod(rs, axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = total / prod
        return np.where(np.isfinite(out), out, 0.0)

    def _evaluate_sub(self, root, subset, memo):
        total = 0.0
        for pos in range(len(subset)):
            sub = subset[:pos] + subset[pos + 1 :]
            total += (-1.0) ** pos * self._faces._evaluate_sub(root, sub, memo)
        return total

    def evaluate(self, points):
        points = np.asarray(points, dtype=float)
        if points.shape != (self.arity, self.dimension):
            raise ArgumentError(
                f"expected {self.arity} points of dimension {self.dimension}"
            )
        memo = {}
        return float(
            self._evaluate_sub(points, tuple(range(self.arity)), memo)
        )


class DifferentialMultifunction(Multifunction):
    """The Alexander-Spanier differential of an arbitrary multifunction."""

    def __init__(self, base: Multifunction):
        super().__init__(base.dimension, base.degree + 1,
                         provenance="differential-of")
        self.base = base

    def _evaluate_sub(self, root, subset, memo):
        total = 0.0
        for pos in range(len(subset)):
            sub = subset[:pos] + subset[pos + 1 :]
            total += (-1.0) ** pos * self.base._evaluate_sub(root, sub, memo)
        return total

    def evaluate(self, points):
        points = np.asarray(points, dtype=float)
        if points.shape != (self.arity, self.dimension):
            raise ArgumentError(
                f"expected {self.arity} points of dimension {self.dimension}"
            )
        memo = {}
        return float(self._evaluate_sub(points, tuple(range(self.arity)), memo))

    def evaluate_batch(self, tuples):
        tuples = np.asarray(tuples, dtype=float)
        m = self.arity
        out = np.zeros(len(tuples))
        for omit in range(m):
            keep = [j for j in range(m) if j != omit]
            sign = -1.0 if omit % 2 else 1.0
            out += sign * self.base.evaluate_batch(tuples[:, keep, :])
        return out


def integration_multifunction(omega, rule=None):
    return IntegrationMultifunction(omega, rule)


def as_differential(F: Multifunction) -> Multifunction:
    """dF; integration multifunctions get the specialized coboundary."""
    if isinstance(F, IntegrationMultifunction):
        return CoboundaryMultifunction(F.omega, face_rule=F.rule)
    return DifferentialMultifunction(F)


class StokesResult(float):
    """The residual |dI_omega - I_{d omega}| at one tuple.

    containment is True/False when the hull test decided whether the
    simplex stays where omega is untruncated, None when no test applies.
    """

    def __new__(cls, residual, lhs, rhs, containment):
        obj = super().__new__(cls, residual)
        obj.residual = float(residual)
        obj.lhs = float(lhs)
        obj.rhs = float(rhs)
        obj.containment = containment
        return obj

    def __repr__(self):
        return (
            f"StokesResult(residual={self.residual!r}, lhs={self.lhs!r}, "
            f"rhs={self.rhs!r}, containment={self.containment!r})"
        )


def stokes_residual(omega, points, rule=None):
    """|dI_omega(points) - I_{d omega}(points)| for a derivative-carrying form.

    Zero at quadrature precision when the simplex hull avoids any support
    truncation; generically nonzero when the hull straddles the support
    boundary, which the containment field reports when decidable.
    """
    if not omega.has_derivative():
        raise ArgumentError("stokes_residual needs a form with a derivative")
    points = np.asarray(points, dtype=float)
    k = omega.degree
    if points.shape != (k + 2, omega.dimension):
        raise ArgumentError(f"need {k + 2} points of dimension {omega.dimension}")
    smooth = omega.backend != "rough"
    face_rule = rule or default_rule(k, smooth=smooth)
    lhs = 0.0
    for omit in range(k + 2):
        keep = [j for j in range(k + 2) if j != omit]
        sign = -1.0 if omit % 2 else 1.0
        lhs += sign * integrate_form(omega, points[keep], face_rule)
    rhs = integrate_form(
        omega.exterior_derivative(), points, default_rule(k + 1, smooth=smooth)
    )
    if omega.support is None:
        containment = True
    elif omega.support.is_convex:
        containment = bool(np.all(omega.support.contains_batch(points)))
    else:
        flags = omega.support.hull_check_batch(points[np.newaxis])
        containment = None if flags is None else bool(flags[0])
    return StokesResult(abs(lhs - rhs), lhs, rhs, containment)
