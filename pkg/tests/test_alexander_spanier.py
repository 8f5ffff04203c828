import numpy as np
import pytest

from formflux.alexander_spanier import (
    CoboundaryMultifunction,
    DifferentialMultifunction,
    IntegrationMultifunction,
    UserMultifunction,
    as_differential,
    integration_multifunction,
    stokes_residual,
)
from formflux.domains import Ball, SlitBox
from formflux.errors import ArgumentError
from formflux.forms import FormField, Polynomial
from formflux.simplex import default_rule, monte_carlo_rule


def poly_form(dimension, degree, entries):
    return FormField.from_polynomials(dimension, degree, entries)


def random_dyadic_polynomial(rng, dimension, max_degree=2):
    coeffs = {}
    for _ in range(4):
        expo = tuple(int(e) for e in rng.integers(0, max_degree + 1, dimension))
        coeffs[expo] = float(rng.integers(-16, 17)) / 16.0
    return Polynomial(dimension, coeffs)


def test_segment_integral_of_dx1_is_length():
    omega = poly_form(2, 1, {(1,): {(0, 0): 1.0}})
    F = integration_multifunction(omega)
    assert F(np.array([[0.0, 0.0], [1.0, 0.0]])) == pytest.approx(1.0, abs=1e-14)


def test_degree_zero_integration_is_evaluation():
    f = poly_form(2, 0, {(): {(2, 1): 3.0}})
    F = integration_multifunction(f)
    assert F.provenance == "integration-of-form"
    x = np.array([[0.5, 2.0]])
    assert F(x) == pytest.approx(3.0 * 0.25 * 2.0, abs=1e-15)


def test_vertical_segment_kills_dx2_coefficient_x1():
    omega = poly_form(2, 1, {(2,): {(1, 0): 1.0}})
    F = integration_multifunction(omega)
    val = F(np.array([[0.0, 0.0], [0.0, 1.0]]))
    assert val == pytest.approx(0.0, abs=1e-15)


def test_segment_antisymmetry_under_swap():
    rng = np.random.default_rng(7)
    omega = poly_form(
        2, 1, {(1,): {(1, 1): 0.5}, (2,): {(2, 0): -0.75}}
    )
    F = integration_multifunction(omega)
    for _ in range(10):
        a, b = rng.normal(size=(2, 2))
        assert F(np.array([a, b])) == pytest.approx(
            -F(np.array([b, a])), abs=1e-13
        )


def test_differential_of_point_evaluation():
    f = poly_form(2, 0, {(): {(1, 0): 1.0, (0, 2): 2.0}})
    dF = as_differential(integration_multifunction(f))
    x = np.array([0.1, 0.2])
    y = np.array([0.7, -0.4])
    expected = (0.7 + 2 * 0.16) - (0.1 + 2 * 0.04)
    assert dF(np.array([x, y])) == pytest.approx(expected, abs=1e-14)


def test_coboundary_of_x1_dx2_on_unit_triangle():
    omega = poly_form(2, 1, {(2,): {(1, 0): 1.0}})
    dF = as_differential(integration_multifunction(omega))
    tri = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    assert dF(tri) == pytest.approx(0.5, abs=1e-13)
    assert dF.provenance == "differential-of"
    assert dF.arity == 3


def test_double_differential_vanishes_exactly():
    rng = np.random.default_rng(11)

    def func(points):
        return float(np.sin(points[0] @ points[-1]) + np.prod(points[:, 0]))

    for degree in (0, 1, 2):
        F = UserMultifunction(3, degree, func)
        ddF = as_differential(as_differential(F))
        for _ in range(34):
            pts = rng.normal(size=(ddF.arity, 3))
            scale = sum(abs(func(np.delete(np.delete(pts, i, 0), j, 0)))
                        for i in range(len(pts)) for j in range(len(pts) - 1))
            assert abs(ddF(pts)) <= 1e-14 * (1.0 + scale)


def test_double_differential_of_integration_vanishes():
    rng = np.random.default_rng(13)
    omega = poly_form(2, 1, {(1,): {(0, 1): 1.0}, (2,): {(2, 0): 0.5}})
    ddF = as_differential(as_differential(integration_multifunction(omega)))
    for _ in range(25):
        pts = rng.normal(size=(4, 2))
        assert ddF(pts) == pytest.approx(0.0, abs=1e-13)


def test_differential_is_linear():
    rng = np.random.default_rng(5)
    F = UserMultifunction(2, 1, lambda p: float(p[0] @ p[1]))
    G = UserMultifunction(2, 1, lambda p: float(np.cos(p[0, 0] - p[1, 1])))
    lhs = as_differential(2.5 * F - 0.75 * G)
    dF, dG = as_differential(F), as_differential(G)
    for _ in range(10):
        pts = rng.normal(size=(3, 2))
        want = 2.5 * dF(pts) - 0.75 * dG(pts)
        assert lhs(pts) == pytest.approx(want, rel=1e-12, abs=1e-13)


def test_combination_requires_matching_shape():
    F = UserMultifunction(2, 1, lambda p: 0.0)
    G = UserMultifunction(2, 2, lambda p: 0.0)
    with pytest.raises(ArgumentError):
        _ = F + G


def test_evaluate_rejects_wrong_shape():
    F = UserMultifunction(2, 1, lambda p: 0.0)
    with pytest.raises(ArgumentError):
        F(np.zeros((3, 2)))
    with pytest.raises(ArgumentError):
        F(np.zeros((2, 3)))


def test_rule_order_must_match_form_degree():
    omega = poly_form(2, 1, {(2,): {(1, 0): 1.0}})
    with pytest.raises(ArgumentError):
        IntegrationMultifunction(omega, rule=default_rule(2))


def test_scaled_integration_matches_plain_quotient():
    rng = np.random.default_rng(3)
    omega = poly_form(
        3, 2, {(1, 2): {(1, 0, 1): 1.0}, (1, 3): {(0, 2, 0): -0.5}}
    )
    F = integration_multifunction(omega)
    N = 40
    x0 = rng.uniform(-1, 1, size=(N, 3))
    vs = rng.normal(size=(N, 2, 3))
    vs /= np.linalg.norm(vs, axis=2, keepdims=True)
    rs = rng.uniform(0.05, 0.3, size=(N, 2))
    scaled = F.evaluate_scaled_batch(x0, vs, rs)
    tuples = np.concatenate(
        [x0[:, None, :], x0[:, None, :] + rs[..., None] * vs], axis=1
    )
    plain = F.evaluate_batch(tuples) / np.prod(rs, axis=1)
    assert np.allclose(scaled, plain, rtol=1e-10, atol=1e-12)


def test_scaled_integration_finite_at_tiny_radii():
    omega = poly_form(2, 1, {(2,): {(1, 0): 1.0}})
    F = integration_multifunction(omega)
    x0 = np.array([[0.25, 0.5]])
    vs = np.array([[[0.0, 1.0]]])
    rs = np.array([[1e-300]])
    val = F.evaluate_scaled_batch(x0, vs, rs)
    assert val[0] == pytest.approx(0.25, abs=1e-12)
    assert F.evaluate_scaled_batch(x0, vs, np.array([[0.0]]))[0] == pytest.approx(
        0.25, abs=1e-12
    )


def test_coboundary_stokes_route_matches_face_sums():
    rng = np.random.default_rng(23)
    omega = FormField.from_polynomials(
        2,
        1,
        {
            (1,): random_dyadic_polynomial(rng, 2),
            (2,): random_dyadic_polynomial(rng, 2),
        },
    )
    dF = CoboundaryMultifunction(omega)
    assert dF.stokes_route
    N = 30
    x0 = rng.uniform(-0.5, 0.5, size=(N, 2))
    vs = rng.normal(size=(N, 2, 2))
    vs /= np.linalg.norm(vs, axis=2, keepdims=True)
    rs = rng.uniform(0.05, 0.2, size=(N, 2))
    scaled = dF.evaluate_scaled_batch(x0, vs, rs)
    tuples = np.concatenate(
        [x0[:, None, :], x0[:, None, :] + rs[..., None] * vs], axis=1
    )
    plain = dF.evaluate_batch(tuples) / np.prod(rs, axis=1)
    assert np.allclose(scaled, plain, rtol=1e-8, atol=1e-10)


def test_coboundary_scalar_stokes_route_stable_at_float_floor():
    f = poly_form(2, 0, {(): {(2, 0): 1.0}})
    dF = CoboundaryMultifunction(f)
    x0 = np.array([[0.3, 0.0]])
    vs = np.array([[[1.0, 0.0]]])
    out = dF.evaluate_scaled_batch(x0, vs, np.array([[1e-280]]))
    assert out[0] == pytest.approx(0.6, rel=1e-12)


def test_face_route_snap_floors_closed_rough_form():
    def coeff_sign_x(pts):
        return np.sign(pts[:, 0] - 0.5)

    def coeff_sign_y(pts):
        return np.sign(pts[:, 1] - 0.5)

    omega = FormField.from_callables(
        2, 1, {(1,): coeff_sign_x, (2,): coeff_sign_y}
    )
    rule = monte_carlo_rule(1, 256, seed=4)
    dF = CoboundaryMultifunction(omega, face_rule=rule)
    assert not dF.stokes_route
    rng = np.random.default_rng(8)
    x0 = rng.uniform(0.6, 0.9, size=(50, 2))
    vs = rng.normal(size=(50, 2, 2))
    vs /= np.linalg.norm(vs, axis=2, keepdims=True)
    rs = np.full((50, 2), 1e-3)
    vals = dF.evaluate_scaled_batch(x0, vs, rs)
    assert np.all(vals == 0.0)


def test_face_route_keeps_genuine_jump_signal():
    def coeff_sign_y(pts):
        return np.sign(pts[:, 1] - 0.5)

    omega = FormField.from_callables(2, 1, {(1,): coeff_sign_y})
    rule = monte_carlo_rule(1, 512, seed=9)
    dF = CoboundaryMultifunction(omega, face_rule=rule)
    x0 = np.array([[0.5, 0.5]])
    vs = np.array([[[1.0, 0.0], [0.0, 1.0]]])
    rs = np.array([[0.2, 0.2]])
    val = dF.evaluate_scaled_batch(x0, vs, rs)
    assert abs(val[0]) > 1.0


def test_stokes_residual_triangle_x1_dx2():
    omega = poly_form(2, 1, {(2,): {(1, 0): 1.0}})
    tri = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    res = stokes_residual(omega, tri)
    assert res < 1e-12
    assert res.containment is True
    assert res.lhs == pytest.approx(0.5, abs=1e-13)
    assert res.rhs == pytest.approx(0.5, abs=1e-13)


def test_stokes_residual_random_polynomial_forms():
    rng = np.random.default_rng(41)
    for _ in range(10):
        omega = FormField.from_polynomials(
            2,
            1,
            {
                (1,): random_dyadic_polynomial(rng, 2, max_degree=3),
                (2,): random_dyadic_polynomial(rng, 2, max_degree=3),
            },
        )
        center = rng.uniform(-0.3, 0.3, size=2)
        tri = center + 0.5 * rng.uniform(-1, 1, size=(3, 2))
        assert stokes_residual(omega, tri) < 1e-8


def test_stokes_residual_detects_support_straddling():
    support = Ball(np.zeros(2), 1.0)
    omega = poly_form(2, 1, {(2,): {(1, 0): 1.0}}).with_support(support)
    inside = np.array([[0.0, 0.0], [0.3, 0.0], [0.0, 0.3]])
    res_in = stokes_residual(omega, inside)
    assert res_in.containment is True
    assert res_in < 1e-10
    straddle = np.array([[0.7, 0.0], [1.4, 0.0], [0.7, 0.7]])
    res_out = stokes_residual(omega, straddle)
    assert res_out.containment is False
    assert res_out > 1e-3


def test_stokes_residual_flags_unknown_containment():
    support = SlitBox(np.zeros(2), np.ones(2), [0.5, 0.5], [1.0, 0.5])
    omega = poly_form(2, 1, {(2,): {(1, 0): 1.0}}).with_support(support)
    tri = np.array([[0.1, 0.1], [0.3, 0.1], [0.1, 0.3]])
    res = stokes_residual(omega, tri)
    assert res.containment is None


def test_stokes_residual_requires_derivative():
    omega = FormField.from_callables(2, 1, {(1,): lambda pts: np.sign(pts[:, 0])})
    tri = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    with pytest.raises(ArgumentError):
        stokes_residual(omega, tri)


def test_generic_differential_batch_matches_single():
    rng = np.random.default_rng(2)
    F = UserMultifunction(2, 1, lambda p: float(np.tanh(p[0, 0] * p[1, 1])))
    dF = DifferentialMultifunction(F)
    tuples = rng.normal(size=(12, 3, 2))
    batch = dF.evaluate_batch(tuples)
    singles = np.array([dF(t) for t in tuples])
    assert np.allclose(batch, singles, rtol=1e-12, atol=1e-14)


def test_user_scaled_fallback_guards_zero_radii():
    F = UserMultifunction(2, 1, lambda p: float(p[1, 0] - p[0, 0]))
    x0 = np.zeros((2, 2))
    vs = np.array([[[1.0, 0.0]], [[1.0, 0.0]]])
    rs = np.array([[0.5], [0.0]])
    out = F.evaluate_scaled_batch(x0, vs, rs)
    assert out[0] == pytest.approx(1.0, abs=1e-14)
    assert out[1] == 0.0
