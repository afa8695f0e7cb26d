import math

import numpy as np
import pytest

from errors import ConfigError, DomainError
from killing import (
    analytic_commutator,
    angular_momentum_rep,
    build_embedding,
    casimir,
    chart_to_ambient,
    classify_field,
    commutator_as_field,
    commutator_field,
    coordinate_field,
    curvature_operator_check,
    expression_field,
    form_invariance_check,
    lie_derivative_metric,
    parse_spin,
    project_constant_vector,
    projected_field,
    rescaled_lie_check,
    rotation_generator_field,
    spin_rep,
    trivial_rep,
    verify_algebra,
)
from metric_catalog import build_preset, eval_metric
from tensor_core import Signature


@pytest.fixture(scope="module")
def sphere():
    return build_embedding(2, 1.0)


@pytest.fixture(scope="module")
def sphere_points(sphere):
    return sphere.sample_points(4, np.random.default_rng(11))


# ------------------------------------------------------------
# embedding and projection
# ------------------------------------------------------------

@pytest.mark.parametrize("n, K", [(2, 1.0), (3, 0.25), (2, -1.0), (3, -4.0)])
def test_embedded_points_lie_on_the_surface(n, K):
    model = build_embedding(n, K)
    for q in model.sample_points(5, np.random.default_rng(2)):
        assert model.constraint_residual(model.embed(q)) < 1e-12 * max(1.0, model.R**2)


def test_projection_is_tangent_and_idempotent(sphere):
    x = sphere.embed([0.9, 0.4])
    U = np.array([0.3, -1.0, 2.0])
    projected, lam = project_constant_vector(sphere, U, x)
    assert abs(sphere.inner(projected, sphere.normal(x))) < 1e-14
    again, _ = project_constant_vector(sphere, projected, x)
    assert np.allclose(again, projected, atol=1e-14)
    assert lam == pytest.approx(-sphere.inner(U, x))


def test_projection_rejects_points_off_the_surface(sphere):
    with pytest.raises(DomainError):
        project_constant_vector(sphere, [0.0, 0.0, 1.0], [0.0, 0.0, 1.1])
    with pytest.raises(ConfigError):
        project_constant_vector(sphere, [0.0, 1.0], [0.0, 0.0, 1.0])


def test_flat_curvature_has_no_embedding():
    with pytest.raises(ConfigError):
        build_embedding(2, 0.0)
    with pytest.raises(ConfigError):
        build_embedding(1, 1.0)


# ------------------------------------------------------------
# classification
# ------------------------------------------------------------

@pytest.mark.parametrize("R", [1.0, 2.0])
def test_height_gradient_is_conformal_killing(R):
    model = build_embedding(2, 1.0 / R**2)
    points = model.sample_points(4, np.random.default_rng(4))
    result = classify_field(model.chart, projected_field(model, [0.0, 0.0, 1.0]), points)
    assert result.kind == "conformal_killing"
    expected = [-math.cos(q[0]) / R for q in points]
    assert np.allclose(result.lambdas, expected, atol=1e-9)


@pytest.mark.parametrize("n, R", [(2, 1.0), (2, 2.0), (3, 1.0)])
def test_projected_constant_vectors_at_random_points(n, R):
    model = build_embedding(n, 1.0 / R**2)
    rng = np.random.default_rng(21)
    for q in model.sample_points(50, rng):
        U = rng.normal(size=n + 1)
        _, lam = project_constant_vector(model, U, model.embed(q))
        assert lam == pytest.approx(-model.inner(U, model.embed(q)) / R**2, abs=1e-12)
        lie = lie_derivative_metric(model.chart, projected_field(model, U), q)
        assert np.max(np.abs(lie - 2.0 * lam * eval_metric(model.chart, q))) < 1e-6


def test_hyperboloid_boost_projection():
    model = build_embedding(2, -1.0)
    points = model.sample_points(4, np.random.default_rng(8))
    result = classify_field(model.chart, projected_field(model, [1.0, 0.0, 0.0]), points)
    assert result.kind == "conformal_killing"
    assert np.allclose(result.lambdas, [-math.cosh(q[0]) for q in points], atol=1e-9)


@pytest.mark.parametrize("K", [1.0, -1.0])
def test_rotations_are_killing(K):
    model = build_embedding(2, K)
    points = model.sample_points(4, np.random.default_rng(1))
    for alpha, beta in [(0, 1), (0, 2), (1, 2)]:
        result = classify_field(model.chart, rotation_generator_field(model, alpha, beta), points)
        assert result.kind == "killing", (alpha, beta)
        assert result.max_lie_norm < 1e-9


def test_coordinate_fields(sphere, sphere_points):
    assert classify_field(sphere.chart, coordinate_field(sphere.chart, 1), sphere_points).kind == "killing"
    assert classify_field(sphere.chart, coordinate_field(sphere.chart, 0), sphere_points).kind == "neither"


def test_classification_needs_three_points(sphere, sphere_points):
    with pytest.raises(ConfigError):
        classify_field(sphere.chart, coordinate_field(sphere.chart, 1), sphere_points[:2])


def test_user_field_matches_projected_field(sphere, sphere_points):
    user = expression_field(sphere.chart, ["-sin(theta)", "0"])
    projected = projected_field(sphere, [0.0, 0.0, 1.0])
    for q in sphere_points:
        assert np.allclose(user(q), projected(q), atol=1e-12)
    assert classify_field(sphere.chart, user, sphere_points).kind == "conformal_killing"


def test_user_field_needs_one_component_per_coordinate(sphere):
    with pytest.raises(ConfigError):
        expression_field(sphere.chart, ["1"])


# ------------------------------------------------------------
# commutators
# ------------------------------------------------------------

@pytest.mark.parametrize("K", [1.0, -1.0])
def test_commutators_of_projections_are_killing(K):
    model = build_embedding(2, K)
    points = model.sample_points(3, np.random.default_rng(6))
    eye = np.eye(3)
    xi = commutator_as_field(model.chart, projected_field(model, eye[0]), projected_field(model, eye[2]))
    result = classify_field(model.chart, xi, points)
    assert result.kind == "killing"
    assert result.max_lie_norm < 1e-7


def test_commutator_closed_form(sphere, sphere_points):
    U, V = np.array([1.0, 0.5, 0.0]), np.array([0.0, -1.0, 2.0])
    f1, f2 = projected_field(sphere, U), projected_field(sphere, V)
    for q in sphere_points:
        numeric = chart_to_ambient(sphere, q, commutator_field(sphere.chart, f1, f2, q))
        assert np.allclose(numeric, analytic_commutator(sphere, U, V, sphere.embed(q)), atol=1e-10)


@pytest.mark.parametrize("R", [1.0, 2.0])
def test_commutator_of_basis_vectors_is_a_scaled_rotation(R):
    model = build_embedding(2, 1.0 / R**2)
    eye = np.eye(3)
    f1, f2 = projected_field(model, eye[0]), projected_field(model, eye[1])
    rotation = rotation_generator_field(model, 0, 1)
    q = np.array([1.1, 0.7])
    assert np.allclose(commutator_field(model.chart, f1, f2, q), rotation(q) / R**2, atol=1e-12)


def test_form_invariance_on_sphere_and_hyperboloid():
    for K in (1.0, -1.0):
        model = build_embedding(2, K)
        report = form_invariance_check(model, model.sample_points(3, np.random.default_rng(3)))
        assert report.all_killing
        assert report.pairs == ((0, 1), (0, 2), (1, 2))


# ------------------------------------------------------------
# conformal rescaling
# ------------------------------------------------------------

SPHERE_PSI = "-ln(1 + 0.25*(x0^2 + x1^2))"


def test_stereographic_killing_field_survives_rescaling():
    base = build_preset("flat", {"q": "2"})
    gprime = build_preset("constant_curvature", {"n": "2", "K": "1"})
    xi = expression_field(base, ["1 + 0.25*(x0^2 - x1^2)", "0.5*x0*x1"])
    points = [[0.3, -0.2], [1.0, 0.4], [-0.7, 0.9]]
    assert classify_field(base, xi, points).kind == "conformal_killing"
    report = rescaled_lie_check(base, SPHERE_PSI, gprime, xi, points)
    assert report.killing_for_gprime
    assert report.rescaled_condition
    assert report.identity_residual < 1e-10


def test_translation_is_not_killing_after_rescaling():
    base = build_preset("flat", {"q": "2"})
    gprime = build_preset("constant_curvature", {"n": "2", "K": "1"})
    xi = coordinate_field(base, 0)
    report = rescaled_lie_check(base, SPHERE_PSI, gprime, xi, [[0.3, -0.2], [1.0, 0.4], [-0.7, 0.9]])
    assert not report.killing_for_gprime
    assert not report.rescaled_condition
    assert report.identity_residual < 1e-10


# ------------------------------------------------------------
# operator algebra
# ------------------------------------------------------------

@pytest.mark.parametrize("signature", ["+,+,+", "-,+,+", "-,+,+,+", "+,+,+,+,+"])
@pytest.mark.parametrize("form", ["complex", "real"])
def test_vector_representation_closes(signature, form):
    sig = Signature.from_string(signature)
    rep = angular_momentum_rep(sig, form)
    report = verify_algebra(rep)
    assert report.max_closure_residual < 1e-12
    assert report.jacobi_residual < 1e-12
    assert report.antisymmetry_residual == 0.0
    cas = casimir(rep)
    assert cas.eigenvalues == ((float(sig.n - 1), sig.n),)
    assert cas.centrality_residual < 1e-12


@pytest.mark.parametrize("j, value, mult", [("1/2", 0.75, 2), ("1", 2.0, 3), ("3/2", 3.75, 4), ("2", 6.0, 5)])
def test_spin_casimir(j, value, mult):
    rep = spin_rep(j)
    assert verify_algebra(rep).max_closure_residual < 1e-12
    assert casimir(rep).eigenvalues == ((value, mult),)


def test_trivial_representation():
    rep = trivial_rep(Signature.minus_plus(1, 3))
    assert verify_algebra(rep).max_closure_residual == 0.0
    assert casimir(rep).eigenvalues == ((0.0, 1),)


def test_perturbed_generator_breaks_closure():
    rep = angular_momentum_rep(Signature.minus_plus(0, 3))
    bumped = rep.with_generator((0, 1), rep.get(0, 1) + 1e-3 * np.diag([1.0, 0.0, 0.0]))
    assert verify_algebra(bumped).max_closure_residual > 1e-4
    assert casimir(bumped).centrality_residual > 1e-6


@pytest.mark.parametrize("text, expected", [("1/2", 0.5), (1, 1.0), (1.5, 1.5), ("0", 0.0)])
def test_parse_spin(text, expected):
    assert float(parse_spin(text)) == expected


@pytest.mark.parametrize("text", ["1/3", "-1", "abc", "1/0"])
def test_parse_spin_rejects(text):
    with pytest.raises(ConfigError):
        parse_spin(text)


@pytest.mark.parametrize("n, K", [(2, 1.0), (3, 0.25), (3, -1.0)])
def test_curvature_operators_match_generators(n, K):
    assert curvature_operator_check(build_embedding(n, K)) < 1e-9
