import math

import numpy as np
import pytest

from curvature import riemann
from errors import ChartValidityError, ConfigError, DomainError
from metric_catalog import build_preset, default_origin
from normal_coords import (
    CANDIDATE_CONVENTIONS,
    conformal_factor,
    exp_map_pullback,
    gauss_residual,
    integrate_radial_geodesic,
    quadratic_form_convention,
    reconstruct_metric,
    shoot_geodesic,
    solve_AB,
    taylor_normal_metric,
)

STEPS = 128


@pytest.fixture(scope="module")
def sphere():
    return build_preset("sphere", {"n": "2", "R": "1"})


def expansion(spec, z, origin=None, steps=STEPS):
    origin = default_origin(spec) if origin is None else origin
    return solve_AB(integrate_radial_geodesic(spec, origin, z, steps=steps))


# ------------------------------------------------------------
# radial geodesics
# ------------------------------------------------------------

def test_equator_is_a_geodesic(sphere):
    path = integrate_radial_geodesic(sphere, [math.pi / 2, 0.0], [0.0, 0.5], steps=STEPS)
    assert np.allclose(path.endpoint, [math.pi / 2, 0.5], atol=1e-12)
    assert path.first_integral_drift < 1e-10
    assert path.frame_residual < 1e-10


def test_meridian_geodesic_keeps_its_speed(sphere):
    path = integrate_radial_geodesic(sphere, [1.0, 0.0], [0.4, 0.3], steps=STEPS)
    assert path.first_integral_drift < 1e-8
    assert path.geodesic_residual < 1e-6
    assert path.richardson_error < 1e-7
    oracle = shoot_geodesic(sphere, [1.0, 0.0], [0.4, 0.3])
    assert np.max(np.abs(path.endpoint - oracle)) < 1e-7


def test_odd_step_count_is_rejected(sphere):
    with pytest.raises(ConfigError):
        integrate_radial_geodesic(sphere, [1.0, 0.0], [0.1, 0.0], steps=7)


def test_geodesic_through_the_pole_leaves_the_chart(sphere):
    with pytest.raises(ChartValidityError):
        integrate_radial_geodesic(sphere, [math.pi / 2, 0.0], [math.pi / 2 + 0.1, 0.0], steps=STEPS)
    with pytest.raises(ChartValidityError):
        shoot_geodesic(sphere, [math.pi / 2, 0.0], [2.0, 0.0])


# ------------------------------------------------------------
# A / B fields
# ------------------------------------------------------------

def test_structural_residuals_stay_small(sphere):
    exp = expansion(sphere, [0.3, 0.2])
    assert max(exp.residuals.values()) < 1e-9
    assert not exp.A[0].any() and not exp.B[0].any()


def test_a_field_matches_closed_form_on_sphere(sphere):
    # unit sphere: A_acd(1) = h (eta_ad z_c - eta_ac z_d), h = (sin r / r - 1) / r^2
    z = np.array([0.3, 0.4])
    r = 0.5
    exp = expansion(sphere, z, steps=256)
    h = (math.sin(r) / r - 1.0) / r**2
    eye = np.eye(2)
    expected = h * (np.einsum("ad,c->acd", eye, z) - np.einsum("ac,d->acd", eye, z))
    assert np.max(np.abs(exp.A[-1] - expected)) < 1e-9


@pytest.mark.parametrize(
    "preset, params",
    [
        ("sphere", {"n": "2", "R": "1"}),
        ("hyperbolic", {"n": "2", "R": "1"}),
        ("hyperboloid", {"n": "2", "R": "1"}),
        ("constant_curvature", {"n": "3", "K": "-1"}),
        ("schwarzschild", {"M": "1"}),
    ],
)
def test_a_and_b_structure_along_random_rays(preset, params):
    spec = build_preset(preset, params)
    rng = np.random.default_rng(11)
    for _ in range(20):
        z = rng.normal(size=spec.dim)
        z *= 0.3 / np.linalg.norm(z)
        exp = expansion(spec, z, steps=32)
        assert max(exp.residuals.values()) < 1e-8, exp.residuals
        assert exp.residuals["A_equals_zB"] < 1e-8


def test_leading_order_of_b_field(sphere):
    z = np.array([0.03, -0.04])
    exp = expansion(sphere, z)
    frame_riemann = riemann(sphere, default_origin(sphere)).riemann_frame
    assert np.max(np.abs(exp.B[-1] + frame_riemann / 6.0)) < 1e-3


def test_zero_direction_gives_eta(sphere):
    exp = expansion(sphere, [0.0, 0.0])
    assert np.array_equal(reconstruct_metric(exp), np.eye(2))


def test_off_grid_time_is_rejected(sphere):
    exp = expansion(sphere, [0.1, 0.1], steps=8)
    with pytest.raises(ConfigError):
        reconstruct_metric(exp, t=0.3)
    assert reconstruct_metric(exp, t=0.5).shape == (2, 2)


# ------------------------------------------------------------
# reconstruction against the exponential map
# ------------------------------------------------------------

@pytest.mark.parametrize(
    "preset, params, z",
    [
        ("sphere", {"n": "2", "R": "1"}, [0.18, -0.24]),
        ("sphere", {"n": "2", "R": "2"}, [0.3, 0.0]),
        ("constant_curvature", {"n": "3", "K": "-1"}, [0.1, 0.2, -0.2]),
        ("constant_curvature", {"n": "2", "K": "1", "p": "1"}, [0.1, 0.3]),
        ("hyperbolic", {"n": "2", "R": "1"}, [0.3, -0.2]),
        ("schwarzschild", {"M": "1"}, [0.1, 0.3, 0.2, -0.1]),
    ],
)
def test_reconstruction_matches_exponential_map(preset, params, z):
    spec = build_preset(preset, params)
    exp = expansion(spec, z, steps=256)
    oracle = exp_map_pullback(spec, default_origin(spec), [z])[0]
    assert np.max(np.abs(reconstruct_metric(exp) - oracle)) < 1e-5
    assert gauss_residual(exp) < 1e-8


def test_taylor_expansion_agrees_for_short_vectors(sphere):
    z = [0.05, 0.02]
    exp = expansion(sphere, z)
    taylor = taylor_normal_metric(sphere, default_origin(sphere), z)
    assert np.max(np.abs(reconstruct_metric(exp) - taylor)) < 1e-5


def test_exponential_map_is_eta_at_origin(sphere):
    assert np.array_equal(exp_map_pullback(sphere, default_origin(sphere), [[0.0, 0.0]])[0], np.eye(2))


def test_pullback_refuses_points_past_conjugate_radius(sphere):
    with pytest.raises(ChartValidityError):
        exp_map_pullback(sphere, default_origin(sphere), [[1.2, 0.0]], conjugate_radius=1.0)


def test_calibration_singles_out_one_convention():
    result = quadratic_form_convention()
    assert set(result.residuals) == {c.name for c in CANDIDATE_CONVENTIONS}
    assert result.residuals[result.selected.name] < 1e-5
    others = [v for k, v in result.residuals.items() if k != result.selected.name]
    assert min(others) > 1e-4


# ------------------------------------------------------------
# conformal factor
# ------------------------------------------------------------

def test_flat_space_has_no_conformal_factor():
    spec = build_preset("flat", {"q": "3"})
    exp = expansion(spec, [0.3, 0.1, -0.2])
    factor = conformal_factor(exp, dz_ds=[0.0, 1.0, 0.5])
    assert factor.sigma == 0.0


def test_radial_velocity_has_no_conformal_factor(sphere):
    z = np.array([0.2, 0.1])
    factor = conformal_factor(expansion(sphere, z), dz_ds=z)
    assert abs(factor.sigma) < 1e-12


@pytest.mark.parametrize("r", [0.1, 0.3, 0.6])
def test_transverse_conformal_factor_on_sphere(sphere, r):
    z = np.array([0.0, r])
    factor = conformal_factor(expansion(sphere, z, steps=256), dz_ds=[1.0, 0.0])
    assert factor.sigma == pytest.approx(math.log(math.sin(r) / r), abs=1e-6)
    assert factor.line_element_residual < 1e-5
    assert factor.L_classical[0, 1] == pytest.approx(-factor.L_classical[1, 0])


def test_conformal_factor_grows_quadratically(sphere):
    sigmas = [conformal_factor(expansion(sphere, [0.0, r]), dz_ds=[1.0, 0.0]).sigma for r in (0.05, 0.1)]
    slope = math.log(sigmas[1] / sigmas[0]) / math.log(2.0)
    assert slope == pytest.approx(2.0, abs=0.2)


def test_null_velocity_is_rejected():
    spec = build_preset("flat", {"p": "1", "q": "1"})
    exp = expansion(spec, [0.2, 0.1])
    with pytest.raises(DomainError):
        conformal_factor(exp, dz_ds=[1.0, 1.0])
    with pytest.raises(ConfigError):
        conformal_factor(exp)
    with pytest.raises(ConfigError):
        conformal_factor(exp, z=[0.0, 0.0], dz_ds=[1.0, 0.0])


@pytest.mark.parametrize("velocity", [[1.0, 0.0], [0.3, 1.0]])
def test_conformal_factor_on_lorentzian_chart(velocity):
    spec = build_preset("constant_curvature", {"n": "2", "K": "1", "p": "1"})
    exp = expansion(spec, [0.1, 0.3], steps=256)
    factor = conformal_factor(exp, dz_ds=velocity)
    assert math.isfinite(factor.sigma)
    assert factor.line_element_residual < 1e-5


def test_line_element_is_checked_against_the_exponential_map(sphere):
    z = np.array([0.0, 0.4])
    exp = expansion(sphere, z)
    wrong = exp_map_pullback(sphere, default_origin(sphere), [z])[0] + 0.01 * np.eye(2)
    factor = conformal_factor(exp, dz_ds=[1.0, 0.0], reference=wrong)
    assert factor.line_element_residual > 5e-3
