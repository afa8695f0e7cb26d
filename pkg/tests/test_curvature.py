import math

import numpy as np
import pytest

from curvature import christoffel, conformal_identity_check, einstein_space_check, riemann
from errors import ConfigError
from metric_catalog import build_preset, parse_metric_spec, parse_preset_string, sample_interior_points

TORUS = """
name = torus
dim = 2
signature = (+,+)
coords = a, b
g[0][0] = 1
g[1][1] = (2 + cos(a))^2
"""


@pytest.mark.parametrize(
    "preset, point, K",
    [
        ("sphere:n=2,R=2", [1.0, 0.3], 0.25),
        ("sphere:n=3,R=1", [1.0, 2.0, 0.5], 1.0),
        ("hyperbolic:n=3,R=1", [0.2, -0.4, 1.3], -1.0),
        ("hyperboloid:n=3,R=2", [0.7, 1.1, 0.2], -0.25),
        ("constant_curvature:n=4,K=0.5,p=1", [0.1, 0.2, -0.3, 0.4], 0.5),
    ],
)
def test_constant_curvature_presets(preset, point, K):
    bundle = riemann(parse_preset_string(preset), point)
    assert bundle.sectional_curvature() == pytest.approx(K, rel=1e-9)
    assert bundle.constant_curvature_deviation(K) < 1e-9
    assert max(bundle.symmetry_report().values()) < 1e-9


@pytest.mark.parametrize(
    "preset, K",
    [
        ("sphere:n=2,R=1", 1.0),
        ("sphere:n=2,R=2", 0.25),
        ("sphere:n=3,R=1", 1.0),
        ("constant_curvature:n=3,K=1", 1.0),
        ("constant_curvature:n=3,K=0.25", 0.25),
        ("constant_curvature:n=3,K=-1", -1.0),
    ],
)
def test_constant_curvature_at_random_points(preset, K):
    spec = parse_preset_string(preset)
    for point in sample_interior_points(spec, 20, np.random.default_rng(2)):
        assert riemann(spec, point).constant_curvature_deviation(K) < 1e-7


def test_sphere_christoffel_symbols():
    spec = build_preset("sphere", {"n": "2", "R": "1"})
    theta = 0.8
    gamma = christoffel(spec, [theta, 0.0])
    assert gamma[0, 1, 1] == pytest.approx(-math.sin(theta) * math.cos(theta))
    assert gamma[1, 0, 1] == pytest.approx(math.cos(theta) / math.sin(theta))
    assert gamma[1, 1, 0] == gamma[1, 0, 1]


def test_schwarzschild_radial_acceleration():
    gamma = christoffel(build_preset("schwarzschild", {"M": "1"}), [0.0, 6.0, 1.2, 0.3])
    assert gamma[1, 0, 0] == pytest.approx((6.0 - 2.0) / 6.0**3, rel=1e-12)


def test_flat_space_has_no_curvature():
    bundle = riemann(build_preset("flat", {"p": "1", "q": "3"}), [0.0, 1.0, 2.0, 3.0])
    assert not bundle.riemann_lower.any()
    assert bundle.sectional_curvature() == 0.0


def test_scalar_curvature_of_sphere():
    bundle = riemann(build_preset("sphere", {"n": "3", "R": "2"}), [1.0, 1.2, 0.0])
    assert bundle.scalar == pytest.approx(3 * 2 / 4.0)


def test_dual_and_finite_difference_curvature_agree():
    spec = build_preset("schwarzschild", {"M": "1"})
    point = [0.0, 7.0, 1.2, 0.1]
    exact = riemann(spec, point)
    approx = riemann(spec, point, derivs="fd")
    assert np.max(np.abs(exact.riemann_frame - approx.riemann_frame)) < 1e-5


# ------------------------------------------------------------
# Einstein-space verdicts
# ------------------------------------------------------------

def test_schwarzschild_is_ricci_flat_but_not_constant():
    spec = build_preset("schwarzschild", {"M": "1"})
    points = [[0.0, 5.0, 1.0, 0.0], [0.0, 9.0, 2.0, 1.0], [1.0, 20.0, 0.5, 3.0]]
    report = einstein_space_check(spec, points)
    assert report.is_einstein
    assert not report.is_constant_curvature
    assert report.K is None
    assert report.max_einstein_deviation < 1e-10
    assert np.max(np.abs(riemann(spec, points[0]).ricci)) < 1e-10


def test_schwarzschild_is_ricci_flat_at_random_points():
    spec = build_preset("schwarzschild", {"M": "1"})
    rng = np.random.default_rng(4)
    for _ in range(20):
        point = [rng.uniform(-5.0, 5.0), rng.uniform(3.0, 50.0), rng.uniform(0.3, 2.8), rng.uniform(-3.0, 3.0)]
        assert np.max(np.abs(riemann(spec, point).ricci)) < 1e-10


def test_sphere_has_one_common_curvature():
    spec = build_preset("sphere", {"n": "3", "R": "1"})
    report = einstein_space_check(spec, [[0.5, 1.0, 0.0], [1.5, 2.0, 1.0], [2.5, 0.7, -2.0]])
    assert report.is_constant_curvature
    assert report.K == pytest.approx(1.0)


def test_two_dimensional_surface_with_varying_curvature():
    report = einstein_space_check(parse_metric_spec(TORUS), [[0.3, 0.0], [2.0, 1.0]])
    assert report.is_einstein
    assert not report.is_constant_curvature
    assert report.K_spread > 0.1


def test_einstein_check_needs_points():
    with pytest.raises(ConfigError):
        einstein_space_check(build_preset("sphere"), [])


# ------------------------------------------------------------
# conformal rescaling
# ------------------------------------------------------------

@pytest.mark.parametrize("n, K", [(3, 1.0), (4, -0.5)])
def test_flat_to_constant_curvature_identities(n, K):
    base = build_preset("flat", {"q": str(n)})
    target = build_preset("constant_curvature", {"n": str(n), "K": str(K)})
    square = " + ".join(f"x{k}^2" for k in range(n))
    psi = f"-ln(1 + {K / 4.0}*({square}))"
    rng = np.random.default_rng(5)
    points = rng.uniform(-0.4, 0.4, size=(3, n))
    report = conformal_identity_check(base, psi, target, points)
    assert report.passed
    assert report.gprime_is_einstein
    assert report.residuals["derived"] < 1e-8
    assert report.metric_residual < 1e-12
    assert report.ricci_prediction_residual < 1e-8


def test_conformal_identities_need_three_dimensions():
    base = build_preset("flat", {"q": "2"})
    with pytest.raises(ConfigError):
        conformal_identity_check(base, "x0", base, [[0.0, 0.0]])


def test_wrong_target_fails_the_metric_check():
    base = build_preset("flat", {"q": "3"})
    target = build_preset("constant_curvature", {"n": "3", "K": "1"})
    report = conformal_identity_check(base, "0.1*x0", target, [[0.2, 0.1, 0.0]])
    assert not report.passed
    assert report.metric_residual > 1e-3


@pytest.mark.parametrize("n", [3, 4])
def test_einstein_form_decides_the_verdict(n):
    base = build_preset("flat", {"q": str(n)})
    target = build_preset("constant_curvature", {"n": str(n), "K": "1"})
    square = " + ".join(f"x{k}^2" for k in range(n))
    points = np.random.default_rng(9).uniform(-0.4, 0.4, size=(20, n))
    report = conformal_identity_check(base, f"-ln(1 + 0.25*({square}))", target, points)
    assert report.checked_forms == ("derived", "einstein_derived")
    assert report.checked_residual == max(report.residuals[f] for f in report.checked_forms)
    assert report.checked_residual < 1e-6
    assert report.passed


def test_diagnostic_forms_cannot_rescue_a_failing_identity():
    base = build_preset("flat", {"q": "3"})
    target = build_preset("constant_curvature", {"n": "3", "K": "1"})
    report = conformal_identity_check(base, "-ln(1 + 0.3*(x0^2 + x1^2 + x2^2))", target, [[0.2, 0.1, -0.3]])
    assert report.checked_residual > 1e-3
    assert not report.passed
