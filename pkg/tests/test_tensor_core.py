import math

import numpy as np
import pytest

from curvature import riemann
from errors import ConfigError, ShapeError, SingularMetricError, SlotKindError
from metric_catalog import build_preset
from tensor_core import (
    DenseTensor,
    Signature,
    SlotKind,
    Tolerance,
    check_nondegenerate,
    check_symmetry,
    contract,
    raise_lower,
    riemann_symmetry_residuals,
)

DOWN = SlotKind.COORD_DOWN
UP = SlotKind.COORD_UP


@pytest.fixture(scope="module")
def sphere_equator():
    spec = build_preset("sphere", {"n": "2", "R": "1"})
    return riemann(spec, [math.pi / 2, 0.3])


# ------------------------------------------------------------
# signature
# ------------------------------------------------------------

@pytest.mark.parametrize("text", ["(-,+,+,+)", "-,+,+,+", "-+++", "-1,1,1,1"])
def test_signature_parses_every_spelling(text):
    sig = Signature.from_string(text)
    assert sig.signs == (-1, 1, 1, 1)
    assert str(sig) == "(-,+,+,+)"
    assert (sig.q_minus, sig.p_plus) == (1, 3)


@pytest.mark.parametrize("text", ["", "()", "+,x"])
def test_signature_rejects_bad_text(text):
    with pytest.raises(ConfigError):
        Signature.from_string(text)


def test_tolerance_rejects_negative():
    with pytest.raises(ConfigError):
        Tolerance(abs_tol=-1.0)
    assert Tolerance(1e-9, 1e-9).accepts(1.5e-9, scale=1.0)


# ------------------------------------------------------------
# contraction
# ------------------------------------------------------------

def test_trace_of_identity():
    delta = DenseTensor.from_array(np.eye(3), [UP, DOWN])
    assert float(contract(delta, 0, 1).array) == 3.0


def test_signature_is_its_own_inverse():
    sig = Signature.minus_plus(1, 3)
    eta = DenseTensor.from_array(sig.eta, [SlotKind.FRAME_DOWN] * 2)
    raised = raise_lower(eta, 1, sig, "up")
    assert np.array_equal(raised.array, np.eye(4))


def test_like_slots_need_a_metric():
    t = DenseTensor.from_array(np.ones((2, 2)), [DOWN, DOWN])
    with pytest.raises(SlotKindError):
        contract(t, 0, 1)


def test_extent_mismatch():
    t = DenseTensor.from_array(np.ones((2, 3)), [UP, DOWN])
    with pytest.raises(ShapeError):
        contract(t, 0, 1)


def test_ricci_of_unit_sphere_equals_metric(sphere_equator):
    b = sphere_equator
    g = DenseTensor.from_array(b.metric, [DOWN, DOWN])
    lower = DenseTensor.from_array(b.riemann_lower, [DOWN] * 4)
    ricci = contract(lower, 0, 3, g).array
    assert np.allclose(ricci, b.metric, atol=1e-10)


# ------------------------------------------------------------
# symmetry checks
# ------------------------------------------------------------

def test_antisymmetrized_tensor_has_zero_deviation():
    rng = np.random.default_rng(1)
    a = rng.normal(size=(4, 4))
    t = DenseTensor.from_array(a - a.T, [DOWN, DOWN])
    assert check_symmetry(t, (1, 0), -1) == 0.0


def test_zero_tensor_is_symmetric_every_way():
    t = DenseTensor.from_array(np.zeros((3, 3, 3, 3)), [DOWN] * 4)
    assert check_symmetry(t, (2, 3, 0, 1), 1) == 0.0
    assert check_symmetry(t, (1, 0, 2, 3), -1) == 0.0


def test_sphere_riemann_pair_swap(sphere_equator):
    t = DenseTensor.from_array(sphere_equator.riemann_lower, [DOWN] * 4)
    assert check_symmetry(t, (2, 3, 0, 1), 1) < 1e-9


def test_permutation_mixing_extents_is_rejected():
    t = DenseTensor.from_array(np.zeros((2, 3)), [DOWN, DOWN])
    with pytest.raises(ShapeError):
        check_symmetry(t, (1, 0), 1)


# ------------------------------------------------------------
# raising and lowering
# ------------------------------------------------------------

def test_lower_timelike_vector():
    sig = Signature.minus_plus(1, 3)
    v = DenseTensor.from_array([1.0, 0.0, 0.0, 0.0], [SlotKind.FRAME_UP])
    assert list(raise_lower(v, 0, sig, "down").array) == [-1.0, 0.0, 0.0, 0.0]


def test_round_trip_on_random_tensor():
    rng = np.random.default_rng(7)
    a = rng.normal(size=(3, 3))
    g = DenseTensor.from_array(a @ a.T + 3.0 * np.eye(3), [DOWN, DOWN])
    t = DenseTensor.from_array(rng.normal(size=(3, 3, 3)), [DOWN, UP, DOWN])
    back = raise_lower(raise_lower(t, 2, g, "up"), 2, g, "down")
    assert np.max(np.abs(back.array - t.array)) < 1e-12


def test_sphere_riemann_raise_then_lower(sphere_equator):
    g = DenseTensor.from_array(sphere_equator.metric, [DOWN, DOWN])
    t = DenseTensor.from_array(sphere_equator.riemann_lower, [DOWN] * 4)
    back = raise_lower(raise_lower(t, 0, g, "up"), 0, g, "down")
    assert np.max(np.abs(back.array - t.array)) < 1e-10


def test_raising_an_upper_slot_fails():
    v = DenseTensor.from_array([1.0, 2.0], [UP])
    with pytest.raises(SlotKindError):
        raise_lower(v, 0, DenseTensor.from_array(np.eye(2), [DOWN, DOWN]), "up")


def test_singular_metric():
    with pytest.raises(SingularMetricError):
        check_nondegenerate(np.array([[1.0, 1.0], [1.0, 1.0]]))


def test_symmetry_residuals_of_frame_riemann(sphere_equator):
    assert max(riemann_symmetry_residuals(sphere_equator.riemann_frame).values()) < 1e-13
    broken = np.zeros((2, 2, 2, 2))
    broken[0, 1, 0, 1] = 1.0
    residuals = riemann_symmetry_residuals(broken)
    assert residuals["antisym_ab"] == 1.0 and residuals["antisym_cd"] == 1.0
