"""
normal_coords.py

Radial geodesics with parallel-transported frames, the coefficient
fields A_(A)(C)(D)(t) and B_(A)(B)(C)(D)(t) of the normal-coordinate
frame, the reconstructed normal-coordinate metric, the conformal factor
sigma, and an independent exponential-map oracle.

Along the ray u(t) = exp(t z) with the frame transported in parallel:

    B'' = -t R_ABCD - Pi[ z^L z^M R_ABLN eta^NP B_PMCD ],   B(0) = B'(0) = 0
    A'' = z^B B''_ABCD,                                      A(0) = A'(0) = 0

where R_ABCD is the frame Riemann tensor at u(t) and Pi projects onto
tensors with the Riemann symmetries. The metric in normal coordinates is

    g_EF(z) = eta_EF + sym[ Q_ABCD P^BA_E P^CD_F ],
    Q = 1/2 [ B + 1/2 eta^MN A_MBA A_NCD ],   P^XY_E = z^X d^Y_E - z^Y d^X_E
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import solve_ivp

from curvature import christoffel_from_jet, geometry_at, to_frame
from errors import ChartValidityError, ConfigError, DomainError, NumericalQualityError
from metric_catalog import (
    MetricSpec,
    build_preset,
    check_domain,
    default_origin,
    eval_metric,
    eval_metric_derivs,
    vielbein_at,
)
from tensor_core import Signature, riemann_symmetry_residuals
from utils.constants import (
    CALIBRATION_RADIUS,
    CALIBRATION_STEPS,
    DRIFT_TOL,
    FD_EXPMAP_STEP,
    ORACLE_ATOL,
    ORACLE_METHOD,
    ORACLE_RTOL,
    RK4_STEPS,
)

logger = logging.getLogger(__name__)


# ------------------------------------------------------------
# RK4 MARCHER
# ------------------------------------------------------------

Rhs = Callable[[float, np.ndarray], np.ndarray]


def rk4_step(rhs: Rhs, t: float, y: np.ndarray, h: float, k1: np.ndarray | None = None) -> np.ndarray:
    """One classic fourth-order Runge-Kutta step."""
    k1 = rhs(t, y) if k1 is None else k1
    k2 = rhs(t + 0.5 * h, y + 0.5 * h * k1)
    k3 = rhs(t + 0.5 * h, y + 0.5 * h * k2)
    k4 = rhs(t + h, y + h * k3)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def rk4_march(rhs: Rhs, y0: np.ndarray, t_grid: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """
    March y' = rhs(t, y) over a fixed grid.

    Returns
    -------
    (states, derivatives)
        Both (len(t_grid), len(y0)); derivatives[i] = rhs(t_i, y_i).
    """
    states = np.empty((t_grid.size, y0.size))
    derivs = np.empty_like(states)
    states[0] = y0
    for i in range(t_grid.size - 1):
        derivs[i] = rhs(t_grid[i], states[i])
        states[i + 1] = rk4_step(rhs, t_grid[i], states[i], t_grid[i + 1] - t_grid[i], derivs[i])
    derivs[-1] = rhs(t_grid[-1], states[-1])
    return states, derivs


def five_point_residual(values: np.ndarray, derivs: np.ndarray, h: float) -> float:
    """max |D values - derivs| over interior nodes, D the five-point central difference."""
    if values.shape[0] < 5:
        return 0.0
    d = (-values[4:] + 8.0 * values[3:-1] - 8.0 * values[1:-3] + values[:-4]) / (12.0 * h)
    return float(np.max(np.abs(d - derivs[2:-2])))


class RayState:
    """
    Packing of the joint ray state [u, w, F, extra...] into one vector.

    u is the position, w = du/dt, F[a, A] the transported frame vectors;
    extra blocks are named arrays integrated alongside.
    """

    def __init__(self, n: int, extra: Sequence[tuple[str, tuple[int, ...]]] = ()):
        self.n = n
        shapes = [("u", (n,)), ("w", (n,)), ("F", (n, n))] + list(extra)
        self.slices: dict[str, tuple[slice, tuple[int, ...]]] = {}
        offset = 0
        for name, shape in shapes:
            size = int(np.prod(shape))
            self.slices[name] = (slice(offset, offset + size), shape)
            offset += size
        self.size = offset

    def get(self, y: np.ndarray, name: str) -> np.ndarray:
        sl, shape = self.slices[name]
        return y[..., sl].reshape(y.shape[:-1] + shape)

    def pack(self, **blocks: np.ndarray) -> np.ndarray:
        y = np.zeros(self.size)
        for name, value in blocks.items():
            sl, _ = self.slices[name]
            y[sl] = np.asarray(value, dtype=float).ravel()
        return y


def ray_rhs(spec: MetricSpec, layout: RayState, source: Callable | None = None, curvature: bool = False) -> Rhs:
    """
    Right-hand side of the geodesic and parallel-transport equations.

    source(t, y, frame_riemann, dy) fills the derivatives of the extra
    blocks; frame_riemann is None unless curvature is requested.
    """

    def rhs(t: float, y: np.ndarray) -> np.ndarray:
        u, w, F = layout.get(y, "u"), layout.get(y, "w"), layout.get(y, "F")
        try:
            if curvature:
                _, gamma, lower = geometry_at(spec, u)
            else:
                jet = eval_metric_derivs(spec, u, order=1)
                gamma, lower = christoffel_from_jet(jet.value, jet.first), None
        except DomainError as exc:
            raise ChartValidityError(f"geodesic left the chart of {spec.name} at t = {t:.6g}: {exc}") from exc
        dy = np.zeros_like(y)
        dy[layout.slices["u"][0]] = w
        dy[layout.slices["w"][0]] = -np.einsum("abc,b,c->a", gamma, w, w)
        dy[layout.slices["F"][0]] = (-np.einsum("abc,b,cA->aA", gamma, w, F)).ravel()
        if source is not None:
            source(t, y, to_frame(lower, F) if curvature else None, dy)
        return dy

    return rhs


# ------------------------------------------------------------
# GEODESIC PATH
# ------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class GeodesicPath:
    """
    Radial geodesic u(t) = exp_origin(t z), t in [0, 1], with its
    parallel-transported frame.

    frames[i][a, A] are coordinate components of the frame vectors at
    positions[i]; direction holds the frame components z^(A).
    """

    spec: MetricSpec
    origin: np.ndarray
    direction: np.ndarray
    t: np.ndarray
    positions: np.ndarray
    velocities: np.ndarray
    frames: np.ndarray
    steps: int
    geodesic_residual: float
    first_integral_drift: float
    frame_residual: float
    richardson_error: float

    @property
    def endpoint(self) -> np.ndarray:
        return self.positions[-1]

    def quality(self) -> dict[str, float]:
        return {
            "geodesic_residual": self.geodesic_residual,
            "first_integral_drift": self.first_integral_drift,
            "frame_residual": self.frame_residual,
            "richardson_error": self.richardson_error,
        }


def _initial_ray(spec: MetricSpec, origin, z) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    origin = check_domain(spec, origin)
    z = np.asarray(z, dtype=float).reshape(-1)
    if z.size != spec.dim:
        raise ConfigError(f"direction has {z.size} components, {spec.name} needs {spec.dim}")
    if not np.all(np.isfinite(z)):
        raise ConfigError(f"direction must be finite, got {list(z)}")
    frame = vielbein_at(spec, origin)
    return origin, z, frame.e_inv


def integrate_radial_geodesic(spec: MetricSpec, origin, v, steps: int = RK4_STEPS) -> GeodesicPath:
    """
    Integrate the geodesic with initial frame velocity v over t in [0, 1].

    Raises
    ------
    ChartValidityError
        The geodesic leaves the chart domain before t = 1.
    """
    if steps < 2 or steps % 2:
        raise ConfigError(f"steps must be an even number >= 2, got {steps}")
    origin, z, F0 = _initial_ray(spec, origin, v)
    layout = RayState(spec.dim)
    rhs = ray_rhs(spec, layout)
    y0 = layout.pack(u=origin, w=F0 @ z, F=F0)

    t_grid = np.linspace(0.0, 1.0, steps + 1)
    states, derivs = rk4_march(rhs, y0, t_grid)
    half, _ = rk4_march(rhs, y0, np.linspace(0.0, 1.0, steps // 2 + 1))
    richardson = float(np.max(np.abs(states[-1] - half[-1]))) / 15.0

    positions, velocities, frames = layout.get(states, "u"), layout.get(states, "w"), layout.get(states, "F")
    eta = spec.signature.eta
    drift = frame_res = 0.0
    energy0 = None
    for u, w, F in zip(positions, velocities, frames):
        g = eval_metric(spec, u)
        energy = float(w @ g @ w)
        energy0 = energy if energy0 is None else energy0
        drift = max(drift, abs(energy - energy0))
        frame_res = max(frame_res, float(np.max(np.abs(F.T @ g @ F - eta))))
    geo_res = five_point_residual(velocities, layout.get(derivs, "w"), 1.0 / steps)

    logger.debug("geodesic on %s from %s: drift %.2e, richardson %.2e", spec.name, list(origin), drift, richardson)
    return GeodesicPath(
        spec=spec,
        origin=origin,
        direction=z,
        t=t_grid,
        positions=positions,
        velocities=velocities,
        frames=frames,
        steps=steps,
        geodesic_residual=geo_res,
        first_integral_drift=drift,
        frame_residual=frame_res,
        richardson_error=richardson,
    )


# ------------------------------------------------------------
# A / B COEFFICIENT FIELDS
# ------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class NormalExpansion:
    """A(t) and B(t) sampled on the path grid, with their structural residuals."""

    path: GeodesicPath
    t: np.ndarray
    A: np.ndarray
    B: np.ndarray
    residuals: dict

    @property
    def z(self) -> np.ndarray:
        return self.path.direction

    @property
    def signature(self) -> Signature:
        return self.path.spec.signature

    def index_of(self, t: float) -> int:
        idx = int(np.argmin(np.abs(self.t - t)))
        if abs(self.t[idx] - t) > 1e-12:
            raise ConfigError(f"t = {t} is not on the integration grid of {self.t.size - 1} steps")
        return idx


def _ab_source(z: np.ndarray, eta_diag: np.ndarray, layout: RayState):
    """
    A and B integrated as two separate systems:

        A'' = -t z^B R_ABCD - z^L z^M R_ALMN eta^NP A_PCD
        B'' = -t R_ABCD - z^L z^M R_ABLN eta^NP B_PMCD

    A never sees B, so A = z.B is a genuine cross-check. B is not
    projected; its pair-swap and Bianchi symmetries are measured.
    """

    def source(t, y, frame_riemann, dy):
        A, B = layout.get(y, "A"), layout.get(y, "B")
        zzr = np.einsum("l,m,almn->an", z, z, frame_riemann)
        ddA = -t * np.einsum("b,abcd->acd", z, frame_riemann) - np.einsum("an,n,ncd->acd", zzr, eta_diag, A)
        rz = np.einsum("abln,l->abn", frame_riemann, z)
        bz = np.einsum("pmcd,m->pcd", B, z)
        coupling = np.einsum("abn,n,ncd->abcd", rz, eta_diag, bz)
        ddB = -t * frame_riemann - coupling
        dy[layout.slices["A"][0]] = layout.get(y, "dA").ravel()
        dy[layout.slices["dA"][0]] = ddA.ravel()
        dy[layout.slices["B"][0]] = layout.get(y, "dB").ravel()
        dy[layout.slices["dB"][0]] = ddB.ravel()

    return source


def solve_AB(path: GeodesicPath, drift_tol: float = DRIFT_TOL) -> NormalExpansion:
    """
    Integrate the A/B system along a path on the path's own grid.

    The ray is re-marched jointly with A and B so the source curvature is
    evaluated at every Runge-Kutta stage in the transported frame. Every
    entry of the residuals dict is measured on the integrated solutions;
    nothing is imposed by projection.

    Raises
    ------
    NumericalQualityError
        Antisymmetry of A, Riemann symmetries of B, or A = z.B drifts
        above drift_tol.
    """
    spec, n, z = path.spec, path.spec.dim, path.direction
    layout = RayState(n, [("A", (n, n, n)), ("dA", (n, n, n)), ("B", (n, n, n, n)), ("dB", (n, n, n, n))])
    rhs = ray_rhs(spec, layout, _ab_source(z, spec.signature.diagonal, layout), curvature=True)
    y0 = layout.pack(u=path.origin, w=path.velocities[0], F=path.frames[0])
    states, _ = rk4_march(rhs, y0, path.t)
    A, B = layout.get(states, "A"), layout.get(states, "B")

    sym = {"antisym_ab": 0.0, "antisym_cd": 0.0, "pair_swap": 0.0, "bianchi": 0.0}
    for b in B:
        for key, value in riemann_symmetry_residuals(b).items():
            sym[key] = max(sym[key], value)
    residuals = {
        "A_antisymmetry": float(np.max(np.abs(A + A.transpose(0, 1, 3, 2)))),
        "A_equals_zB": float(np.max(np.abs(A - np.einsum("b,tabcd->tacd", z, B)))),
        "A_at_origin": float(np.max(np.abs(A[0]))),
    }
    residuals.update({f"B_{k}": v for k, v in sym.items()})
    worst = max(residuals, key=residuals.get)
    if residuals[worst] > drift_tol:
        raise NumericalQualityError(f"A/B invariant {worst} drifted to {residuals[worst]:.3e} (limit {drift_tol:g})")
    return NormalExpansion(path=path, t=path.t, A=A, B=B, residuals=residuals)


# ------------------------------------------------------------
# RECONSTRUCTION
# ------------------------------------------------------------

@dataclass(frozen=True)
class QuadraticFormConvention:
    """
    Variant of the quadratic form: overall sign of the sym[Q P P] term and
    coefficient set, "derived" Q = 1/2[B + 1/2 eta A A] or "swapped"
    Q = 1/2[1/2 eps_B B + eta A A] with eps_B = eta_BB on the second slot.

    In the derived set B_ABCD is fully covariant and meets the contravariant
    z^B of P directly, so no eps_B appears.
    """

    sign: int = 1
    coefficients: str = "derived"

    @property
    def name(self) -> str:
        return f"{'plus' if self.sign > 0 else 'minus'}_{self.coefficients}"


CANDIDATE_CONVENTIONS = tuple(
    QuadraticFormConvention(sign, coefficients) for sign in (1, -1) for coefficients in ("derived", "swapped")
)


@dataclass(frozen=True)
class CalibrationResult:
    selected: QuadraticFormConvention
    residuals: dict


def quadratic_tensor(exp: NormalExpansion, t: float = 1.0, convention: QuadraticFormConvention | None = None) -> np.ndarray:
    """Q_ABCD at grid time t, rescaled by A/t^2 and B/t^3."""
    convention = convention or quadratic_form_convention().selected
    idx = exp.index_of(t)
    n = exp.z.size
    if exp.t[idx] == 0.0:
        return np.zeros((n, n, n, n))
    tt = exp.t[idx]
    A = exp.A[idx] / tt**2
    B = exp.B[idx] / tt**3
    eta = exp.signature.diagonal
    aa = np.einsum("m,mba,mcd->abcd", eta, A, A)
    if convention.coefficients == "derived":
        return 0.5 * (B + 0.5 * aa)
    eps_B = np.einsum("b,abcd->abcd", eta, B)
    return 0.5 * (0.5 * eps_B + aa)


def _p_tensor(z: np.ndarray) -> np.ndarray:
    """P[X, Y, E] = z^X d^Y_E - z^Y d^X_E."""
    eye = np.eye(z.size)
    return np.einsum("x,ye->xye", z, eye) - np.einsum("y,xe->xye", z, eye)


def reconstruct_metric(exp: NormalExpansion, t: float = 1.0, convention: QuadraticFormConvention | None = None) -> np.ndarray:
    """
    Normal-coordinate metric at the point t*z.

    Parameters
    ----------
    t : float
        A node of the expansion grid; 1.0 gives the metric at z.
    convention : QuadraticFormConvention, optional
        Defaults to the calibrated convention.
    """
    convention = convention or quadratic_form_convention().selected
    Q = quadratic_tensor(exp, t, convention)
    P = _p_tensor(t * exp.z)
    term = np.einsum("abcd,bae,cdf->ef", Q, P, P)
    return exp.signature.eta + convention.sign * 0.5 * (term + term.T)


def gauss_residual(exp: NormalExpansion, t: float = 1.0) -> float:
    """max |g_norm(tz) tz - eta tz|; radial lines are geodesics in normal coordinates."""
    zt = t * exp.z
    return float(np.max(np.abs(reconstruct_metric(exp, t) @ zt - exp.signature.eta @ zt)))


def taylor_normal_metric(spec: MetricSpec, origin, z) -> np.ndarray:
    """Second-order expansion eta_ab + 1/3 R_acbd z^c z^d (frame components at origin)."""
    origin = check_domain(spec, origin)
    z = np.asarray(z, dtype=float)
    _, _, lower = geometry_at(spec, origin)
    frame_riemann = to_frame(lower, vielbein_at(spec, origin).e_inv)
    return spec.signature.eta + np.einsum("acbd,c,d->ab", frame_riemann, z, z) / 3.0


# ------------------------------------------------------------
# EXPONENTIAL-MAP ORACLE
# ------------------------------------------------------------

def shoot_geodesic(spec: MetricSpec, origin, z, frame_inv: np.ndarray | None = None) -> np.ndarray:
    """
    exp_origin(z) by adaptive high-order integration of the geodesic equation.

    Raises
    ------
    ChartValidityError
        The geodesic leaves the chart before t = 1.
    NumericalQualityError
        The integrator reports failure.
    """
    origin = np.asarray(origin, dtype=float)
    n = spec.dim
    if frame_inv is None:
        frame_inv = vielbein_at(spec, origin).e_inv

    def rhs(t, y):
        u, w = y[:n], y[n:]
        try:
            jet = eval_metric_derivs(spec, u, order=1)
        except DomainError as exc:
            raise ChartValidityError(f"geodesic left the chart of {spec.name} at t = {t:.6g}: {exc}") from exc
        gamma = christoffel_from_jet(jet.value, jet.first)
        return np.concatenate([w, -np.einsum("abc,b,c->a", gamma, w, w)])

    y0 = np.concatenate([origin, frame_inv @ np.asarray(z, dtype=float)])
    sol = solve_ivp(rhs, (0.0, 1.0), y0, method=ORACLE_METHOD, rtol=ORACLE_RTOL, atol=ORACLE_ATOL)
    if not sol.success:
        raise NumericalQualityError(f"oracle integration failed: {sol.message}")
    return sol.y[:n, -1]


def direction_norm(z, signature: Signature) -> float:
    """sqrt |eta(z, z)|."""
    z = np.asarray(z, dtype=float)
    return math.sqrt(abs(float(z @ signature.eta @ z)))


def exp_map_pullback(spec: MetricSpec, origin, z_grid, conjugate_radius: float | None = None) -> np.ndarray:
    """
    Metric in normal coordinates by differentiating the exponential map.

    For each z the Jacobian D = d exp / dz comes from central differences
    with step FD_EXPMAP_STEP * max(1, |z|), and g_norm(z) = D^T g(exp z) D.

    Returns
    -------
    np.ndarray
        (len(z_grid), n, n).

    Raises
    ------
    ChartValidityError
        A grid point lies at or beyond the conjugate radius.
    """
    origin = check_domain(spec, origin)
    frame_inv = vielbein_at(spec, origin).e_inv
    z_grid = np.atleast_2d(np.asarray(z_grid, dtype=float))
    n = spec.dim
    out = np.empty((z_grid.shape[0], n, n))
    for k, z in enumerate(z_grid):
        norm = direction_norm(z, spec.signature)
        if conjugate_radius is not None and norm >= conjugate_radius:
            raise ChartValidityError(
                f"|z| = {norm:.6g} reaches the conjugate radius {conjugate_radius:.6g}; normal chart invalid"
            )
        if not np.any(z):
            out[k] = spec.signature.eta
            continue
        h = FD_EXPMAP_STEP * max(1.0, float(np.max(np.abs(z))))
        jac = np.empty((n, n))
        for a in range(n):
            step = np.zeros(n)
            step[a] = h
            plus = shoot_geodesic(spec, origin, z + step, frame_inv)
            minus = shoot_geodesic(spec, origin, z - step, frame_inv)
            jac[:, a] = (plus - minus) / (2.0 * h)
        g = eval_metric(spec, shoot_geodesic(spec, origin, z, frame_inv))
        pulled = jac.T @ g @ jac
        out[k] = 0.5 * (pulled + pulled.T)
    return out


# ------------------------------------------------------------
# CONVENTION CALIBRATION
# ------------------------------------------------------------

@lru_cache(maxsize=1)
def quadratic_form_convention() -> CalibrationResult:
    """
    Pick the quadratic-form variant that reproduces the exponential-map
    metric at |z| = CALIBRATION_RADIUS on both the unit 2-sphere and the
    Lorentzian constant-curvature plane; a candidate's residual is the
    worse of the two.
    """
    charts = [
        build_preset("sphere", {"n": "2", "R": "1.0"}),
        build_preset("constant_curvature", {"n": "2", "K": "1.0", "p": "1"}),
    ]
    z = CALIBRATION_RADIUS * np.array([math.sin(0.7), math.cos(0.7)])
    residuals = {c.name: 0.0 for c in CANDIDATE_CONVENTIONS}
    for spec in charts:
        origin = default_origin(spec)
        exp = solve_AB(integrate_radial_geodesic(spec, origin, z, steps=CALIBRATION_STEPS))
        oracle = exp_map_pullback(spec, origin, [z])[0]
        for c in CANDIDATE_CONVENTIONS:
            delta = float(np.max(np.abs(reconstruct_metric(exp, 1.0, c) - oracle)))
            residuals[c.name] = max(residuals[c.name], delta)
    selected = min(CANDIDATE_CONVENTIONS, key=lambda c: residuals[c.name])
    logger.info("quadratic form convention %s selected (residuals %s)", selected.name, residuals)
    return CalibrationResult(selected=selected, residuals=residuals)


# ------------------------------------------------------------
# CONFORMAL FACTOR
# ------------------------------------------------------------

def classical_angular_momentum(z, dz_ds) -> np.ndarray:
    """L^AB = z^B (dz/ds)^A - z^A (dz/ds)^B."""
    z = np.asarray(z, dtype=float)
    v = np.asarray(dz_ds, dtype=float)
    return np.outer(v, z) - np.outer(z, v)


@dataclass(frozen=True, eq=False)
class ConformalFactor:
    z: np.ndarray
    velocity: np.ndarray
    sigma: float
    exp_minus_2sigma: float
    L_classical: np.ndarray
    line_element_residual: float


def conformal_factor(exp: NormalExpansion, z=None, dz_ds=None, reference: np.ndarray | None = None) -> ConformalFactor:
    """
    Conformal factor along (z, dz/ds) at the end of the expansion ray.

    dz/ds is normalized to unit length in the reconstructed metric, then
    exp(-2 sigma) = 1 + sign * Q_ABCD L^AB L^CD with the calibrated sign
    (times the sign of the normalized length for timelike velocities).

    line_element_residual is |exp(2 sigma) eta(v, v) - g(v, v)| with g the
    normal-coordinate metric at z from the exponential map.

    Parameters
    ----------
    reference : np.ndarray, optional
        That metric, when already at hand; otherwise it is computed with
        exp_map_pullback.

    Raises
    ------
    ConfigError
        z differs from the expansion's endpoint.
    DomainError
        Velocity is null in the reconstructed metric.
    ChartValidityError
        The bracket is not positive.
    """
    z_exp = exp.z
    if z is not None and np.max(np.abs(np.asarray(z, dtype=float) - z_exp)) > 1e-12:
        raise ConfigError("conformal_factor must be evaluated at the expansion's z")
    if dz_ds is None:
        raise ConfigError("conformal_factor needs a velocity dz/ds")
    convention = quadratic_form_convention().selected
    g_norm = reconstruct_metric(exp, 1.0, convention)
    v = np.asarray(dz_ds, dtype=float)
    length = float(v @ g_norm @ v)
    if abs(length) < 1e-14:
        raise DomainError("velocity is null in the normal-coordinate metric")
    v = v / math.sqrt(abs(length))

    L = classical_angular_momentum(z_exp, v)
    Q = quadratic_tensor(exp, 1.0, convention)
    bracket = 1.0 + convention.sign * math.copysign(1.0, length) * float(np.einsum("abcd,ab,cd->", Q, L, L))
    if bracket <= 0.0:
        raise ChartValidityError(f"conformal bracket {bracket:.6g} is not positive")
    sigma = -0.5 * math.log(bracket)
    if reference is None:
        reference = exp_map_pullback(exp.path.spec, exp.path.origin, [z_exp])[0]
    eta = exp.signature.eta
    residual = abs(math.exp(2.0 * sigma) * float(v @ eta @ v) - float(v @ np.asarray(reference) @ v))
    return ConformalFactor(
        z=z_exp,
        velocity=v,
        sigma=sigma,
        exp_minus_2sigma=bracket,
        L_classical=L,
        line_element_residual=residual,
    )
