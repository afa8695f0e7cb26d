"""
jacobi.py

Geodesic deviation in the parallel-transported frame, conjugate-point
detection, and the validity radius of the normal chart around a point.

With unit frame velocity e and M^A_C = R^A_BCD e^B e^D the deviation
equation reads J'' = M J; on a sphere of curvature K the transverse
block is J'' = -K J.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import optimize
from scipy.stats import norm, qmc

from curvature import geometry_at, to_frame
from errors import ChartValidityError, ConfigError
from metric_catalog import MetricSpec, check_domain
from normal_coords import (
    GeodesicPath,
    RayState,
    direction_norm,
    five_point_residual,
    integrate_radial_geodesic,
    ray_rhs,
    rk4_march,
    rk4_step,
)
from tensor_core import Signature
from utils.constants import (
    BISECT_MAXITER,
    BISECT_XTOL,
    DEFAULT_S_MAX,
    GOLDEN_FRACTION,
    GRAZE_REFINE,
    GRAZE_THRESHOLD,
    RK4_STEPS,
)
from utils.helpers import thread_cap

logger = logging.getLogger(__name__)

NULL_DIRECTION_TOL = 1e-6
MAX_SHRINKS = 8


# ------------------------------------------------------------
# TRANSVERSE FRAME
# ------------------------------------------------------------

def transverse_basis(e: np.ndarray, signature: Signature) -> np.ndarray:
    """
    eta-orthonormal frame vectors orthogonal to e, as columns (n, n-1).

    Raises
    ------
    ConfigError
        e is null.
    """
    eta = signature.eta
    norm_e = float(e @ eta @ e)
    if abs(norm_e) < NULL_DIRECTION_TOL:
        raise ConfigError("null directions have no geodesic-ball normalization")
    basis: list[np.ndarray] = []
    for axis in range(e.size):
        x = np.zeros(e.size)
        x[axis] = 1.0
        x -= (x @ eta @ e) / norm_e * e
        for b in basis:
            x -= (x @ eta @ b) / (b @ eta @ b) * b
        length = float(x @ eta @ x)
        if abs(length) > 1e-8:
            basis.append(x / math.sqrt(abs(length)))
        if len(basis) == e.size - 1:
            break
    return np.column_stack(basis)


# ------------------------------------------------------------
# JACOBI FIELD
# ------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class JacobiField:
    """
    Fundamental transverse Jacobi solution along a path, J(0) = 0, J'(0) = I.

    J[i] and dJ[i] are (n-1, n-1) transverse blocks at arclength s[i];
    det[i] = det J[i].
    """

    path: GeodesicPath
    unit_direction: np.ndarray
    transverse: np.ndarray
    s: np.ndarray
    J: np.ndarray
    dJ: np.ndarray
    det: np.ndarray
    wronskian_drift: float
    ode_residual: float
    states: np.ndarray
    rhs: Callable
    layout: RayState

    @property
    def s_max(self) -> float:
        return float(self.s[-1])

    @property
    def speed(self) -> float:
        return self.s_max

    def transverse_block(self, state: np.ndarray) -> np.ndarray:
        W = self.layout.get(state, "W")
        signs = np.array([float(c @ self.path.spec.signature.eta @ c) for c in self.transverse.T])
        return signs[:, None] * (self.transverse.T @ self.path.spec.signature.eta @ W)

    def state_at(self, s: float) -> np.ndarray:
        """Joint ray state at arclength s by a partial Runge-Kutta step from the node below."""
        i = max(min(int(np.searchsorted(self.s, s, side="right")) - 1, self.s.size - 2), 0)
        h = (s - self.s[i]) / self.speed
        return rk4_step(self.rhs, self.path.t[i], self.states[i], h) if h else self.states[i]

    def det_at(self, s: float) -> float:
        return float(np.linalg.det(self.transverse_block(self.state_at(s))))

    def regime(self, tol: float = 1e-6) -> str:
        """
        Qualitative behaviour of det J against free motion s^(n-1):
        "oscillating" (sign change), "inverted_oscillator" (faster growth),
        "focusing" (slower growth) or "free".
        """
        if np.any(self.det[1:-1] * self.det[2:] < 0):
            return "oscillating"
        free = self.s_max ** (self.J.shape[1])
        ratio = abs(self.det[-1]) / free
        if ratio > 1.0 + tol:
            return "inverted_oscillator"
        if ratio < 1.0 - tol:
            return "focusing"
        return "free"


def _jacobi_source(z: np.ndarray, eta_diag: np.ndarray, layout: RayState):
    def source(t, y, frame_riemann, dy):
        M = eta_diag[:, None] * np.einsum("abcd,b,d->ac", frame_riemann, z, z)
        dy[layout.slices["W"][0]] = layout.get(y, "dW").ravel()
        dy[layout.slices["dW"][0]] = (M @ layout.get(y, "W")).ravel()

    return source


def integrate_jacobi(path: GeodesicPath) -> JacobiField:
    """
    Integrate the transverse Jacobi fundamental matrix on the path grid.

    The path parameter t in [0, 1] maps to arclength s = |z| t.

    Raises
    ------
    ConfigError
        Null or zero direction.
    ChartValidityError
        The ray leaves the chart.
    """
    spec, n, z = path.spec, path.spec.dim, path.direction
    speed = direction_norm(z, spec.signature)
    if speed == 0.0:
        raise ConfigError("Jacobi fields need a non-zero direction")
    e = z / speed
    T = transverse_basis(e, spec.signature)

    layout = RayState(n, [("W", (n, n - 1)), ("dW", (n, n - 1))])
    rhs = ray_rhs(spec, layout, _jacobi_source(z, spec.signature.diagonal, layout), curvature=True)
    y0 = layout.pack(u=path.origin, w=path.velocities[0], F=path.frames[0], dW=speed * T)
    states, derivs = rk4_march(rhs, y0, path.t)

    eta = spec.signature.eta
    W, dW = layout.get(states, "W"), layout.get(states, "dW")
    signs = np.array([float(c @ eta @ c) for c in T.T])
    J = np.einsum("k,ak,tab->tkb", signs, T, np.einsum("ac,tcb->tab", eta, W))
    dJ = np.einsum("k,ak,tab->tkb", signs, T, np.einsum("ac,tcb->tab", eta, dW)) / speed
    wronskian = np.einsum("tak,ab,tbl->tkl", W, eta, dW)
    scale = max(1.0, float(np.max(np.abs(W))) * float(np.max(np.abs(dW))))
    drift = float(np.max(np.abs(wronskian - wronskian.transpose(0, 2, 1)))) / scale
    h = 1.0 / path.steps
    residual = five_point_residual(dW, layout.get(derivs, "dW"), h) / speed**2

    return JacobiField(
        path=path,
        unit_direction=e,
        transverse=T,
        s=speed * path.t,
        J=J,
        dJ=dJ,
        det=np.linalg.det(J),
        wronskian_drift=drift,
        ode_residual=residual,
        states=states,
        rhs=rhs,
        layout=layout,
    )


# ------------------------------------------------------------
# CONJUGATE POINTS
# ------------------------------------------------------------

@dataclass(frozen=True)
class ConjugateReport:
    direction: tuple[float, ...]
    s_conjugate: float | None
    bracket: tuple[float, float] | None
    iterations: int
    det_at_root: float | None
    refined: bool
    s_max: float
    regime: str
    curvature_at_conjugate: float | None = None
    position: tuple[float, ...] | None = None
    wronskian_drift: float = 0.0
    profile: tuple[tuple[float, float], ...] = ()


def _first_sign_change(s: np.ndarray, det: np.ndarray, s_max: float) -> int | None:
    for i in range(1, s.size - 1):
        if s[i] >= s_max:
            break
        if det[i] * det[i + 1] < 0 or det[i + 1] == 0.0:
            return i
    return None


def _grazes(det: np.ndarray) -> bool:
    a = np.abs(det)
    for i in range(1, a.size - 1):
        if a[i] <= a[i - 1] and a[i] <= a[i + 1] and a[i] < GRAZE_THRESHOLD:
            return True
    return False


def find_conjugate_point(field: JacobiField, s_max: float | None = None) -> ConjugateReport:
    """
    First conjugate point along the field up to s_max.

    The determinant is scanned for a sign change on the grid; a grazing
    dip below GRAZE_THRESHOLD without sign change triggers one x4 grid
    refinement. A bracket is refined with bisection to BISECT_XTOL.
    Absence of a conjugate point is a valid result.
    """
    s_max = field.s_max if s_max is None else float(s_max)
    if s_max > field.s_max * (1.0 + 1e-12):
        raise ConfigError(f"field integrated to s = {field.s_max:.6g}, cannot scan to {s_max:.6g}")

    refined = False
    i = _first_sign_change(field.s, field.det, s_max)
    if i is None and _grazes(field.det):
        logger.info("grazing determinant along %s, refining grid x%d", list(field.unit_direction), GRAZE_REFINE)
        path = field.path
        finer = integrate_radial_geodesic(path.spec, path.origin, path.direction, steps=path.steps * GRAZE_REFINE)
        field = integrate_jacobi(finer)
        refined = True
        i = _first_sign_change(field.s, field.det, s_max)

    direction = tuple(float(x) for x in field.unit_direction)
    regime = field.regime()
    profile = tuple(zip(field.s.tolist(), field.det.tolist()))
    if i is None:
        return ConjugateReport(
            direction, None, None, 0, None, refined, s_max, regime,
            wronskian_drift=field.wronskian_drift, profile=profile,
        )

    lo, hi = float(field.s[i]), float(field.s[i + 1])
    if field.det[i + 1] == 0.0:
        root, iterations = hi, 0
    else:
        root, result = optimize.bisect(field.det_at, lo, hi, xtol=BISECT_XTOL, maxiter=BISECT_MAXITER, full_output=True)
        iterations = result.iterations
    state = field.state_at(root)
    position = field.layout.get(state, "u")
    _, _, lower = geometry_at(field.path.spec, position)
    magnitude = float(np.max(np.abs(to_frame(lower, field.layout.get(state, "F")))))
    return ConjugateReport(
        direction=direction,
        s_conjugate=float(root),
        bracket=(lo, hi),
        iterations=iterations,
        det_at_root=field.det_at(root),
        refined=refined,
        s_max=s_max,
        regime=regime,
        curvature_at_conjugate=magnitude,
        position=tuple(float(x) for x in position),
        wronskian_drift=field.wronskian_drift,
        profile=profile,
    )


# ------------------------------------------------------------
# NORMAL CHART RADIUS
# ------------------------------------------------------------

def sample_directions(dim: int, count: int, seed: int = 0) -> np.ndarray:
    """
    Deterministic unit directions in frame components.

    Two dimensions use evenly spaced angles offset by a golden-ratio
    fraction of the seed; higher dimensions map a scrambled Halton
    sequence through the normal quantile function onto the sphere.
    """
    if count < 1:
        raise ConfigError(f"need at least one direction, got {count}")
    if dim == 2:
        offset = math.fmod(GOLDEN_FRACTION * (1 + seed), 1.0)
        angles = 2.0 * math.pi * (np.arange(count) + offset) / count
        return np.column_stack([np.cos(angles), np.sin(angles)])
    points = qmc.Halton(d=dim, scramble=True, seed=seed).random(count)
    gauss = norm.ppf(np.clip(points, 1e-12, 1.0 - 1e-12))
    return gauss / np.linalg.norm(gauss, axis=1, keepdims=True)


@dataclass(frozen=True)
class SkippedDirection:
    index: int
    direction: tuple[float, ...]
    reason: str


@dataclass(frozen=True)
class ChartRadiusReport:
    """
    radius is the smallest conjugate distance found (None if none);
    certified_radius is the smallest distance certified free of conjugate
    points, counting directions cut short by the chart boundary.
    """

    radius: float | None
    direction_of_minimum: tuple[float, ...] | None
    certified_radius: float | None
    reports: tuple[ConjugateReport, ...]
    skipped: tuple[SkippedDirection, ...]


def _scan_direction(spec: MetricSpec, origin, e: np.ndarray, s_max: float, steps: int) -> ConjugateReport:
    reach = s_max
    for attempt in range(MAX_SHRINKS + 1):
        try:
            path = integrate_radial_geodesic(spec, origin, reach * e, steps=steps)
            return find_conjugate_point(integrate_jacobi(path), reach)
        except ChartValidityError as exc:
            if attempt == MAX_SHRINKS:
                raise
            logger.info("direction %s leaves the chart before s = %.6g, halving (%s)", list(e), reach, exc)
            reach *= 0.5


def normal_chart_radius(
    spec: MetricSpec,
    origin,
    n_dirs: int,
    seed: int = 0,
    s_max: float = DEFAULT_S_MAX,
    steps: int = RK4_STEPS,
) -> ChartRadiusReport:
    """
    Minimum first-conjugate distance over a deterministic direction set.

    Directions are scanned in parallel (GEOM_THREADS caps the pool);
    results keep direction order. Null directions and directions that
    cannot be integrated inside the chart are skipped and listed.
    """
    origin = check_domain(spec, origin)
    if s_max <= 0:
        raise ConfigError(f"s_max must be positive, got {s_max}")
    raw = sample_directions(spec.dim, n_dirs, seed)

    def task(item):
        index, d = item
        length = float(d @ spec.signature.eta @ d)
        if abs(length) < NULL_DIRECTION_TOL:
            return SkippedDirection(index, tuple(map(float, d)), "null direction")
        e = d / math.sqrt(abs(length))
        try:
            return _scan_direction(spec, origin, e, s_max, steps)
        except ChartValidityError as exc:
            return SkippedDirection(index, tuple(map(float, e)), f"chart exit: {exc}")

    with ThreadPoolExecutor(max_workers=thread_cap()) as pool:
        outcomes = list(pool.map(task, enumerate(raw)))

    reports = tuple(o for o in outcomes if isinstance(o, ConjugateReport))
    skipped = tuple(o for o in outcomes if isinstance(o, SkippedDirection))
    for item in skipped:
        logger.warning("skipped direction %d: %s", item.index, item.reason)

    found = [r for r in reports if r.s_conjugate is not None]
    best = min(found, key=lambda r: r.s_conjugate) if found else None
    certified = [r.s_conjugate if r.s_conjugate is not None else r.s_max for r in reports]
    return ChartRadiusReport(
        radius=best.s_conjugate if best else None,
        direction_of_minimum=best.direction if best else (
            min(reports, key=lambda r: r.s_max).direction if reports else None
        ),
        certified_radius=min(certified) if certified else None,
        reports=reports,
        skipped=skipped,
    )
