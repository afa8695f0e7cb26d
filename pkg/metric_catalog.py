"""
metric_catalog.py

Metric definitions: the MetricSpec chart type, the metric document
parser and printer, shipped presets, and evaluation of metric values,
derivatives, and vielbeins at points.

Document grammar (one directive per line, '#' starts a comment):

    name = <text>
    dim = n
    signature = (-,+,+,+)
    coords = t, x, y, z
    domain <coord> = (a, b)
    g[i][j] = <expr>           # 0-based, i <= j; unset components are 0
    preset <name> key=value ...
"""

from __future__ import annotations

import logging
import math
import re
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

import dual
from errors import ConfigError, DomainError, MetricSyntaxError, SignatureMismatchError
from expressions import ExprNode, evaluate, is_constant, parse_expression, print_expression
from tensor_core import Signature, check_nondegenerate
from utils.constants import (
    FD_METRIC_STEP,
    FD_METRIC_STEP2,
    FRAME_TOL,
    HORIZON_MARGIN,
    POLE_MARGIN,
    ZERO_COMPONENT_TOL,
)

logger = logging.getLogger(__name__)


# ------------------------------------------------------------
# DOMAIN TYPES
# ------------------------------------------------------------

@dataclass(frozen=True)
class MetricSpec:
    """
    A single chart of a pseudo-Riemannian metric.

    Parameters
    ----------
    name : str
        Label echoed in reports.
    dim : int
        Dimension n >= 2.
    coords : tuple[str, ...]
        Coordinate names, length n.
    signature : Signature
        Expected signs of the metric eigenvalues.
    components : tuple[tuple[int, int, ExprNode], ...]
        Upper-triangle entries (i <= j) sorted by (i, j); absent entries are 0.
    chart_domain : tuple[tuple[float, float], ...]
        Open interval per coordinate.
    """

    name: str
    dim: int
    coords: tuple[str, ...]
    signature: Signature
    components: tuple[tuple[int, int, ExprNode], ...]
    chart_domain: tuple[tuple[float, float], ...]

    def __post_init__(self):
        if self.dim < 2:
            raise ConfigError(f"dim must be at least 2, got {self.dim}")
        if len(self.coords) != self.dim:
            raise ConfigError(f"dim = {self.dim} but {len(self.coords)} coordinates declared")
        if len(set(self.coords)) != self.dim:
            raise ConfigError(f"duplicate coordinate names in {self.coords}")
        if self.signature.n != self.dim:
            raise ConfigError(f"signature {self.signature} has {self.signature.n} entries for dim = {self.dim}")
        if len(self.chart_domain) != self.dim:
            raise ConfigError("chart domain must give one interval per coordinate")
        for (lo, hi), name in zip(self.chart_domain, self.coords):
            if not lo < hi:
                raise ConfigError(f"empty domain for {name}: ({lo}, {hi})")
        for i, j, _ in self.components:
            if not 0 <= i <= j < self.dim:
                raise ConfigError(f"component g[{i}][{j}] outside the upper triangle")

    def component(self, i: int, j: int) -> ExprNode | None:
        if i > j:
            i, j = j, i
        for a, b, node in self.components:
            if (a, b) == (i, j):
                return node
        return None


@dataclass(frozen=True, eq=False)
class FrameField:
    """
    Vielbein at a point, stored as E[A, Lambda] = E_Lambda^(A).

    g = E^T eta E, and e_inv[Lambda, A] holds the coordinate components
    of the frame vectors.
    """

    point: np.ndarray
    e: np.ndarray
    e_inv: np.ndarray
    signature: Signature

    def residual(self, g: np.ndarray) -> float:
        """max |E^T eta E - g|."""
        return float(np.max(np.abs(self.e.T @ self.signature.eta @ self.e - g)))

    def inverse_residual(self) -> float:
        """max |E e_inv - I|."""
        return float(np.max(np.abs(self.e @ self.e_inv - np.eye(self.e.shape[0]))))


@dataclass(frozen=True, eq=False)
class MetricJet:
    """Metric value and derivatives: first[a, b, c] = d_c g_ab, second[a, b, c, d] = d_c d_d g_ab."""

    value: np.ndarray
    first: np.ndarray
    second: np.ndarray | None = None


# ------------------------------------------------------------
# DOCUMENT PARSER
# ------------------------------------------------------------

_ASSIGN_RE = re.compile(r"^\s*(name|dim|signature|coords)\s*=\s*(.*?)\s*$")
_DOMAIN_RE = re.compile(r"^\s*domain\s+([A-Za-z_][A-Za-z_0-9]*)\s*=\s*\(\s*([^,]+?)\s*,\s*([^)]+?)\s*\)\s*$")
_COMPONENT_RE = re.compile(r"^\s*g\s*\[\s*(\d+)\s*\]\s*\[\s*(\d+)\s*\]\s*=\s*")
_PRESET_RE = re.compile(r"^\s*preset\s+([A-Za-z_][A-Za-z_0-9]*)((?:\s+\S+)*)\s*$")


def _strip_comment(line: str) -> str:
    return line.split("#", 1)[0].rstrip()


def _parse_bound(text: str, lineno: int) -> float:
    try:
        return float(text)
    except ValueError:
        raise MetricSyntaxError(f"bad domain bound {text!r}", lineno, 1) from None


def parse_metric_spec(text: str) -> MetricSpec:
    """
    Parse a metric document into a MetricSpec.

    Raises
    ------
    MetricSyntaxError
        Malformed line or expression (line and column attached).
    ConfigError
        Unknown coordinate, asymmetric or duplicate component assignment,
        missing directives, dimension/signature mismatch, bad preset.
    """
    header: dict[str, tuple[str, int]] = {}
    domains: dict[str, tuple[float, float]] = {}
    raw_components: list[tuple[int, int, str, int, int]] = []
    preset: tuple[str, dict[str, str], int] | None = None
    directive_lines = 0

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw)
        if not line.strip():
            continue
        directive_lines += 1

        match = _PRESET_RE.match(line)
        if match:
            preset = (match.group(1), _parse_params(match.group(2).split(), lineno), lineno)
            continue
        match = _ASSIGN_RE.match(line)
        if match:
            key = match.group(1)
            if key in header:
                raise MetricSyntaxError(f"duplicate '{key}' directive", lineno, 1)
            header[key] = (match.group(2), lineno)
            continue
        match = _DOMAIN_RE.match(line)
        if match:
            coord = match.group(1)
            if coord in domains:
                raise MetricSyntaxError(f"duplicate domain for {coord!r}", lineno, 1)
            domains[coord] = (_parse_bound(match.group(2), lineno), _parse_bound(match.group(3), lineno))
            continue
        match = _COMPONENT_RE.match(line)
        if match:
            raw_components.append(
                (int(match.group(1)), int(match.group(2)), line[match.end():], lineno, match.end())
            )
            continue
        first = len(line) - len(line.lstrip()) + 1
        raise MetricSyntaxError(f"unrecognized directive {line.strip()!r}", lineno, first)

    if preset is not None:
        if directive_lines > 1:
            raise MetricSyntaxError("a preset line must be the only directive", preset[2], 1)
        return build_preset(preset[0], preset[1])

    for key in ("dim", "signature", "coords"):
        if key not in header:
            raise ConfigError(f"missing '{key}' directive")

    dim_text, dim_line = header["dim"]
    try:
        dim = int(dim_text)
    except ValueError:
        raise MetricSyntaxError(f"dim must be an integer, got {dim_text!r}", dim_line, 1) from None
    signature = Signature.from_string(header["signature"][0])
    coords = tuple(c.strip() for c in header["coords"][0].split(",") if c.strip())
    for c in coords:
        if not re.fullmatch(r"[A-Za-z_][A-Za-z_0-9]*", c):
            raise MetricSyntaxError(f"bad coordinate name {c!r}", header["coords"][1], 1)
    if len(coords) != dim or signature.n != dim:
        raise ConfigError(
            f"dimension mismatch: dim = {dim}, {len(coords)} coordinates, signature of length {signature.n}"
        )
    for coord in domains:
        if coord not in coords:
            raise ConfigError(f"domain given for unknown coordinate {coord!r}")

    components: dict[tuple[int, int], ExprNode] = {}
    for i, j, expr_text, lineno, offset in raw_components:
        if i >= dim or j >= dim:
            raise MetricSyntaxError(f"component index g[{i}][{j}] out of range for dim = {dim}", lineno, 1)
        node = parse_expression(expr_text, coords, line=lineno, column_offset=offset)
        key = (min(i, j), max(i, j))
        if key in components:
            if i > j and components[key] == node:
                continue
            kind = "asymmetric" if i != j else "duplicate"
            raise ConfigError(f"{kind} component assignment g[{i}][{j}] on line {lineno}")
        components[key] = node

    name = header.get("name", ("metric", 0))[0]
    return MetricSpec(
        name=name,
        dim=dim,
        coords=coords,
        signature=signature,
        components=tuple((i, j, components[(i, j)]) for i, j in sorted(components)),
        chart_domain=tuple(domains.get(c, (-math.inf, math.inf)) for c in coords),
    )


def _parse_params(items: Sequence[str], lineno: int = 0) -> dict[str, str]:
    params = {}
    for item in items:
        if "=" not in item:
            raise MetricSyntaxError(f"preset parameter {item!r} is not key=value", lineno, 1)
        key, value = item.split("=", 1)
        params[key.strip()] = value.strip()
    return params


def _format_bound(value: float) -> str:
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return repr(float(value))


def print_metric_spec(spec: MetricSpec) -> str:
    """Render a MetricSpec as a document that parses back to an equal spec."""
    lines = [
        f"name = {spec.name}",
        f"dim = {spec.dim}",
        f"signature = {spec.signature}",
        "coords = " + ", ".join(spec.coords),
    ]
    for coord, (lo, hi) in zip(spec.coords, spec.chart_domain):
        if math.isinf(lo) and math.isinf(hi):
            continue
        lines.append(f"domain {coord} = ({_format_bound(lo)}, {_format_bound(hi)})")
    for i, j, node in spec.components:
        lines.append(f"g[{i}][{j}] = {print_expression(node)}")
    return "\n".join(lines) + "\n"


# ------------------------------------------------------------
# PRESETS
# Each preset is generated as document text and parsed, so presets
# and user documents share one code path.
# ------------------------------------------------------------

def _num(value: float) -> str:
    return repr(float(value))


def _sphere_angles(count: int) -> list[str]:
    """Angle names of a unit sphere chart with `count` angles."""
    if count == 1:
        return ["phi"]
    if count == 2:
        return ["theta", "phi"]
    return [f"theta{k}" for k in range(1, count)] + ["phi"]


def _angular_factors(angles: list[str]) -> list[str]:
    """Round metric coefficients of the unit sphere in the given angles."""
    factors = []
    for k in range(len(angles)):
        terms = [f"sin({angles[j]})^2" for j in range(k)]
        factors.append("*".join(terms) if terms else "1.0")
    return factors


def _flat_text(p: int = 0, q: int = 2) -> str:
    n = p + q
    signature = Signature.minus_plus(p, q)
    lines = [f"name = flat(p={p},q={q})", f"dim = {n}", f"signature = {signature}",
             "coords = " + ", ".join(f"x{k}" for k in range(n))]
    lines += [f"g[{k}][{k}] = {_num(s)}" for k, s in enumerate(signature.signs)]
    return "\n".join(lines)


def _sphere_text(n: int = 2, R: float = 1.0) -> str:
    angles = _sphere_angles(n)
    r2 = _num(R * R)
    lines = [f"name = sphere(n={n},R={_num(R)})", f"dim = {n}", "signature = (" + ",".join("+" * n) + ")",
             "coords = " + ", ".join(angles)]
    lines += [f"domain {a} = ({_num(POLE_MARGIN)}, {_num(math.pi - POLE_MARGIN)})" for a in angles[:-1]]
    for k, factor in enumerate(_angular_factors(angles)):
        lines.append(f"g[{k}][{k}] = {r2}" if factor == "1.0" else f"g[{k}][{k}] = {r2}*{factor}")
    return "\n".join(lines)


def _hyperbolic_text(n: int = 2, R: float = 1.0) -> str:
    xs = ["x"] if n == 2 else [f"x{k}" for k in range(1, n)]
    coords = xs + ["y"]
    r2 = _num(R * R)
    lines = [f"name = hyperbolic(n={n},R={_num(R)})", f"dim = {n}", "signature = (" + ",".join("+" * n) + ")",
             "coords = " + ", ".join(coords), "domain y = (0.0, inf)"]
    lines += [f"g[{k}][{k}] = {r2}/y^2" for k in range(n)]
    return "\n".join(lines)


def _hyperboloid_text(n: int = 2, R: float = 1.0) -> str:
    angles = _sphere_angles(n - 1)
    coords = ["rho"] + angles
    r2 = _num(R * R)
    lines = [f"name = hyperboloid(n={n},R={_num(R)})", f"dim = {n}", "signature = (" + ",".join("+" * n) + ")",
             "coords = " + ", ".join(coords), f"domain rho = ({_num(POLE_MARGIN)}, inf)"]
    lines += [f"domain {a} = ({_num(POLE_MARGIN)}, {_num(math.pi - POLE_MARGIN)})" for a in angles[:-1]]
    lines.append(f"g[0][0] = {r2}")
    for k, factor in enumerate(_angular_factors(angles), start=1):
        extra = "" if factor == "1.0" else f"*{factor}"
        lines.append(f"g[{k}][{k}] = {r2}*sinh(rho)^2{extra}")
    return "\n".join(lines)


def _constant_curvature_text(n: int = 2, K: float = 1.0, p: int = 0) -> str:
    signature = Signature.minus_plus(p, n - p)
    coords = [f"omega{k}" for k in range(1, n + 1)]
    quad = " + ".join(
        (f"omega{k + 1}^2" if s > 0 else f"(-omega{k + 1}^2)") for k, s in enumerate(signature.signs)
    )
    factor = f"(1.0 + {_num(K / 4.0)}*({quad}))^-2"
    lines = [f"name = constant_curvature(n={n},K={_num(K)},p={p})", f"dim = {n}", f"signature = {signature}",
             "coords = " + ", ".join(coords)]
    if K < 0 and p == 0:
        # inscribed cube of the ball |omega| < 2/sqrt(|K|) where the factor stays finite
        half = 2.0 / math.sqrt(abs(K) * n) * (1.0 - POLE_MARGIN)
        lines += [f"domain {c} = ({_num(-half)}, {_num(half)})" for c in coords]
    for k, s in enumerate(signature.signs):
        lines.append(f"g[{k}][{k}] = {factor}" if s > 0 else f"g[{k}][{k}] = -{factor}")
    return "\n".join(lines)


def _schwarzschild_text(M: float = 1.0) -> str:
    if M <= 0:
        raise ConfigError(f"schwarzschild mass must be positive, got {M}")
    rs = _num(2.0 * M)
    lines = [f"name = schwarzschild(M={_num(M)})", "dim = 4", "signature = (-,+,+,+)", "coords = t, r, theta, phi",
             f"domain r = ({_num(2.0 * M * (1.0 + HORIZON_MARGIN))}, inf)",
             f"domain theta = ({_num(POLE_MARGIN)}, {_num(math.pi - POLE_MARGIN)})",
             f"g[0][0] = -(1.0 - {rs}/r)", f"g[1][1] = 1.0/(1.0 - {rs}/r)",
             "g[2][2] = r^2", "g[3][3] = r^2*sin(theta)^2"]
    return "\n".join(lines)


PRESETS = {
    "flat": (_flat_text, {"p": int, "q": int}),
    "sphere": (_sphere_text, {"n": int, "R": float}),
    "hyperbolic": (_hyperbolic_text, {"n": int, "R": float}),
    "hyperboloid": (_hyperboloid_text, {"n": int, "R": float}),
    "constant_curvature": (_constant_curvature_text, {"n": int, "K": float, "p": int}),
    "schwarzschild": (_schwarzschild_text, {"M": float}),
}


def build_preset(name: str, params: dict[str, str] | None = None) -> MetricSpec:
    """
    Build a shipped preset from string parameters.

    Raises
    ------
    ConfigError
        Unknown preset, unknown key, or unconvertible value.
    """
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; choose from {', '.join(sorted(PRESETS))}")
    builder, types = PRESETS[name]
    kwargs = {}
    for key, value in (params or {}).items():
        if key not in types:
            raise ConfigError(f"preset {name!r} has no parameter {key!r}")
        try:
            kwargs[key] = types[key](value)
        except ValueError:
            raise ConfigError(f"bad value {value!r} for {name}:{key}") from None
    if kwargs.get("n", 2) < 2 or kwargs.get("q", 2) < 0 or kwargs.get("p", 0) < 0:
        raise ConfigError(f"invalid dimensions for preset {name!r}: {kwargs}")
    if name == "flat" and kwargs.get("p", 0) + kwargs.get("q", 2) < 2:
        raise ConfigError("flat preset needs p + q >= 2")
    if name in ("sphere", "hyperbolic", "hyperboloid") and kwargs.get("R", 1.0) <= 0:
        raise ConfigError(f"radius must be positive for {name!r}")
    if name == "constant_curvature" and kwargs.get("p", 0) > kwargs.get("n", 2):
        raise ConfigError("constant_curvature needs p <= n")
    logger.debug("building preset %s %s", name, kwargs)
    return parse_metric_spec(builder(**kwargs))


def parse_preset_string(text: str) -> MetricSpec:
    """Parse the command-line form 'NAME:k=v,k=v'."""
    name, _, rest = text.partition(":")
    items = [item for item in rest.split(",") if item.strip()]
    return build_preset(name.strip(), _parse_params(items))


def default_origin(spec: MetricSpec) -> np.ndarray:
    """
    A reference interior point: interval midpoints, lower + max(1, 4|lower|)
    on half-lines, and 0 on unbounded coordinates.
    """
    point = []
    for lo, hi in spec.chart_domain:
        if math.isfinite(lo) and math.isfinite(hi):
            point.append(0.5 * (lo + hi))
        elif math.isfinite(lo):
            point.append(lo + max(1.0, 4.0 * abs(lo)))
        elif math.isfinite(hi):
            point.append(hi - max(1.0, 4.0 * abs(hi)))
        else:
            point.append(0.0)
    return np.array(point)


def sample_interior_points(spec: MetricSpec, count: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform samples from a box inside the chart domain (10% margin on finite sides)."""
    lows, highs = [], []
    for lo, hi in spec.chart_domain:
        if math.isfinite(lo) and math.isfinite(hi):
            pad = 0.1 * (hi - lo)
            lows.append(lo + pad)
            highs.append(hi - pad)
        elif math.isfinite(lo):
            lows.append(lo + 0.5 * max(1.0, abs(lo)))
            highs.append(lo + 10.0 * max(1.0, abs(lo)))
        elif math.isfinite(hi):
            lows.append(hi - 10.0 * max(1.0, abs(hi)))
            highs.append(hi - 0.5 * max(1.0, abs(hi)))
        else:
            lows.append(-1.0)
            highs.append(1.0)
    return rng.uniform(lows, highs, size=(count, spec.dim))


# ------------------------------------------------------------
# EVALUATION
# ------------------------------------------------------------

def check_domain(spec: MetricSpec, point) -> np.ndarray:
    """
    Validate a point against the chart domain.

    Raises
    ------
    ConfigError
        Wrong number of coordinates.
    DomainError
        Coordinate outside its open interval or non-finite.
    """
    point = np.asarray(point, dtype=float).reshape(-1)
    if point.size != spec.dim:
        raise ConfigError(f"point has {point.size} coordinates, {spec.name} needs {spec.dim}")
    for value, name, (lo, hi) in zip(point, spec.coords, spec.chart_domain):
        if not math.isfinite(value):
            raise DomainError(f"non-finite coordinate {name} = {value}")
        if not lo < value < hi:
            raise DomainError(f"{name} = {value} outside chart domain ({lo}, {hi}) of {spec.name}")
    return point


@lru_cache(maxsize=None)
def _constant_value(node: ExprNode) -> float | None:
    return float(evaluate(node, {})) if is_constant(node) else None


def _finite(value: float, spec: MetricSpec, i: int, j: int, point) -> float:
    if not math.isfinite(value):
        raise DomainError(f"g[{i}][{j}] of {spec.name} is not finite at {list(point)}")
    return value


def eval_metric(spec: MetricSpec, point) -> np.ndarray:
    """
    Metric components at a point.

    Returns
    -------
    np.ndarray
        Symmetric (n, n) matrix.
    """
    point = check_domain(spec, point)
    env = dict(zip(spec.coords, (np.float64(x) for x in point)))
    g = np.zeros((spec.dim, spec.dim))
    with np.errstate(all="ignore"):
        for i, j, node in spec.components:
            const = _constant_value(node)
            value = const if const is not None else float(evaluate(node, env))
            g[i, j] = g[j, i] = _finite(value, spec, i, j, point)
    return g


def eval_metric_derivs(spec: MetricSpec, point, order: int = 2, method: str = "dual") -> MetricJet:
    """
    Metric value with first (and second) coordinate derivatives.

    Parameters
    ----------
    order : {1, 2}
        Highest derivative order.
    method : {"dual", "fd"}
        Forward-mode dual numbers, or fourth-order central differences
        for cross-checking.
    """
    if order not in (1, 2):
        raise ValueError(f"order must be 1 or 2, got {order}")
    if method == "fd":
        return _fd_jet(spec, point, order)
    if method != "dual":
        raise ValueError(f"unknown derivative method {method!r}")

    point = check_domain(spec, point)
    n = spec.dim
    seeds = dual.seed_second(point) if order == 2 else dual.seed_first(point)
    env = dict(zip(spec.coords, seeds))
    g = np.zeros((n, n))
    dg = np.zeros((n, n, n))
    ddg = np.zeros((n, n, n, n)) if order == 2 else None
    with np.errstate(all="ignore"):
        for i, j, node in spec.components:
            const = _constant_value(node)
            if const is not None:
                g[i, j] = g[j, i] = _finite(const, spec, i, j, point)
                continue
            result = evaluate(node, env)
            if order == 2:
                value, grad, hess = dual.split_second(result, n)
                if not np.all(np.isfinite(hess)):
                    raise DomainError(f"second derivatives of g[{i}][{j}] not finite at {list(point)}")
                ddg[i, j] = ddg[j, i] = hess
            else:
                value, grad = dual.split_first(result, n)
            if not np.all(np.isfinite(grad)):
                raise DomainError(f"derivatives of g[{i}][{j}] not finite at {list(point)}")
            g[i, j] = g[j, i] = _finite(value, spec, i, j, point)
            dg[i, j] = dg[j, i] = grad
    return MetricJet(g, dg, ddg)


_D1 = {-2: 1.0, -1: -8.0, 1: 8.0, 2: -1.0}


def _fd_jet(spec: MetricSpec, point, order: int) -> MetricJet:
    point = check_domain(spec, point)
    n = spec.dim
    g = eval_metric(spec, point)
    scale = np.maximum(1.0, np.abs(point))
    h1 = FD_METRIC_STEP * scale
    h2 = FD_METRIC_STEP2 * scale

    dg = np.zeros((n, n, n))
    for c in range(n):
        acc = np.zeros((n, n))
        for k, w in _D1.items():
            shifted = point.copy()
            shifted[c] += k * h1[c]
            acc += w * eval_metric(spec, shifted)
        dg[:, :, c] = acc / (12.0 * h1[c])

    ddg = None
    if order == 2:
        ddg = np.zeros((n, n, n, n))
        for c in range(n):
            for d in range(c, n):
                acc = np.zeros((n, n))
                for a, wa in _D1.items():
                    for b, wb in _D1.items():
                        shifted = point.copy()
                        shifted[c] += a * h2[c]
                        shifted[d] += b * h2[d]
                        acc += wa * wb * eval_metric(spec, shifted)
                ddg[:, :, c, d] = ddg[:, :, d, c] = acc / (144.0 * h2[c] * h2[d])
    return MetricJet(g, dg, ddg)


def eval_scalar(node: ExprNode, coords: Sequence[str], point, order: int = 2) -> tuple[float, np.ndarray, np.ndarray]:
    """Value, gradient, and Hessian of a scalar expression over the given coordinates."""
    point = np.asarray(point, dtype=float)
    n = point.size
    env = dict(zip(coords, dual.seed_second(point)))
    with np.errstate(all="ignore"):
        value, grad, hess = dual.split_second(evaluate(node, env), n)
    if not (math.isfinite(value) and np.all(np.isfinite(grad)) and np.all(np.isfinite(hess))):
        raise DomainError(f"scalar field not finite at {list(point)}")
    return value, grad, hess


# ------------------------------------------------------------
# VIELBEIN
# ------------------------------------------------------------

def _canonical_cluster(vectors: np.ndarray) -> np.ndarray:
    """Orthonormal basis of span(vectors) built from projected coordinate axes."""
    n, k = vectors.shape
    projector = vectors @ vectors.T
    basis: list[np.ndarray] = []
    for axis in range(n):
        w = projector[:, axis].copy()
        for b in basis:
            w -= (b @ w) * b
        norm = np.linalg.norm(w)
        if norm > 1e-8:
            basis.append(w / norm)
        if len(basis) == k:
            break
    return np.column_stack(basis)


def frame_from_metric(g: np.ndarray, signature: Signature, point=None) -> FrameField:
    """
    Deterministic vielbein of a metric matrix.

    Eigendecompose g, canonicalize degenerate eigenspaces by projected
    coordinate axes, fix each eigenvector so its first nonzero entry is
    positive, then assign eigenpairs of each sign to the signature slots
    of that sign ordered by dominant coordinate axis and eigenvalue.
    E = diag(sqrt|lambda|) Q^T.

    Raises
    ------
    SingularMetricError
        Determinant below threshold.
    SignatureMismatchError
        Eigenvalue sign counts differ from the signature.
    """
    g = 0.5 * (np.asarray(g, dtype=float) + np.asarray(g, dtype=float).T)
    n = g.shape[0]
    if signature.n != n:
        raise SignatureMismatchError(f"signature {signature} does not match a {n}x{n} metric")
    check_nondegenerate(g)
    lam, q = np.linalg.eigh(g)

    negatives = int(np.sum(lam < 0))
    if negatives != signature.q_minus:
        raise SignatureMismatchError(
            f"metric has {negatives} negative eigenvalues, signature {signature} expects {signature.q_minus}"
        )

    scale = max(1.0, float(np.max(np.abs(lam))))
    start = 0
    while start < n:
        stop = start + 1
        while stop < n and abs(lam[stop] - lam[start]) <= FRAME_TOL * scale:
            stop += 1
        if stop - start > 1:
            q[:, start:stop] = _canonical_cluster(q[:, start:stop])
        start = stop

    for k in range(n):
        column = q[:, k]
        first = next((x for x in column if abs(x) > ZERO_COMPONENT_TOL), 1.0)
        if first < 0:
            q[:, k] = -column

    def order(indices):
        return sorted(indices, key=lambda k: (int(np.argmax(np.abs(q[:, k]))), lam[k]))

    minus_eigs = order([k for k in range(n) if lam[k] < 0])
    plus_eigs = order([k for k in range(n) if lam[k] > 0])
    minus_slots = [a for a, s in enumerate(signature.signs) if s < 0]
    plus_slots = [a for a, s in enumerate(signature.signs) if s > 0]

    e = np.zeros((n, n))
    for slot, k in list(zip(minus_slots, minus_eigs)) + list(zip(plus_slots, plus_eigs)):
        e[slot, :] = math.sqrt(abs(lam[k])) * q[:, k]
    e_inv = np.linalg.inv(e)
    pt = np.zeros(n) if point is None else np.asarray(point, dtype=float)
    return FrameField(pt, e, e_inv, signature)


def vielbein_at(spec: MetricSpec, point) -> FrameField:
    """Vielbein of the spec's metric at a point (see frame_from_metric)."""
    point = check_domain(spec, point)
    return frame_from_metric(eval_metric(spec, point), spec.signature, point)
