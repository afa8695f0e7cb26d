"""
killing.py

Constant-curvature manifolds embedded in a flat ambient space, projected
constant vectors, Lie-derivative classification of vector fields
(Killing / conformal Killing / neither), commutators, and matrix
representations of the angular-momentum algebra with Casimir checks.

Generators follow (L_AB)^C_D = i(eta_BD d^C_A - eta_AD d^C_B) with

    [L_AB, L_CD] = -i(eta_AC L_BD + eta_AD L_CB + eta_BC L_DA + eta_BD L_AC)

and the real form M_AB = i L_AB closes without the factor -i. hbar = 1.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

import dual
from curvature import riemann
from errors import ConfigError, DomainError
from expressions import evaluate, parse_expression
from metric_catalog import (
    MetricSpec,
    build_preset,
    check_domain,
    default_origin,
    eval_metric,
    eval_metric_derivs,
    eval_scalar,
)
from tensor_core import Signature
from utils.constants import FD_FIELD_STEP, KILLING_TOL, SURFACE_TOL

logger = logging.getLogger(__name__)


# ------------------------------------------------------------
# EMBEDDING MODEL
# ------------------------------------------------------------

def _unit_sphere(thetas: Sequence, phi) -> list:
    """Unit vector of S^m in hyperspherical angles; works on floats and Duals."""
    out = []
    s = 1.0
    for th in thetas:
        out.append(s * dual.cos(th))
        s = s * dual.sin(th)
    out.append(s * dual.sin(phi))
    out.append(s * dual.cos(phi))
    return out[::-1]


@dataclass(frozen=True, eq=False)
class EmbeddingModel:
    """
    S embedded in flat (n+1)-space with eta(x, x) = epsilon R^2, K = epsilon / R^2.

    epsilon = +1 gives the round sphere in Euclidean space (sphere chart);
    epsilon = -1 the hyperboloid in (-,+,...,+) (geodesic polar chart).
    """

    n: int
    K: float
    epsilon: int
    R: float
    ambient_signature: Signature
    chart: MetricSpec

    @property
    def ambient_dim(self) -> int:
        return self.n + 1

    def _embed(self, q: Sequence) -> list:
        if self.epsilon > 0:
            return [self.R * c for c in _unit_sphere(q[:-1], q[-1])]
        rho = q[0]
        spatial = _unit_sphere(q[1:-1], q[-1])
        return [self.R * dual.cosh(rho)] + [self.R * dual.sinh(rho) * c for c in spatial]

    def embed(self, point) -> np.ndarray:
        point = check_domain(self.chart, point)
        return np.array([float(x) for x in self._embed(list(point))])

    def embed_jet(self, point) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """x, dx/dq (n+1, n), and d2x/dq2 (n+1, n, n) at a chart point."""
        point = check_domain(self.chart, point)
        parts = [dual.split_second(c, self.n) for c in self._embed(dual.seed_second(point))]
        return (
            np.array([p[0] for p in parts]),
            np.array([p[1] for p in parts]),
            np.array([p[2] for p in parts]),
        )

    def normal(self, x) -> np.ndarray:
        return np.asarray(x, dtype=float) / self.R

    def inner(self, a, b) -> float:
        return float(np.asarray(a) @ self.ambient_signature.eta @ np.asarray(b))

    def constraint_residual(self, x) -> float:
        return abs(self.inner(x, x) - self.epsilon * self.R**2)

    def sample_points(self, count: int, rng: np.random.Generator) -> np.ndarray:
        """Chart points away from the polar and large-rho regions."""
        lows, highs = [], []
        for k in range(self.n):
            if k == self.n - 1:
                lows.append(-math.pi)
                highs.append(math.pi)
            elif self.epsilon < 0 and k == 0:
                lows.append(0.1)
                highs.append(1.5)
            else:
                lows.append(0.3)
                highs.append(math.pi - 0.3)
        return rng.uniform(lows, highs, size=(count, self.n))


def build_embedding(n: int, K: float) -> EmbeddingModel:
    """
    Embedding of the n-dimensional constant-curvature space with curvature K.

    Raises
    ------
    ConfigError
        K = 0 or n < 2.
    """
    if K == 0:
        raise ConfigError("K = 0 has no embedding of the form eta(x, x) = 1/K; use the flat operators directly")
    if n < 2:
        raise ConfigError(f"embedding needs n >= 2, got {n}")
    epsilon = 1 if K > 0 else -1
    R = 1.0 / math.sqrt(abs(K))
    if epsilon > 0:
        ambient = Signature.minus_plus(0, n + 1)
        chart = build_preset("sphere", {"n": str(n), "R": repr(R)})
    else:
        ambient = Signature.minus_plus(1, n)
        chart = build_preset("hyperboloid", {"n": str(n), "R": repr(R)})
    return EmbeddingModel(n=n, K=float(K), epsilon=epsilon, R=R, ambient_signature=ambient, chart=chart)


def project_constant_vector(model: EmbeddingModel, U, x) -> tuple[np.ndarray, float]:
    """
    Tangential part of a constant ambient vector at a surface point.

    U_bar = U - epsilon <U, N> N and lambda = -epsilon <U, N> / R.

    Raises
    ------
    DomainError
        x is off the surface.
    """
    x = np.asarray(x, dtype=float)
    U = np.asarray(U, dtype=float)
    if x.size != model.ambient_dim or U.size != model.ambient_dim:
        raise ConfigError(f"ambient vectors need {model.ambient_dim} components")
    if model.constraint_residual(x) > SURFACE_TOL * max(1.0, model.R**2):
        raise DomainError(f"point {list(x)} is off the surface (residual {model.constraint_residual(x):.3e})")
    N = model.normal(x)
    un = model.inner(U, N)
    return U - model.epsilon * un * N, -model.epsilon * un / model.R


# ------------------------------------------------------------
# VECTOR FIELDS
# ------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class VectorFieldOnS:
    """
    Chart vector field with a provenance tag.

    values(q) returns components; jacobian(q)[c, a] = d_a xi^c when the
    field knows its derivatives exactly, otherwise central differences are used.
    """

    name: str
    provenance: str
    values: Callable[[np.ndarray], np.ndarray]
    jacobian: Callable[[np.ndarray], np.ndarray] | None = None

    def __call__(self, q) -> np.ndarray:
        return np.asarray(self.values(np.asarray(q, dtype=float)), dtype=float)


def field_jacobian(xi: VectorFieldOnS, q, h: float = FD_FIELD_STEP) -> np.ndarray:
    """d_a xi^c at q, exact when available, else central differences scaled by max(1, |q|)."""
    q = np.asarray(q, dtype=float)
    if xi.jacobian is not None:
        return np.asarray(xi.jacobian(q), dtype=float)
    n = q.size
    jac = np.empty((n, n))
    for a in range(n):
        step = h * max(1.0, abs(q[a]))
        plus, minus = q.copy(), q.copy()
        plus[a] += step
        minus[a] -= step
        jac[:, a] = (xi(plus) - xi(minus)) / (2.0 * step)
    return jac


def _ambient_field(model: EmbeddingModel, name: str, provenance: str, value, derivative) -> VectorFieldOnS:
    """
    Chart field of an ambient field X(x) tangent to S, with exact derivatives.

    The sphere and hyperboloid charts are orthogonal, so the chart
    components are c^k = <J_k, X> / g_kk with J = dx/dq.
    """
    eta = model.ambient_signature.diagonal

    def parts(q):
        x, J, H = model.embed_jet(q)
        X = value(x)
        gkk = np.einsum("a,ak,ak->k", eta, J, J)
        c = np.einsum("a,ak,a->k", eta, J, X) / gkk
        return x, J, H, X, gkk, c

    def values(q):
        return parts(q)[-1]

    def jacobian(q):
        x, J, H, X, gkk, c = parts(q)
        dX = derivative(x) @ J
        dg = 2.0 * np.einsum("a,ak,akj->kj", eta, J, H)
        num = np.einsum("a,akj,a->kj", eta, H, X) + np.einsum("a,ak,aj->kj", eta, J, dX)
        return num / gkk[:, None] - c[:, None] * dg / gkk[:, None]

    return VectorFieldOnS(name, provenance, values, jacobian)


def projected_field(model: EmbeddingModel, U) -> VectorFieldOnS:
    """The projected constant vector U_bar as a chart field."""
    U = np.asarray(U, dtype=float)
    eta_u = model.ambient_signature.eta @ U
    scale = model.epsilon / model.R**2

    def value(x):
        return U - scale * float(eta_u @ x) * x

    def derivative(x):
        return -scale * (np.outer(x, eta_u) + float(eta_u @ x) * np.eye(x.size))

    return _ambient_field(model, f"projected{tuple(U.tolist())}", "projected_constant", value, derivative)


def rotation_matrix(model: EmbeddingModel, alpha: int, beta: int) -> np.ndarray:
    """Omega with Omega x = x_alpha e_beta - x_beta e_alpha (lowered x_alpha = eta_aa x^a)."""
    eta = model.ambient_signature.diagonal
    m = model.ambient_dim
    omega = np.zeros((m, m))
    omega[beta, alpha] += eta[alpha]
    omega[alpha, beta] -= eta[beta]
    return omega


def rotation_generator_field(model: EmbeddingModel, alpha: int, beta: int) -> VectorFieldOnS:
    """x_alpha d_beta - x_beta d_alpha restricted to S."""
    omega = rotation_matrix(model, alpha, beta)
    return _ambient_field(model, f"rotation({alpha},{beta})", "rotation", lambda x: omega @ x, lambda x: omega)


def expression_field(spec: MetricSpec, components: Sequence[str], name: str = "user") -> VectorFieldOnS:
    """User field from one expression per chart coordinate."""
    if len(components) != spec.dim:
        raise ConfigError(f"field needs {spec.dim} components, got {len(components)}")
    nodes = [parse_expression(c, spec.coords) for c in components]

    def values(q):
        env = dict(zip(spec.coords, (np.float64(x) for x in q)))
        return np.array([float(evaluate(node, env)) for node in nodes])

    def jacobian(q):
        return np.array([eval_scalar(node, spec.coords, q)[1] for node in nodes])

    return VectorFieldOnS(name, "user", values, jacobian)


def coordinate_field(spec: MetricSpec, index: int) -> VectorFieldOnS:
    """The coordinate basis field d_index."""
    e = np.zeros(spec.dim)
    e[index] = 1.0
    return VectorFieldOnS(f"d_{spec.coords[index]}", "user", lambda q: e, lambda q: np.zeros((spec.dim, spec.dim)))


def commutator_field(spec: MetricSpec, f1: VectorFieldOnS, f2: VectorFieldOnS, point) -> np.ndarray:
    """[f1, f2]^a = f1^b d_b f2^a - f2^b d_b f1^a at a point."""
    point = check_domain(spec, point)
    return field_jacobian(f2, point) @ f1(point) - field_jacobian(f1, point) @ f2(point)


def commutator_as_field(spec: MetricSpec, f1: VectorFieldOnS, f2: VectorFieldOnS) -> VectorFieldOnS:
    return VectorFieldOnS(
        f"[{f1.name}, {f2.name}]", "commutator", lambda q: commutator_field(spec, f1, f2, q)
    )


def analytic_commutator(model: EmbeddingModel, U, V, x) -> np.ndarray:
    """[U_bar, V_bar] = (epsilon / R^2)(<U, x> V - <V, x> U) as an ambient vector."""
    U, V = np.asarray(U, dtype=float), np.asarray(V, dtype=float)
    return (model.epsilon / model.R**2) * (model.inner(U, x) * V - model.inner(V, x) * U)


def chart_to_ambient(model: EmbeddingModel, point, components) -> np.ndarray:
    """Push chart components forward to an ambient vector."""
    _, J, _ = model.embed_jet(point)
    return J @ np.asarray(components, dtype=float)


# ------------------------------------------------------------
# LIE DERIVATIVES AND CLASSIFICATION
# ------------------------------------------------------------

def lie_derivative_metric(spec: MetricSpec, xi: VectorFieldOnS, point) -> np.ndarray:
    """(L_xi g)_ab = xi^c d_c g_ab + g_cb d_a xi^c + g_ac d_b xi^c."""
    point = check_domain(spec, point)
    jet = eval_metric_derivs(spec, point, order=1)
    g = jet.value
    v = xi(point)
    dxi = field_jacobian(xi, point)
    lie = np.einsum("c,abc->ab", v, jet.first) + np.einsum("cb,ca->ab", g, dxi) + np.einsum("ac,cb->ab", g, dxi)
    return 0.5 * (lie + lie.T)


@dataclass(frozen=True)
class FieldClassification:
    """
    kind is "killing", "conformal_killing" or "neither"; lambdas holds the
    characteristic function per sample with L_xi g = 2 lambda g.
    """

    kind: str
    max_lie_norm: float
    conformal_residual: float
    lambdas: tuple[float, ...]
    tol: float
    samples: int


def classify_field(spec: MetricSpec, xi: VectorFieldOnS, points: Sequence, tol: float = KILLING_TOL) -> FieldClassification:
    """
    Classify a field by its Lie derivative on sample points.

    Raises
    ------
    ConfigError
        Fewer than three sample points.
    """
    points = [np.asarray(p, dtype=float) for p in points]
    if len(points) < 3:
        raise ConfigError(f"classify_field needs at least 3 sample points, got {len(points)}")
    n = spec.dim
    lie_norm = conformal = 0.0
    lambdas = []
    for p in points:
        lie = lie_derivative_metric(spec, xi, p)
        g = eval_metric(spec, p)
        lam = float(np.trace(np.linalg.solve(g, lie))) / (2.0 * n)
        lambdas.append(lam)
        lie_norm = max(lie_norm, float(np.max(np.abs(lie))))
        conformal = max(conformal, float(np.max(np.abs(lie - 2.0 * lam * g))))

    if lie_norm < tol:
        kind = "killing"
    elif conformal < tol:
        kind = "conformal_killing"
    else:
        kind = "neither"
    logger.debug("field %s classified %s (lie %.3e, conformal %.3e)", xi.name, kind, lie_norm, conformal)
    return FieldClassification(kind, lie_norm, conformal, tuple(lambdas), tol, len(points))


@dataclass(frozen=True)
class RescalingReport:
    """L_xi g' against exp(2 psi)(L_xi g + 2 xi(psi) g) for g' = exp(2 psi) g."""

    identity_residual: float
    killing_for_gprime: bool
    rescaled_condition: bool
    max_lie_gprime: float
    max_condition: float


def rescaled_lie_check(
    base: MetricSpec, psi, gprime: MetricSpec, xi: VectorFieldOnS, points: Sequence, tol: float = KILLING_TOL
) -> RescalingReport:
    """
    Killing condition under conformal rescaling.

    xi is Killing for g' exactly when L_xi g = -2 xi(psi) g; both sides of
    that equivalence are reported so callers can check they agree.
    """
    if gprime.dim != base.dim:
        raise ConfigError(f"dimension mismatch between {base.name} and {gprime.name}")
    if isinstance(psi, str):
        psi = parse_expression(psi, base.coords)
    identity = lie_max = cond_max = 0.0
    for p in points:
        p = check_domain(base, p)
        value, grad, _ = eval_scalar(psi, base.coords, p)
        g = eval_metric(base, p)
        lie_g = lie_derivative_metric(base, xi, p)
        lie_gp = lie_derivative_metric(gprime, xi, p)
        xi_psi = float(xi(p) @ grad)
        condition = lie_g + 2.0 * xi_psi * g
        identity = max(identity, float(np.max(np.abs(lie_gp - math.exp(2.0 * value) * condition))))
        lie_max = max(lie_max, float(np.max(np.abs(lie_gp))))
        cond_max = max(cond_max, float(np.max(np.abs(condition))))
    return RescalingReport(identity, lie_max < tol, cond_max < tol, lie_max, cond_max)


@dataclass(frozen=True)
class FormInvarianceReport:
    """Commutators of projected basis vectors classified on the chart."""

    pairs: tuple[tuple[int, int], ...]
    kinds: tuple[str, ...]
    max_lie_norm: float
    all_killing: bool


def form_invariance_check(model: EmbeddingModel, points: Sequence, tol: float = KILLING_TOL) -> FormInvarianceReport:
    """Every commutator of projected ambient basis vectors acts by a Killing field."""
    eye = np.eye(model.ambient_dim)
    pairs, kinds, worst = [], [], 0.0
    for a, b in itertools.combinations(range(model.ambient_dim), 2):
        xi = commutator_as_field(model.chart, projected_field(model, eye[a]), projected_field(model, eye[b]))
        result = classify_field(model.chart, xi, points, tol)
        pairs.append((a, b))
        kinds.append(result.kind)
        worst = max(worst, result.max_lie_norm)
    return FormInvarianceReport(tuple(pairs), tuple(kinds), worst, all(k == "killing" for k in kinds))


# ------------------------------------------------------------
# OPERATOR REPRESENTATIONS
# ------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class OperatorRep:
    """
    Matrices of the generators L_AB for A < B.

    form is "complex" (L_AB as written, closes with the factor -i) or
    "real" (M_AB = i L_AB, closes without it).
    """

    name: str
    signature: Signature
    generators: dict = field(default_factory=dict)
    form: str = "complex"
    hbar: float = 1.0

    @property
    def dim(self) -> int:
        return next(iter(self.generators.values())).shape[0]

    def get(self, a: int, b: int) -> np.ndarray:
        if a == b:
            return np.zeros((self.dim, self.dim), dtype=complex)
        if a < b:
            return self.generators[(a, b)]
        return -self.generators[(b, a)]

    def with_generator(self, pair: tuple[int, int], matrix: np.ndarray) -> "OperatorRep":
        gens = dict(self.generators)
        gens[pair] = np.asarray(matrix)
        return OperatorRep(self.name, self.signature, gens, self.form, self.hbar)


def angular_momentum_rep(signature: Signature, form: str = "complex") -> OperatorRep:
    """Vector representation of so(p, q) on the ambient signature."""
    if signature.n < 2:
        raise ConfigError("angular momentum needs at least two dimensions")
    if form not in ("complex", "real"):
        raise ConfigError(f"unknown representation form {form!r}")
    m = signature.n
    eta = signature.eta
    eye = np.eye(m)
    gens = {}
    for a, b in itertools.combinations(range(m), 2):
        real = np.outer(eye[b], eta[a]) - np.outer(eye[a], eta[b])
        gens[(a, b)] = real.astype(complex) if form == "real" else -1j * real
    return OperatorRep("vector", signature, gens, form)


def parse_spin(j) -> Fraction:
    """Parse a spin such as "1/2", 1 or 1.5; only non-negative half-integers pass."""
    try:
        spin = Fraction(j) if not isinstance(j, float) else Fraction(j).limit_denominator(2)
    except (ValueError, ZeroDivisionError):
        raise ConfigError(f"spin must be a non-negative half-integer, got {j!r}") from None
    if spin < 0 or (2 * spin).denominator != 1:
        raise ConfigError(f"spin must be a non-negative half-integer, got {j}")
    return spin


def spin_rep(j) -> OperatorRep:
    """
    Spin-j representation of so(3) from ladder operators.

    L_12 = -J_3, L_23 = -J_1, L_31 = -J_2, so [J_i, J_j] = i eps_ijk J_k
    matches the generator algebra on (+,+,+).
    """
    spin = parse_spin(j)
    js = float(spin)
    ms = [js - k for k in range(int(2 * spin) + 1)]
    d = len(ms)
    j3 = np.diag(ms).astype(complex)
    jp = np.zeros((d, d), dtype=complex)
    for k in range(1, d):
        m = ms[k]
        jp[k - 1, k] = math.sqrt(js * (js + 1) - m * (m + 1))
    jm = jp.conj().T
    j1 = 0.5 * (jp + jm)
    j2 = -0.5j * (jp - jm)
    gens = {(0, 1): -j3, (1, 2): -j1, (0, 2): j2}
    return OperatorRep(f"spin:{spin}", Signature.minus_plus(0, 3), gens, "complex")


def trivial_rep(signature: Signature) -> OperatorRep:
    gens = {pair: np.zeros((1, 1), dtype=complex) for pair in itertools.combinations(range(signature.n), 2)}
    return OperatorRep("trivial", signature, gens, "complex")


def _commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b - b @ a


def algebra_rhs(rep: OperatorRep, a: int, b: int, c: int, d: int) -> np.ndarray:
    eta = rep.signature.diagonal
    total = (
        (eta[a] if a == c else 0.0) * rep.get(b, d)
        + (eta[a] if a == d else 0.0) * rep.get(c, b)
        + (eta[b] if b == c else 0.0) * rep.get(d, a)
        + (eta[b] if b == d else 0.0) * rep.get(a, c)
    )
    return -1j * rep.hbar * total if rep.form == "complex" else total


@dataclass(frozen=True)
class AlgebraReport:
    max_closure_residual: float
    jacobi_residual: float
    antisymmetry_residual: float
    pairs_checked: int
    triples_checked: int


def verify_algebra(rep: OperatorRep) -> AlgebraReport:
    """Residuals of every pairwise commutator against the algebra and of the Jacobi identity."""
    keys = sorted(rep.generators)
    closure = 0.0
    for (a, b), (c, d) in itertools.product(keys, repeat=2):
        lhs = _commutator(rep.get(a, b), rep.get(c, d))
        closure = max(closure, float(np.max(np.abs(lhs - algebra_rhs(rep, a, b, c, d)))))
    jacobi = 0.0
    triples = list(itertools.combinations(keys, 3))
    for x, y, z in triples:
        X, Y, Z = rep.get(*x), rep.get(*y), rep.get(*z)
        total = _commutator(X, _commutator(Y, Z)) + _commutator(Y, _commutator(Z, X)) + _commutator(Z, _commutator(X, Y))
        jacobi = max(jacobi, float(np.max(np.abs(total))))
    antisym = max(float(np.max(np.abs(rep.get(a, b) + rep.get(b, a)))) for a, b in keys)
    return AlgebraReport(closure, jacobi, antisym, len(keys) ** 2, len(triples))


@dataclass(frozen=True, eq=False)
class CasimirReport:
    matrix: np.ndarray
    eigenvalues: tuple[tuple[float, int], ...]
    centrality_residual: float


def casimir(rep: OperatorRep) -> CasimirReport:
    """
    C = sum_{A<B} eta_AA eta_BB L_AB^2 (the real form uses -M_AB^2), with its
    spectrum and max ||[C, L_AB]||.
    """
    eta = rep.signature.diagonal
    sign = -1.0 if rep.form == "real" else 1.0
    C = sum(sign * eta[a] * eta[b] * (m @ m) for (a, b), m in sorted(rep.generators.items()))
    centrality = max(float(np.max(np.abs(_commutator(C, m)))) for m in rep.generators.values())
    values = np.sort(np.real(np.linalg.eigvals(C)))
    grouped: list[list] = []
    for v in values:
        if grouped and abs(v - grouped[-1][0]) < 1e-9 * max(1.0, abs(v)):
            grouped[-1][1] += 1
        else:
            grouped.append([float(v), 1])
    return CasimirReport(C, tuple((round(v, 12) + 0.0, k) for v, k in grouped), centrality)


def curvature_operator_check(model: EmbeddingModel, point=None) -> float:
    """
    Build operators -(i/K) R_AB^C_D from the frame curvature of the chart
    and return their max deviation from the vector-representation
    generators on the chart's frame signature.
    """
    point = default_origin(model.chart) if point is None else point
    bundle = riemann(model.chart, point)
    signature = model.chart.signature
    raised = np.einsum("c,abcd->abcd", signature.diagonal, bundle.riemann_frame)
    rep = angular_momentum_rep(signature)
    worst = 0.0
    for (a, b), gen in rep.generators.items():
        op = -1j / model.K * raised[a, b]
        worst = max(worst, float(np.max(np.abs(op - gen))))
    return worst
