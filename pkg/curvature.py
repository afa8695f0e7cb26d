"""
curvature.py

Levi-Civita connection and curvature of a MetricSpec at a point:
Christoffel symbols, Riemann tensor in coordinate and frame components,
Ricci tensor and scalar, Einstein-space tests and the conformal
transformation identities.

Sign convention: the all-lower Riemann tensor of a constant-curvature
space is K (g_ad g_bc - g_ac g_bd), and Ricci is R_bc = g^ad R_abcd, so
spheres have positive Ricci and scalar curvature n(n-1)K.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from errors import ConfigError
from expressions import ExprNode, parse_expression
from metric_catalog import (
    FrameField,
    MetricSpec,
    check_domain,
    eval_metric_derivs,
    eval_scalar,
    frame_from_metric,
)
from tensor_core import (
    DenseTensor,
    Signature,
    SlotKind,
    contract,
    metric_inverse,
    raise_lower,
    riemann_symmetry_residuals,
)
from utils.constants import CURVATURE_TOL

logger = logging.getLogger(__name__)


# ------------------------------------------------------------
# CONNECTION AND RIEMANN FROM A METRIC JET
# ------------------------------------------------------------

def christoffel_from_jet(g: np.ndarray, dg: np.ndarray) -> np.ndarray:
    """Gamma[a, b, c] = Gamma^a_bc from g and dg[a, b, c] = d_c g_ab."""
    ginv = metric_inverse(g)
    lowered = 0.5 * (np.einsum("dcb->dbc", dg) + dg - np.einsum("bcd->dbc", dg))
    return np.einsum("ad,dbc->abc", ginv, lowered)


def riemann_from_jet(g: np.ndarray, dg: np.ndarray, ddg: np.ndarray, gamma: np.ndarray) -> np.ndarray:
    """All-lower Riemann tensor R_abcd from a second-order metric jet."""
    second = 0.5 * (
        np.einsum("adbc->abcd", ddg)
        + np.einsum("bcad->abcd", ddg)
        - np.einsum("bdac->abcd", ddg)
        - np.einsum("acbd->abcd", ddg)
    )
    quadratic = np.einsum("ef,ebc,fad->abcd", g, gamma, gamma) - np.einsum("ef,ebd,fac->abcd", g, gamma, gamma)
    return -(second + quadratic)


def to_frame(riemann_lower: np.ndarray, frame_inv: np.ndarray) -> np.ndarray:
    """Frame components R_ABCD from coordinate R_abcd and frame vectors frame_inv[a, A]."""
    return np.einsum("aA,bB,cC,dD,abcd->ABCD", frame_inv, frame_inv, frame_inv, frame_inv, riemann_lower)


def geometry_at(spec: MetricSpec, point, derivs: str = "dual") -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(g, Gamma, R_abcd) at a point; the integrators call this at every stage."""
    jet = eval_metric_derivs(spec, point, order=2, method=derivs)
    gamma = christoffel_from_jet(jet.value, jet.first)
    return jet.value, gamma, riemann_from_jet(jet.value, jet.first, jet.second, gamma)


def constant_curvature_form(signature: Signature, K: float) -> np.ndarray:
    """K (eta_AD eta_BC - eta_AC eta_BD)."""
    eta = signature.eta
    return K * (np.einsum("ad,bc->abcd", eta, eta) - np.einsum("ac,bd->abcd", eta, eta))


# ------------------------------------------------------------
# CURVATURE BUNDLE
# ------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class CurvatureBundle:
    """
    Curvature data at one point.

    christoffel[a, b, c] = Gamma^a_bc, riemann_coord[a, b, c, d] = R^a_bcd,
    riemann_lower = R_abcd, riemann_frame = R_(A)(B)(C)(D).
    """

    point: np.ndarray
    metric: np.ndarray
    metric_first: np.ndarray
    christoffel: np.ndarray
    riemann_coord: np.ndarray
    riemann_lower: np.ndarray
    riemann_frame: np.ndarray
    ricci: np.ndarray
    scalar: float
    frame: FrameField

    @property
    def signature(self) -> Signature:
        return self.frame.signature

    def frame_tensor(self) -> DenseTensor:
        return DenseTensor.from_array(self.riemann_frame, [SlotKind.FRAME_DOWN] * 4)

    def sectional_curvature(self, tol: float = CURVATURE_TOL) -> float:
        """
        K from the first two frame directions, R_0101 / (-eta_00 eta_11).

        Returns 0 when every frame component is below tol.
        """
        if float(np.max(np.abs(self.riemann_frame))) < tol:
            return 0.0
        eta = self.signature.diagonal
        return float(self.riemann_frame[0, 1, 0, 1] / (-eta[0] * eta[1]))

    def constant_curvature_deviation(self, K: float | None = None) -> float:
        """max |R_ABCD - K(eta eta - eta eta)| with K extracted when not given."""
        K = self.sectional_curvature() if K is None else K
        return float(np.max(np.abs(self.riemann_frame - constant_curvature_form(self.signature, K))))

    def einstein_deviation(self) -> float:
        """max |R_ab - (R/n) g_ab|."""
        n = self.metric.shape[0]
        return float(np.max(np.abs(self.ricci - (self.scalar / n) * self.metric)))

    def metric_compatibility(self) -> float:
        """max |nabla_c g_ab| with nabla built from the stored Christoffel symbols."""
        g, gamma = self.metric, self.christoffel
        nabla = self.metric_first - np.einsum("eca,eb->abc", gamma, g) - np.einsum("ecb,ae->abc", gamma, g)
        return float(np.max(np.abs(nabla)))

    def frame_consistency(self) -> float:
        """Lower riemann_coord with g, convert with the frame, compare to riemann_frame."""
        lowered = np.einsum("ae,ebcd->abcd", self.metric, self.riemann_coord)
        return float(np.max(np.abs(to_frame(lowered, self.frame.e_inv) - self.riemann_frame)))

    def symmetry_report(self) -> dict[str, float]:
        """Named residuals of every structural identity the bundle should satisfy."""
        report = {
            "christoffel_symmetry": float(np.max(np.abs(self.christoffel - self.christoffel.transpose(0, 2, 1)))),
            "metric_compatibility": self.metric_compatibility(),
            "frame_consistency": self.frame_consistency(),
            "vielbein": self.frame.residual(self.metric),
        }
        report.update({f"riemann_{k}": v for k, v in riemann_symmetry_residuals(self.riemann_frame).items()})
        return report


def christoffel(spec: MetricSpec, point, derivs: str = "dual") -> np.ndarray:
    """
    Christoffel symbols Gamma^a_bc at a point.

    Raises
    ------
    SingularMetricError
        Metric determinant below threshold.
    DomainError
        Point outside the chart domain.
    """
    jet = eval_metric_derivs(spec, point, order=1, method=derivs)
    return christoffel_from_jet(jet.value, jet.first)


def riemann(spec: MetricSpec, point, derivs: str = "dual") -> CurvatureBundle:
    """
    Full curvature bundle at a point.

    Parameters
    ----------
    derivs : {"dual", "fd"}
        Metric derivatives by nested dual numbers, or by fourth-order
        central differences for cross-checking.
    """
    point = check_domain(spec, point)
    jet = eval_metric_derivs(spec, point, order=2, method=derivs)
    g = jet.value
    gamma = christoffel_from_jet(g, jet.first)
    lower = riemann_from_jet(g, jet.first, jet.second, gamma)

    metric_tensor = DenseTensor.from_array(g, [SlotKind.COORD_DOWN] * 2)
    lower_tensor = DenseTensor.from_array(lower, [SlotKind.COORD_DOWN] * 4)
    coord = raise_lower(lower_tensor, 0, metric_tensor, "up").array
    ricci = contract(lower_tensor, 0, 3, metric_tensor).array
    scalar = float(contract(DenseTensor.from_array(ricci, [SlotKind.COORD_DOWN] * 2), 0, 1, metric_tensor).array)

    frame = frame_from_metric(g, spec.signature, point)
    bundle = CurvatureBundle(
        point=point,
        metric=g,
        metric_first=jet.first,
        christoffel=gamma,
        riemann_coord=coord,
        riemann_lower=lower,
        riemann_frame=to_frame(lower, frame.e_inv),
        ricci=ricci,
        scalar=scalar,
        frame=frame,
    )
    logger.debug("curvature of %s at %s: scalar %.6g", spec.name, list(point), scalar)
    return bundle


# ------------------------------------------------------------
# EINSTEIN-SPACE CHECK
# ------------------------------------------------------------

@dataclass(frozen=True)
class EinsteinReport:
    is_einstein: bool
    is_constant_curvature: bool
    max_einstein_deviation: float
    max_constant_curvature_deviation: float
    K: float | None
    K_spread: float
    samples: int


def einstein_space_check(spec: MetricSpec, points: Iterable, tol: float = CURVATURE_TOL, derivs: str = "dual") -> EinsteinReport:
    """
    Decide whether the sampled metric is an Einstein space and whether it
    has constant curvature.

    Constant curvature needs the frame form K(eta eta - eta eta) at every
    sample with one common K; in two dimensions the pointwise form always
    holds, so the common K carries the test.
    """
    bundles = [riemann(spec, p, derivs=derivs) for p in points]
    if not bundles:
        raise ConfigError("einstein_space_check needs at least one sample point")

    ks = [b.sectional_curvature(tol) for b in bundles]
    einstein = max(b.einstein_deviation() for b in bundles)
    form = max(b.constant_curvature_deviation(k) for b, k in zip(bundles, ks))
    spread = max(ks) - min(ks)
    K_scale = max(1.0, max(abs(k) for k in ks))

    is_einstein = einstein < tol
    is_constant = is_einstein and form < tol and spread < tol * K_scale
    return EinsteinReport(
        is_einstein=is_einstein,
        is_constant_curvature=is_constant,
        max_einstein_deviation=einstein,
        max_constant_curvature_deviation=form,
        K=float(np.mean(ks)) if is_constant else None,
        K_spread=spread,
        samples=len(bundles),
    )


# ------------------------------------------------------------
# CONFORMAL TRANSFORMATION IDENTITIES
# For g' = exp(2 psi) g with psi_mn = psi;mn - psi,m psi,n:
#   R'_mn = R_mn - (n-2) psi_mn - (D2 psi + (n-2) D1 psi) g_mn
# ------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ConformalPair:
    """
    A scale field psi over a base metric, evaluated at one point.

    delta1 = g^mn psi,m psi,n; psi_mn = psi;mn - psi,m psi,n; delta2 = g^mn psi;mn.
    """

    base: MetricSpec
    psi: ExprNode
    point: np.ndarray
    value: float
    gradient: np.ndarray
    covariant_hessian: np.ndarray
    metric: np.ndarray
    delta1: float
    psi_mn: np.ndarray
    delta2: float

    def delta1_residual(self) -> float:
        ginv = metric_inverse(self.metric)
        return abs(float(self.gradient @ ginv @ self.gradient) - self.delta1)


def conformal_pair(base: MetricSpec, psi: ExprNode | str, point) -> ConformalPair:
    """Evaluate psi, its derivatives, and the derived scalars at a point of base."""
    if isinstance(psi, str):
        psi = parse_expression(psi, base.coords)
    point = check_domain(base, point)
    jet = eval_metric_derivs(base, point, order=1)
    gamma = christoffel_from_jet(jet.value, jet.first)
    value, grad, hess = eval_scalar(psi, base.coords, point)
    cov = hess - np.einsum("lmn,l->mn", gamma, grad)
    ginv = metric_inverse(jet.value)
    return ConformalPair(
        base=base,
        psi=psi,
        point=point,
        value=value,
        gradient=grad,
        covariant_hessian=cov,
        metric=jet.value,
        delta1=float(grad @ ginv @ grad),
        psi_mn=cov - np.outer(grad, grad),
        delta2=float(np.einsum("mn,mn->", ginv, cov)),
    )


def _identity_forms(pair: ConformalPair, base: CurvatureBundle, target: CurvatureBundle, einstein: bool) -> dict[str, np.ndarray]:
    """Right-hand sides for psi_mn under each candidate form."""
    n = pair.metric.shape[0]
    g, gp = pair.metric, target.metric
    R, Rp = base.scalar, target.scalar
    Rmn, Rpmn = base.ricci, target.ricci
    d1 = pair.delta1
    c = 1.0 / (2.0 * (n - 1) * (n - 2))

    forms = {
        "derived": (Rmn - Rpmn) / (n - 2) + c * (gp * Rp - g * R) - 0.5 * d1 * g,
        "swapped": Rmn / (n - 2) - c * (gp * Rp - g * R) - 0.5 * d1 * g,
        "swapped_opposite_curvature_sign": -Rmn / (n - 2) + c * (gp * Rp - g * R) - 0.5 * d1 * g,
    }
    if einstein:
        e2psi = np.exp(2.0 * pair.value)
        k = 1.0 / (2.0 * n * (n - 1))
        forms["einstein_derived"] = Rmn / (n - 2) - (c * R + k * Rp * e2psi + 0.5 * d1) * g
        forms["einstein_swapped"] = -Rmn / (n - 2) + (c * R + k * Rp * e2psi - 0.5 * d1) * g
        forms["einstein_swapped_opposite_curvature_sign"] = Rmn / (n - 2) + (-c * R - k * Rp * e2psi - 0.5 * d1) * g
    return forms


@dataclass(frozen=True)
class ConformalReport:
    residuals: dict[str, float]
    checked_forms: tuple[str, ...]
    checked_residual: float
    metric_residual: float
    ricci_prediction_residual: float
    delta1_residual: float
    gprime_is_einstein: bool
    samples: int
    tol: float
    passed: bool


def conformal_identity_check(
    base: MetricSpec,
    psi: ExprNode | str,
    gprime: MetricSpec,
    points: Sequence,
    tol: float = 1e-6,
    derivs: str = "dual",
) -> ConformalReport:
    """
    Evaluate the conformal-transformation identities for g' = exp(2 psi) g.

    Charts of base and gprime are identified by position, so both must
    have the same dimension and share the sample points. The pass verdict
    uses the derived psi_mn identity, plus its Einstein-space reduction when
    gprime passes the Einstein test on the samples. The remaining candidate
    forms are evaluated for the residuals table only.

    Raises
    ------
    ConfigError
        n <= 2, dimension mismatch, or no sample points.
    """
    if base.dim <= 2:
        raise ConfigError(f"conformal identities need dim >= 3, got {base.dim}")
    if gprime.dim != base.dim:
        raise ConfigError(f"dimension mismatch between {base.name} and {gprime.name}")
    points = [np.asarray(p, dtype=float) for p in points]
    if not points:
        raise ConfigError("conformal_identity_check needs at least one sample point")
    if isinstance(psi, str):
        psi = parse_expression(psi, base.coords)

    n = base.dim
    pairs = [conformal_pair(base, psi, p) for p in points]
    base_curv = [riemann(base, p, derivs=derivs) for p in points]
    target_curv = [riemann(gprime, p, derivs=derivs) for p in points]
    einstein = all(t.einstein_deviation() < CURVATURE_TOL * max(1.0, abs(t.scalar)) for t in target_curv)

    residuals: dict[str, float] = {}
    metric_res = ricci_res = d1_res = 0.0
    for pair, bc, tc in zip(pairs, base_curv, target_curv):
        for name, rhs in _identity_forms(pair, bc, tc, einstein).items():
            residuals[name] = max(residuals.get(name, 0.0), float(np.max(np.abs(pair.psi_mn - rhs))))
        scale = max(1.0, float(np.max(np.abs(tc.metric))))
        metric_res = max(metric_res, float(np.max(np.abs(tc.metric - np.exp(2.0 * pair.value) * pair.metric))) / scale)
        predicted = bc.ricci - (n - 2) * pair.psi_mn - (pair.delta2 + (n - 2) * pair.delta1) * pair.metric
        ricci_res = max(ricci_res, float(np.max(np.abs(predicted - tc.ricci))))
        d1_res = max(d1_res, pair.delta1_residual())

    checked = ("derived", "einstein_derived") if einstein else ("derived",)
    checked_res = max(residuals[name] for name in checked)
    logger.info("conformal identity: %s residual %.3e", "/".join(checked), checked_res)
    passed = checked_res < tol and metric_res < tol and ricci_res < tol
    return ConformalReport(
        residuals=residuals,
        checked_forms=checked,
        checked_residual=checked_res,
        metric_residual=metric_res,
        ricci_prediction_residual=ricci_res,
        delta1_residual=d1_res,
        gprime_is_einstein=einstein,
        samples=len(points),
        tol=tol,
        passed=passed,
    )
