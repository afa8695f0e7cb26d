"""
Normal Command
==============

Normal-coordinate expansion along each requested z: A/B structural
residuals, the reconstructed metric against the exponential-map oracle,
the radial profile, and the conformal factor along radial and transverse
velocities.
"""

import logging

import numpy as np

from commands.run_config import CommandOutput, RunConfig, load_spec, origin_for
from errors import ChartValidityError
from jacobi import find_conjugate_point, integrate_jacobi, transverse_basis
from normal_coords import (
    conformal_factor,
    direction_norm,
    exp_map_pullback,
    gauss_residual,
    integrate_radial_geodesic,
    quadratic_form_convention,
    reconstruct_metric,
    solve_AB,
    taylor_normal_metric,
)
from utils.constants import DRIFT_TOL
from utils.helpers import invariant_entry

logger = logging.getLogger(__name__)

STRUCTURE_TOL = 1e-8
ORACLE_TOL = 1e-5
PROFILE_POINTS = 4


def _check_conjugate_radius(spec, origin, z, steps) -> float | None:
    """First conjugate distance along z up to |z|; a conjugate point inside the ray is a chart failure."""
    norm = direction_norm(z, spec.signature)
    if norm < 1e-6:
        return None
    report = find_conjugate_point(integrate_jacobi(integrate_radial_geodesic(spec, origin, z, steps=steps)))
    if report.s_conjugate is not None:
        raise ChartValidityError(
            f"|z| = {norm:.6g} lies beyond the conjugate radius {report.s_conjugate:.6g} along {list(z)}"
        )
    return report.s_conjugate


def _sigmas(expansion, z, signature, oracle) -> dict:
    norm = direction_norm(z, signature)
    if norm < 1e-6:
        return {}
    radial = conformal_factor(expansion, z, z, reference=oracle)
    transverse = conformal_factor(expansion, z, transverse_basis(z / norm, signature)[:, 0], reference=oracle)
    return {
        "sigma_radial": radial.sigma,
        "sigma_transverse": transverse.sigma,
        "exp_minus_2sigma": transverse.exp_minus_2sigma,
        "line_element_residual": max(radial.line_element_residual, transverse.line_element_residual),
    }


def normal_command(config: RunConfig) -> CommandOutput:
    """Run the normal-coordinates command."""
    spec = load_spec(config)
    origin = np.asarray(origin_for(config, spec), dtype=float)
    calibration = quadratic_form_convention()

    items, table = [], []
    worst = {"structure": 0.0, "oracle": 0.0, "drift": 0.0, "line_element": 0.0, "gauss": 0.0}
    for k, z in enumerate(np.asarray(config.z, dtype=float)):
        _check_conjugate_radius(spec, origin, z, config.steps)
        path = integrate_radial_geodesic(spec, origin, z, steps=config.steps)
        expansion = solve_AB(path, drift_tol=DRIFT_TOL)
        g_rec = reconstruct_metric(expansion)
        oracle = exp_map_pullback(spec, origin, [z])[0]
        delta = float(np.max(np.abs(g_rec - oracle)))
        stride = config.steps // PROFILE_POINTS
        profile_t = expansion.t[stride::stride]
        sigma = _sigmas(expansion, z, spec.signature, oracle)
        gauss = gauss_residual(expansion)

        worst["structure"] = max(worst["structure"], max(expansion.residuals.values()))
        worst["oracle"] = max(worst["oracle"], delta)
        worst["drift"] = max(worst["drift"], path.first_integral_drift)
        worst["line_element"] = max(worst["line_element"], sigma.get("line_element_residual", 0.0))
        worst["gauss"] = max(worst["gauss"], gauss)

        items.append({
            "z": z,
            "norm": direction_norm(z, spec.signature),
            "endpoint": path.endpoint,
            "reconstructed_metric": g_rec,
            "oracle_metric": oracle,
            "oracle_delta": delta,
            "taylor_metric": taylor_normal_metric(spec, origin, z),
            "radial_profile": [{"t": float(t), "metric": reconstruct_metric(expansion, float(t))} for t in profile_t],
            "ab_residuals": expansion.residuals,
            "path_quality": path.quality(),
            "gauss_residual": gauss,
            **sigma,
        })
        row = {"z_index": k, "norm": items[-1]["norm"], "oracle_delta": delta, "gauss_residual": gauss}
        row.update({f"z{i}": float(c) for i, c in enumerate(z)})
        row["sigma_radial"] = sigma.get("sigma_radial", float("nan"))
        row["sigma_transverse"] = sigma.get("sigma_transverse", float("nan"))
        table.append(row)
        logger.info("normal expansion along z%d: oracle delta %.3e", k, delta)

    tol = config.tol or STRUCTURE_TOL
    invariants = [
        invariant_entry("ab_structure", worst["structure"], tol),
        invariant_entry("oracle_delta", worst["oracle"], ORACLE_TOL),
        invariant_entry("gauss_lemma", worst["gauss"], ORACLE_TOL),
        invariant_entry("first_integral_drift", worst["drift"], DRIFT_TOL),
        invariant_entry("conformal_line_element", worst["line_element"], ORACLE_TOL),
    ]
    results = {
        "metric": spec.name,
        "origin": origin,
        "quadratic_form_convention": calibration.selected.name,
        "calibration_residuals": calibration.residuals,
        "expansions": items,
    }
    columns = ["z_index"] + [f"z{i}" for i in range(spec.dim)] + [
        "norm", "oracle_delta", "gauss_residual", "sigma_radial", "sigma_transverse"
    ]
    return CommandOutput(results, invariants, table, columns)
