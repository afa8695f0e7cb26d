"""
Curvature Command
=================

Curvature bundle at each requested point with the Einstein-space and
constant-curvature verdicts over the whole point set.

With --fd-check every bundle is recomputed from finite-difference metric
derivatives and the largest disagreement is reported as an invariant.
"""

import logging

import numpy as np

from commands.run_config import CommandOutput, RunConfig, load_spec, origin_for
from curvature import einstein_space_check, riemann
from utils.constants import CURVATURE_TOL, SYMMETRY_TOL
from utils.helpers import invariant_entry

logger = logging.getLogger(__name__)

FD_CROSS_CHECK_TOL = 1e-5


def _bundle_row(bundle) -> dict:
    return {
        "point": bundle.point,
        "metric": bundle.metric,
        "christoffel": bundle.christoffel,
        "riemann_frame": bundle.riemann_frame,
        "ricci": bundle.ricci,
        "scalar": bundle.scalar,
        "sectional_curvature": bundle.sectional_curvature(),
        "signature": str(bundle.signature),
        "residuals": bundle.symmetry_report(),
    }


def _table_rows(index: int, bundle) -> list[dict]:
    rows = []
    for name, array in (("metric", bundle.metric), ("ricci", bundle.ricci), ("riemann_frame", bundle.riemann_frame)):
        for idx in np.ndindex(array.shape):
            rows.append({"point": index, "tensor": name, "index": "".join(map(str, idx)), "value": float(array[idx])})
    return rows


def curvature_command(config: RunConfig) -> CommandOutput:
    """Run the curvature command."""
    spec = load_spec(config)
    points = config.points or [list(origin_for(config, spec))]
    tol = config.tol or CURVATURE_TOL

    bundles = [riemann(spec, p) for p in points]
    verdict = einstein_space_check(spec, points, tol=tol)
    logger.info("curvature of %s at %d points: einstein=%s", spec.name, len(points), verdict.is_einstein)

    invariants = []
    names = bundles[0].symmetry_report().keys()
    for name in sorted(names):
        worst, scale = 0.0, 1.0
        for b in bundles:
            worst = max(worst, b.symmetry_report()[name])
            scale = max(scale, float(np.max(np.abs(b.metric))), float(np.max(np.abs(b.riemann_lower))))
        invariant_tol = (config.tol or SYMMETRY_TOL) * scale
        invariants.append(invariant_entry(name, worst, invariant_tol))

    results = {
        "metric": spec.name,
        "dim": spec.dim,
        "points": [_bundle_row(b) for b in bundles],
        "is_einstein": verdict.is_einstein,
        "is_constant_curvature": verdict.is_constant_curvature,
        "K": verdict.K,
        "K_spread": verdict.K_spread,
        "max_einstein_deviation": verdict.max_einstein_deviation,
        "max_constant_curvature_deviation": verdict.max_constant_curvature_deviation,
    }

    if config.fd_check:
        worst = 0.0
        for p, b in zip(points, bundles):
            fd = riemann(spec, p, derivs="fd")
            scale = max(1.0, float(np.max(np.abs(b.riemann_lower))))
            worst = max(worst, float(np.max(np.abs(fd.riemann_lower - b.riemann_lower))) / scale)
        results["fd_cross_check"] = worst
        invariants.append(invariant_entry("fd_cross_check", worst, FD_CROSS_CHECK_TOL))

    table = [row for i, b in enumerate(bundles) for row in _table_rows(i, b)]
    return CommandOutput(results, invariants, table, ["point", "tensor", "index", "value"])
