"""
Conjugate Command
=================

First conjugate point along a deterministic set of directions from an
origin, the resulting normal-chart radius, and the long-form
(direction, s, det_J) table for plotting.
"""

import logging

import numpy as np

from commands.run_config import CommandOutput, RunConfig, load_spec, origin_for
from jacobi import normal_chart_radius
from utils.constants import BISECT_XTOL, DRIFT_TOL
from utils.helpers import invariant_entry

logger = logging.getLogger(__name__)


def _report_row(index: int, report) -> dict:
    return {
        "index": index,
        "direction": report.direction,
        "s_conjugate": report.s_conjugate,
        "bracket": report.bracket,
        "iterations": report.iterations,
        "det_at_root": report.det_at_root,
        "refined": report.refined,
        "s_max": report.s_max,
        "regime": report.regime,
        "curvature_at_conjugate": report.curvature_at_conjugate,
        "position": report.position,
        "wronskian_drift": report.wronskian_drift,
    }


def conjugate_command(config: RunConfig) -> CommandOutput:
    """Run the conjugate-point command."""
    spec = load_spec(config)
    origin = np.asarray(origin_for(config, spec), dtype=float)
    scan = normal_chart_radius(spec, origin, config.dirs, seed=config.seed, s_max=config.s_max, steps=config.steps)

    rows = [_report_row(i, r) for i, r in enumerate(scan.reports)]
    note = None
    if scan.radius is None:
        note = f"no conjugate point up to s = {config.s_max:g}"
    results = {
        "metric": spec.name,
        "origin": origin,
        "radius": scan.radius,
        "certified_radius": scan.certified_radius,
        "direction_of_minimum": scan.direction_of_minimum,
        "directions": rows,
        "skipped": [{"index": s.index, "direction": s.direction, "reason": s.reason} for s in scan.skipped],
        "note": note,
    }

    tol = config.tol or DRIFT_TOL
    drift = max((r.wronskian_drift for r in scan.reports), default=0.0)
    width = 0.0
    for r in scan.reports:
        if r.s_conjugate is not None and r.iterations:
            width = max(width, abs(r.bracket[1] - r.bracket[0]) / 2.0 ** r.iterations)
    invariants = [
        invariant_entry("wronskian_symmetry", drift, tol),
        invariant_entry("bisection_width", width, 2.0 * BISECT_XTOL),
    ]

    table = [
        {"direction": i, "s": s, "det_J": d}
        for i, r in enumerate(scan.reports)
        for s, d in r.profile
    ]
    logger.info("conjugate scan on %s: radius %s, certified %s", spec.name, scan.radius, scan.certified_radius)
    return CommandOutput(results, invariants, table, ["direction", "s", "det_J"])
