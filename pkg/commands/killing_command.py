"""
Killing Command
===============

Classification of projected constant vectors on the embedded
constant-curvature space, with the characteristic function sampled
against its closed form, commutator fields, rotation generators and the
curvature-operator reduction.
"""

import itertools
import logging

import numpy as np

from commands.run_config import CommandOutput, RunConfig
from errors import ConfigError
from killing import (
    analytic_commutator,
    build_embedding,
    chart_to_ambient,
    classify_field,
    commutator_as_field,
    commutator_field,
    curvature_operator_check,
    form_invariance_check,
    lie_derivative_metric,
    project_constant_vector,
    projected_field,
    rotation_generator_field,
)
from metric_catalog import eval_metric
from utils.constants import KILLING_TOL
from utils.helpers import invariant_entry

logger = logging.getLogger(__name__)

COMMUTATOR_TOL = 1e-7
PROJECTION_TOL = 1e-10
OPERATOR_TOL = 1e-9


def _vector_checks(model, U, points) -> tuple[dict, dict]:
    """Classification plus closed-form residuals for one constant vector."""
    xi = projected_field(model, U)
    result = classify_field(model.chart, xi, points)
    lam_err = lie_err = tangency = idempotence = 0.0
    samples = []
    for p, lam in zip(points, result.lambdas):
        x = model.embed(p)
        u_bar, lam_exact = project_constant_vector(model, U, x)
        again, _ = project_constant_vector(model, u_bar, x)
        g = eval_metric(model.chart, p)
        lie = lie_derivative_metric(model.chart, xi, p)
        lam_err = max(lam_err, abs(lam - lam_exact))
        lie_err = max(lie_err, float(np.max(np.abs(lie - 2.0 * lam_exact * g))))
        tangency = max(tangency, abs(model.inner(u_bar, model.normal(x))))
        idempotence = max(idempotence, float(np.max(np.abs(again - u_bar))))
        samples.append({"point": p, "lambda": lam, "lambda_exact": lam_exact})
    row = {
        "vector": U,
        "kind": result.kind,
        "max_lie_norm": result.max_lie_norm,
        "conformal_residual": result.conformal_residual,
        "lambda_residual": lam_err,
        "lie_identity_residual": lie_err,
        "tangency_residual": tangency,
        "idempotence_residual": idempotence,
        "samples": samples,
    }
    return row, {"lambda": lam_err, "lie": lie_err, "tangency": tangency, "idempotence": idempotence}


def _commutator_checks(model, U, V, points) -> dict:
    field = commutator_as_field(model.chart, projected_field(model, U), projected_field(model, V))
    result = classify_field(model.chart, field, points)
    analytic = 0.0
    for p in points:
        chart = commutator_field(model.chart, projected_field(model, U), projected_field(model, V), p)
        pushed = chart_to_ambient(model, p, chart)
        analytic = max(analytic, float(np.max(np.abs(pushed - analytic_commutator(model, U, V, model.embed(p))))))
    return {
        "pair": [U, V],
        "kind": result.kind,
        "max_lie_norm": result.max_lie_norm,
        "analytic_residual": analytic,
    }


def killing_command(config: RunConfig) -> CommandOutput:
    """Run the Killing-classification command."""
    model = build_embedding(config.n, config.K)
    m = model.ambient_dim
    vectors = [np.asarray(v, dtype=float) for v in config.vectors] or list(np.eye(m))
    for v in vectors:
        if v.size != m:
            raise ConfigError(f"ambient vectors need {m} components, got {v.size}")
    rng = np.random.default_rng(config.seed)
    points = model.sample_points(config.samples, rng)
    tol = config.tol or KILLING_TOL

    rows, worst, table = [], {"lambda": 0.0, "lie": 0.0, "tangency": 0.0, "idempotence": 0.0}, []
    for k, U in enumerate(vectors):
        row, residuals = _vector_checks(model, U, points)
        rows.append(row)
        worst = {key: max(worst[key], residuals[key]) for key in worst}
        for s in row["samples"]:
            entry = {"vector": k, "lambda": s["lambda"], "lambda_exact": s["lambda_exact"]}
            entry.update({f"q{i}": float(c) for i, c in enumerate(s["point"])})
            table.append(entry)

    commutators = [_commutator_checks(model, U, V, points) for U, V in itertools.combinations(vectors, 2)]
    rotations = []
    for a, b in itertools.combinations(range(m), 2):
        result = classify_field(model.chart, rotation_generator_field(model, a, b), points)
        rotations.append({"pair": [a, b], "kind": result.kind, "max_lie_norm": result.max_lie_norm})
    sweep = form_invariance_check(model, points)
    operator_residual = curvature_operator_check(model, points[0])
    logger.info("killing sweep on K=%g n=%d: %d vectors, %d commutators", model.K, model.n, len(vectors), len(commutators))

    commutator_lie = max((c["max_lie_norm"] for c in commutators), default=0.0)
    commutator_analytic = max((c["analytic_residual"] for c in commutators), default=0.0)
    rotation_lie = max(r["max_lie_norm"] for r in rotations)
    invariants = [
        invariant_entry("lie_identity", worst["lie"], tol),
        invariant_entry("characteristic_function", worst["lambda"], tol),
        invariant_entry("tangency", worst["tangency"], PROJECTION_TOL * max(1.0, model.R)),
        invariant_entry("projection_idempotence", worst["idempotence"], PROJECTION_TOL * max(1.0, model.R)),
        invariant_entry("commutator_killing", max(commutator_lie, sweep.max_lie_norm), COMMUTATOR_TOL),
        invariant_entry("commutator_closed_form", commutator_analytic, COMMUTATOR_TOL),
        invariant_entry("rotation_killing", rotation_lie, COMMUTATOR_TOL),
        invariant_entry("curvature_operators", operator_residual, OPERATOR_TOL),
    ]
    results = {
        "n": model.n,
        "K": model.K,
        "R": model.R,
        "epsilon": model.epsilon,
        "chart": model.chart.name,
        "ambient_signature": str(model.ambient_signature),
        "vectors": rows,
        "commutators": commutators,
        "rotations": rotations,
        "form_invariance": {"pairs": sweep.pairs, "kinds": sweep.kinds, "all_killing": sweep.all_killing},
        "curvature_operator_residual": operator_residual,
    }
    columns = ["vector"] + [f"q{i}" for i in range(model.n)] + ["lambda", "lambda_exact"]
    return CommandOutput(results, invariants, table, columns)
