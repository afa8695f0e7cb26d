"""
Algebra Command
===============

Closure, Jacobi and Casimir checks for matrix representations of the
angular-momentum algebra on a signature.

Rep names: vector, vector:real, trivial, spin:<j> (so(3) only).
"""

import logging

from commands.run_config import CommandOutput, RunConfig
from errors import ConfigError
from killing import angular_momentum_rep, casimir, parse_spin, spin_rep, trivial_rep, verify_algebra
from tensor_core import Signature
from utils.helpers import invariant_entry

logger = logging.getLogger(__name__)

ALGEBRA_TOL = 1e-12
CASIMIR_TOL = 1e-10


def build_rep(name: str, signature: Signature):
    """Representation and its expected Casimir eigenvalue."""
    kind, _, arg = name.partition(":")
    if kind == "vector":
        form = arg or "complex"
        return angular_momentum_rep(signature, form), float(signature.n - 1)
    if kind == "trivial" and not arg:
        return trivial_rep(signature), 0.0
    if kind == "spin":
        if signature.n != 3 or signature.q_minus:
            raise ConfigError(f"spin representations need signature (+,+,+), got {signature}")
        j = float(parse_spin(arg))
        return spin_rep(arg), j * (j + 1.0)
    raise ConfigError(f"unknown representation {name!r}; use vector, vector:real, trivial or spin:<j>")


def algebra_command(config: RunConfig) -> CommandOutput:
    """Run the algebra command."""
    signature = Signature.from_string(config.signature)
    if signature.n < 2:
        raise ConfigError(f"the algebra needs at least two dimensions, got {signature}")

    rows, table = [], []
    closure = jacobi = spectrum = centrality = 0.0
    for name in config.reps:
        rep, expected = build_rep(name, signature)
        checks = verify_algebra(rep)
        cas = casimir(rep)
        deviation = max(abs(value - expected) for value, _ in cas.eigenvalues)
        closure = max(closure, checks.max_closure_residual, checks.antisymmetry_residual)
        jacobi = max(jacobi, checks.jacobi_residual)
        spectrum = max(spectrum, deviation)
        centrality = max(centrality, cas.centrality_residual)
        rows.append({
            "rep": name,
            "dim": rep.dim,
            "form": rep.form,
            "closure_residual": checks.max_closure_residual,
            "jacobi_residual": checks.jacobi_residual,
            "antisymmetry_residual": checks.antisymmetry_residual,
            "casimir": [{"value": v, "multiplicity": k} for v, k in cas.eigenvalues],
            "casimir_expected": expected,
            "casimir_residual": deviation,
            "centrality_residual": cas.centrality_residual,
        })
        table.extend({"rep": name, "eigenvalue": v, "multiplicity": k} for v, k in cas.eigenvalues)
        logger.info("rep %s: closure %.2e, casimir %s", name, checks.max_closure_residual, cas.eigenvalues)

    tol = config.tol or ALGEBRA_TOL
    invariants = [
        invariant_entry("closure", closure, tol),
        invariant_entry("jacobi_identity", jacobi, tol),
        invariant_entry("casimir_spectrum", spectrum, CASIMIR_TOL),
        invariant_entry("casimir_centrality", centrality, CASIMIR_TOL),
    ]
    results = {"signature": str(signature), "generators": signature.n * (signature.n - 1) // 2, "reps": rows}
    return CommandOutput(results, invariants, table, ["rep", "eigenvalue", "multiplicity"])
