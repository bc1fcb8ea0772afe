"""
hardy_factor - Selftest
=======================

Fixed certification suite run by `main.py selftest`:

1. defect identity: Σ_A (−1)^|A| M_A M_A* equals the projection onto
   constants for every n ≤ 3, 1 ≤ d ≤ 3, dimE ≤ 2
2. the three-variable completion example (f = exponential column, g = [e^{−z_1}, 0, 0]) at d = 8
3. seeded random inner symbols: span, extract, and compare

Same seed ⇒ identical checks and result payload.
"""

import logging
import sys
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from core.config import DEFAULT_TOLERANCES, Tolerances
from core.errors import HardyFactorError
from core.verdicts import Check, all_passed, prefixed
from hardy_core import DegreeWindow, OperatorSymbol, concat_columns, concat_rows, exp_monomial_symbol
from subspace_lab import constants_projection, defect_projection
from beurling_engine import (
    beurling_factor,
    random_inner_symbol,
    span_of_symbol,
    unitary_alignment,
)
from completion_solver import CompletionProblem, complete

logger = logging.getLogger("hardy_factor")

EXAMPLE_THETA = np.array([[0, 0], [1, 0], [0, 1]], dtype=np.complex128)
EXAMPLE_F0 = np.array([[1, 0, 0], [1, 1, 0], [1, 0, 1]], dtype=np.complex128)
EXAMPLE_TRUNCATION = 6


def exponential_example_problem(degree: int = 8, tolerances: Tolerances = DEFAULT_TOLERANCES,
                                grid: Optional[int] = None, seed: int = 1) -> CompletionProblem:
    """f = [e^{z_1}; e^{z_2}; e^{z_3}], g = [e^{−z_1}, 0, 0], exponentials truncated at degree 6."""
    n = 3
    exps = [exp_monomial_symbol(1.0, i, EXAMPLE_TRUNCATION, n) for i in (1, 2, 3)]
    f = concat_rows(concat_rows(exps[0], exps[1]), exps[2])
    g = concat_columns(exp_monomial_symbol(-1.0, 1, EXAMPLE_TRUNCATION, n),
                       OperatorSymbol.zeros(DegreeWindow(n, 0), 1, 2))
    return CompletionProblem(f, g, DegreeWindow(n, degree), tolerances, seed, grid)


def defect_identity_checks(tolerance: float = DEFAULT_TOLERANCES.identity) -> List[Check]:
    checks = []
    for n in (1, 2, 3):
        for d in (1, 2, 3):
            for dim_e in (1, 2):
                window = DegreeWindow(n, d)
                deviation = float(np.max(np.abs(defect_projection(window, dim_e)
                                                - constants_projection(window, dim_e))))
                checks.append(Check(f"defect identity n={n} d={d} dimE={dim_e}",
                                    deviation, tolerance, "<=", "defect"))
    logger.info(f"🧪 defect identity: {sum(c.passed for c in checks)}/{len(checks)} configurations")
    return checks


def _stage_failure_check(label: str, exc: HardyFactorError) -> Check:
    return Check(f"{label}: stage {exc.stage} completed", 0.0, 1.0, ">=", exc.stage)


def exponential_example_checks(tolerances: Tolerances = DEFAULT_TOLERANCES,
                               grid: Optional[int] = None) -> Tuple[List[Check], Dict[str, Any]]:
    label = "example completion"
    try:
        result = complete(exponential_example_problem(tolerances=tolerances, grid=grid))
    except HardyFactorError as exc:
        logger.error(f"❌ {label} failed at {exc.stage}: {exc.message}")
        return [_stage_failure_check(label, exc)], {"stage": exc.stage}

    checks = prefixed(result.checks(), label)
    f0 = result.F.coefficient((0, 0, 0))
    checks.append(Check(f"{label}: F(0) deviation", float(np.max(np.abs(f0 - EXAMPLE_F0))),
                        tolerances.identity, "<=", "assemble-F"))
    reference = OperatorSymbol.constant(EXAMPLE_THETA, 3)
    if result.theta.shape == reference.shape:
        _, alignment = unitary_alignment(result.theta, reference)
    else:
        alignment = 1.0
    checks.append(Check(f"{label}: theta = reference theta U residual", alignment,
                        tolerances.projection, "<=", "extract-inner"))
    checks.append(Check(f"{label}: rank g", result.rank_report.rank, 1, "==", "rank-nullity"))
    summary = {
        "residuals": {k: float(v) for k, v in result.residuals.items()},
        "dimCheck": result.dim_check.to_dict(),
        "theta": result.theta.to_dict(),
        "kernelRangeDistance": float(result.kernel_range_distance),
    }
    return checks, summary


def round_trip_checks(seed: int = 0, count: int = 10, degree: int = 6,
                      tolerances: Tolerances = DEFAULT_TOLERANCES,
                      grid: Optional[int] = None) -> Tuple[List[Check], List[Dict[str, Any]]]:
    """Random inner Θ (n ≤ 3, dimensions ≤ 4, degrees ≤ 2): span, extract, compare."""
    rng = np.random.default_rng(seed)
    checks: List[Check] = []
    rows: List[Dict[str, Any]] = []
    for trial in range(count):
        n = int(rng.integers(1, 4))
        dim_e = int(rng.integers(1, 5))
        cols = int(rng.integers(1, dim_e + 1))
        theta = random_inner_symbol(rng, n, dim_e, cols, max_degree=2)
        label = f"round trip {trial} (n={n}, {dim_e}x{cols})"
        S = span_of_symbol(theta, DegreeWindow(n, degree), tolerances)
        try:
            factorization = beurling_factor(S, tolerances, grid)
        except HardyFactorError as exc:
            logger.error(f"❌ {label} failed at {exc.stage}: {exc.message}")
            checks.append(_stage_failure_check(label, exc))
            rows.append({"trial": trial, "n": n, "shape": [dim_e, cols], "stage": exc.stage})
            continue
        checks += prefixed(factorization.checks(), label)
        checks.append(Check(f"{label}: recovered columns", factorization.theta.cols, cols,
                            "==", "extract-inner"))
        alignment = (unitary_alignment(factorization.theta, theta)[1]
                     if factorization.theta.shape == theta.shape else 1.0)
        checks.append(Check(f"{label}: theta' = theta U residual", alignment,
                            tolerances.projection, "<=", "extract-inner"))
        rows.append({"trial": trial, "n": n, "shape": [dim_e, cols],
                     "rangeDistance": float(factorization.range_distance)})
    logger.info(f"🧪 round trips: {count} symbols, {sum(not c.passed for c in checks)} failing checks")
    return checks, rows


def run_selftest(seed: int = 0, tolerances: Tolerances = DEFAULT_TOLERANCES,
                 grid: Optional[int] = None) -> Tuple[List[Check], Dict[str, Any]]:
    logger.info("=" * 80)
    logger.info(f"🧪 SELFTEST (seed {seed})")
    logger.info("=" * 80)
    checks = defect_identity_checks(tolerances.identity)
    example, example_summary = exponential_example_checks(tolerances, grid)
    checks += example
    trips, trip_rows = round_trip_checks(seed, tolerances=tolerances, grid=grid)
    checks += trips
    status = "✅ PASSED" if all_passed(checks) else "❌ FAILED"
    logger.info(f"{status}: {sum(c.passed for c in checks)}/{len(checks)} checks")
    return checks, {"seed": seed, "example": example_summary, "roundTrips": trip_rows}


def main() -> int:
    logging.basicConfig(level=logging.INFO, format="%(message)s", stream=sys.stderr)
    checks, _ = run_selftest()
    return 0 if all_passed(checks) else 1


if __name__ == "__main__":
    sys.exit(main())
