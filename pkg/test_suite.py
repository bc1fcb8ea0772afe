"""
hardy_factor - Test Suite
End-to-end runs of the shipped fixtures and the selftest
"""

import json
import logging
from pathlib import Path

import numpy as np

# Configure logging
logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)

FIXTURES = Path(__file__).parent / "fixtures"


def test_exponential_fixture_completion():
    """Three-variable completion from the shipped fixture."""
    logger.info("\n" + "=" * 80)
    logger.info("🧪 TEST 1: Exponential column completion")
    logger.info("=" * 80)

    from cli_reports import EXIT_PASS, RunManifest, execute
    from hardy_core import OperatorSymbol
    from selftest import EXAMPLE_F0, EXAMPLE_THETA
    from beurling_engine import unitary_alignment

    code, report = execute(RunManifest("complete", input_path=str(FIXTURES / "example_1_6.json")))
    assert code == EXIT_PASS, [c["name"] for c in report["checks"] if not c["passed"]]

    result = report["result"]
    F = OperatorSymbol.from_dict(result["F"])
    theta = OperatorSymbol.from_dict(result["theta"])
    logger.info(f"  ✅ F(0) =\n{np.real(F.coefficient((0, 0, 0)))}")
    assert np.max(np.abs(F.coefficient((0, 0, 0)) - EXAMPLE_F0)) <= 1e-8

    _, alignment = unitary_alignment(theta, OperatorSymbol.constant(EXAMPLE_THETA, 3))
    logger.info(f"  ✅ Θ alignment residual: {alignment:.2e}")
    assert alignment <= 1e-8

    residuals = result["residuals"]
    for key in ("FOmega", "FOmegaTorus", "OmegaF", "OmegaFTorus"):
        logger.info(f"  ✅ {key}: {residuals[key]:.2e}")
        assert residuals[key] <= 1e-10
    assert result["dimCheck"] == {"dimEa": 2, "rankG": 1, "dimEc": 3, "satisfied": True}

    logger.info("✅ Exponential completion test PASSED\n")


def test_selftest_is_deterministic():
    """Same seed, byte-identical report."""
    logger.info("=" * 80)
    logger.info("🧪 TEST 2: Selftest determinism")
    logger.info("=" * 80)

    from cli_reports import EXIT_PASS, RunManifest, execute, report_to_json

    first_code, first = execute(RunManifest("selftest", seed=0))
    _, second = execute(RunManifest("selftest", seed=0))
    assert report_to_json(first) == report_to_json(second)
    assert first_code == EXIT_PASS, [c["name"] for c in first["checks"] if not c["passed"]]

    names = [check["name"] for check in first["checks"]]
    assert sum(name.startswith("defect identity") for name in names) == 18
    logger.info(f"  ✅ {len(names)} checks, identical across runs")
    logger.info("✅ Selftest determinism test PASSED\n")


def test_fixture_exit_codes():
    """Each shipped fixture lands on its documented exit code."""
    logger.info("=" * 80)
    logger.info("🧪 TEST 3: Fixture exit codes")
    logger.info("=" * 80)

    from cli_reports import EXIT_FAIL, EXIT_PASS, EXIT_STAGE, RunManifest, execute

    expectations = [
        ("analyze", "non_dc_z1_z2.json", EXIT_FAIL),
        ("extract-inner", "non_dc_z1_z2.json", EXIT_STAGE),
        ("extract-inner", "monomial_inner.json", EXIT_PASS),
        ("rank", "rank_duplicate_rows.json", EXIT_PASS),
        ("complete", "identity_completion.json", EXIT_PASS),
    ]
    for command, fixture, expected in expectations:
        code, report = execute(RunManifest(command, input_path=str(FIXTURES / fixture)))
        logger.info(f"  {'✅' if code == expected else '❌'} {command} {fixture}: "
                    f"exit {code} ({report['status']})")
        assert code == expected
        json.dumps(report)

    logger.info("✅ Fixture exit code test PASSED\n")


def main():
    """Run all tests."""
    logger.info("\n" + "🧪" * 40)
    logger.info("HARDY_FACTOR TEST SUITE")
    logger.info("🧪" * 40 + "\n")

    try:
        test_exponential_fixture_completion()
        test_selftest_is_deterministic()
        test_fixture_exit_codes()

        logger.info("=" * 80)
        logger.info("✅ ALL TESTS PASSED!")
        logger.info("=" * 80)
        return True

    except Exception as e:
        logger.error(f"\n❌ TEST FAILED: {e}")
        import traceback
        traceback.print_exc()
        return False


if __name__ == "__main__":
    success = main()
    exit(0 if success else 1)
