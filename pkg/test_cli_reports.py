"""
hardy_factor - CLI report tests
Command dispatch, exit codes, report envelope and rendering
"""

import json
import logging
from pathlib import Path

import pytest

from hardy_core import DegreeWindow, OperatorSymbol
from completion_solver import CompletionProblem, complete
from cli_reports import (
    EXIT_FAIL,
    EXIT_PARSE,
    EXIT_PASS,
    EXIT_STAGE,
    RunManifest,
    execute,
    render_report,
    report_to_json,
    run,
)
from main import main

logger = logging.getLogger(__name__)

FIXTURES = Path(__file__).parent / "fixtures"


def _fixture(name: str) -> str:
    return str(FIXTURES / name)


@pytest.fixture(scope="module")
def non_dc_report():
    return execute(RunManifest("analyze", input_path=_fixture("non_dc_z1_z2.json")))


@pytest.fixture
def verify_input(tmp_path):
    f = OperatorSymbol.from_terms(1, 2, 1, {(0,): [[0.0], [-1.0]]})
    g = OperatorSymbol.from_terms(1, 1, 2, {(0,): [[0.0, -1.0]], (1,): [[1.0, 0.0]]})
    result = complete(CompletionProblem(f, g, DegreeWindow(1, 4)))
    path = tmp_path / "verify.json"
    path.write_text(json.dumps({
        "n": 1,
        "F": result.F.to_dict(),
        "Omega": result.omega.to_dict(),
        "window": {"d": 4},
        "innerColumns": 1,
    }), encoding="utf-8")
    return str(path)


def test_analyze_reports_failing_commutator(non_dc_report):
    logger.info("🧪 TEST: analyze on {z1, z2}")
    code, report = non_dc_report
    assert code == EXIT_FAIL
    assert report["status"] == "fail"
    first = report["checks"][0]
    assert first["name"].startswith("commutator")
    assert first["passed"] is False
    assert report["result"]["commutator"]["verdict"] is False
    assert report["result"]["reducing"]["reducing"] is False


def test_analyze_is_deterministic(non_dc_report):
    _, again = execute(RunManifest("analyze", input_path=_fixture("non_dc_z1_z2.json")))
    assert report_to_json(again) == report_to_json(non_dc_report[1])


def test_tolerance_override_reaches_checks():
    code, report = execute(RunManifest("analyze", input_path=_fixture("non_dc_z1_z2.json"),
                                       tolerance=2.0))
    assert report["checks"][0]["tolerance"] == 2.0
    assert report["manifest"]["overrides"]["tolerance"] == 2.0
    assert code == EXIT_PASS


def test_extract_inner_stage_failure():
    code, report = execute(RunManifest("extract-inner", input_path=_fixture("non_dc_z1_z2.json")))
    assert code == EXIT_STAGE
    assert report["status"] == "stage-failure"
    assert report["stage"] == "doubly-commuting"
    assert report["error"]["error"] == "NotDoublyCommutingError"
    assert report["result"]["partial"]["witnessPair"] == [1, 2]
    assert any(not check["passed"] for check in report["checks"])


def test_extract_inner_and_analyze_on_monomial_symbol():
    logger.info("🧪 TEST: extract-inner on a monomial symbol")
    code, report = execute(RunManifest("extract-inner", input_path=_fixture("monomial_inner.json")))
    assert code == EXIT_PASS
    theta = OperatorSymbol.from_dict(report["result"]["theta"])
    assert theta.shape == (3, 2)
    assert report["result"]["innerCertificate"]["pass"] is True

    code, report = execute(RunManifest("analyze", input_path=_fixture("monomial_inner.json")))
    assert code == EXIT_PASS
    assert report["result"]["symbolInnerCertificate"]["pass"] is True
    assert report["result"]["wandering"]["jointDim"] == 2


def test_rank_fixture():
    code, report = execute(RunManifest("rank", input_path=_fixture("rank_duplicate_rows.json")))
    assert code == EXIT_PASS
    assert report["result"]["rank"]["rank"] == 1
    assert report["checks"][-1]["name"] == "local rank == expected"


def test_complete_identity_fixture_and_window_override():
    code, report = execute(RunManifest("complete", input_path=_fixture("identity_completion.json")))
    assert code == EXIT_PASS
    assert report["result"]["dimCheck"] == {"dimEa": 1, "rankG": 1, "dimEc": 2, "satisfied": True}

    code, report = execute(RunManifest("complete", input_path=_fixture("identity_completion.json"),
                                       degree=1))
    assert code == EXIT_STAGE
    assert report["stage"] == "window"


def test_verify_command(verify_input):
    code, report = execute(RunManifest("verify", input_path=verify_input))
    assert code == EXIT_PASS
    assert report["result"]["innerCert"]["pass"] is True
    assert report["result"]["identityDegree"] == 2


def test_parse_errors(tmp_path):
    logger.info("🧪 TEST: parse errors exit with 2")
    broken = tmp_path / "broken.json"
    broken.write_text("{not json", encoding="utf-8")
    code, report = execute(RunManifest("analyze", input_path=str(broken)))
    assert code == EXIT_PARSE
    assert report["status"] == "parse-error"
    assert report["stage"] == "parse"

    code, _ = execute(RunManifest("complete"))
    assert code == EXIT_PARSE

    code, _ = execute(RunManifest("rank", input_path=str(tmp_path / "missing.json")))
    assert code == EXIT_PARSE

    both = tmp_path / "both.json"
    payload = json.loads((FIXTURES / "monomial_inner.json").read_text(encoding="utf-8"))
    payload["generators"] = [payload["symbol"]]
    both.write_text(json.dumps(payload), encoding="utf-8")
    code, report = execute(RunManifest("analyze", input_path=str(both)))
    assert code == EXIT_PARSE
    assert report["error"]["error"] == "ValidationError"

    misshapen = tmp_path / "misshapen.json"
    payload = json.loads((FIXTURES / "identity_completion.json").read_text(encoding="utf-8"))
    payload["dimEc"] = 3
    misshapen.write_text(json.dumps(payload), encoding="utf-8")
    code, _ = execute(RunManifest("complete", input_path=str(misshapen)))
    assert code == EXIT_PARSE


def test_report_envelope_and_rendering(non_dc_report):
    _, report = non_dc_report
    text = report_to_json(report)
    assert text.endswith("\n")
    assert list(json.loads(text)) == sorted(report)
    assert set(report) == {"manifest", "command", "status", "checks", "result"}

    rendered = render_report(report).splitlines()
    assert rendered[0].endswith("analyze: FAIL")
    assert rendered[1].rstrip().endswith("FAIL")
    assert len(rendered) == 1 + len(report["checks"])
    assert render_report(report) == render_report(json.loads(text))


def test_manifest_round_trip():
    manifest = RunManifest("complete", input_path="a.json", tolerance=1e-9, seed=3, degree=10,
                           sweep=(6, 8))
    assert RunManifest.from_dict(manifest.to_dict()) == manifest
    with pytest.raises(ValueError):
        RunManifest("factor")


def test_run_and_main_write_reports(tmp_path):
    out = tmp_path / "reports" / "rank.json"
    assert run(RunManifest("rank", input_path=_fixture("rank_duplicate_rows.json"),
                           output_path=str(out))) == EXIT_PASS
    assert json.loads(out.read_text(encoding="utf-8"))["status"] == "pass"

    text_out = tmp_path / "rank.txt"
    code = main(["rank", "--input", _fixture("rank_duplicate_rows.json"),
                 "--output", str(text_out), "--format", "text", "--seed", "0"])
    assert code == EXIT_PASS
    assert text_out.read_text(encoding="utf-8").splitlines()[0].endswith("rank: PASS")

    assert main(["extract-inner", "--input", _fixture("non_dc_z1_z2.json"),
                 "--output", str(tmp_path / "x.json")]) == EXIT_STAGE


def test_complete_sweep(tmp_path):
    """A sweep reports one row per window; the largest window decides the check."""
    logger.info("🧪 TEST: complete --sweep")
    code, report = execute(RunManifest("complete", input_path=_fixture("identity_completion.json"),
                                       sweep=(1, 3)))
    assert code == EXIT_PASS
    rows = report["result"]["sweep"]
    assert [row["degree"] for row in rows] == [1, 3]
    assert [row["status"] for row in rows] == ["stage-failure", "pass"]
    assert rows[0]["stage"] == "window"
    assert rows[1]["FOmega"] <= 1e-12
    assert [check["name"] for check in report["checks"]] == ["sweep: completion at d=3"]
    assert report["manifest"]["overrides"]["sweep"] == [1, 3]

    code, report = execute(RunManifest("complete", input_path=_fixture("identity_completion.json"),
                                       sweep=(3, 1)))
    assert code == EXIT_PASS

    code, report = execute(RunManifest("complete", input_path=_fixture("identity_completion.json"),
                                       sweep=(1,)))
    assert code == EXIT_FAIL
    assert report["checks"][0]["stage"] == "window"

    out = tmp_path / "sweep.json"
    assert main(["complete", "--input", _fixture("identity_completion.json"),
                 "--sweep", "1,3", "--output", str(out)]) == EXIT_PASS
    assert len(json.loads(out.read_text(encoding="utf-8"))["result"]["sweep"]) == 2
    with pytest.raises(SystemExit):
        main(["complete", "--input", _fixture("identity_completion.json"), "--sweep", "a,b"])
