"""
hardy_factor - CLI Reports
==========================

Input-file schemas, command dispatch and report rendering.

A report is one JSON object:
    {manifest, command, status, checks, result[, stage, error]}
status is "pass", "fail", "stage-failure" or "parse-error". The text form is
derived from the JSON form only.

Exit codes: 0 every check passes, 1 a check fails, 2 the input does not
parse, 3 a library precondition or pipeline stage failed.
"""

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple, Union

from pydantic import BaseModel, Field, ValidationError, conlist, model_validator

from core.config import DEFAULT_TOLERANCES, HARDY_FACTOR_VERSION, Tolerances, get_settings
from core.errors import HardyFactorError, ProblemParseError
from core.verdicts import Check, all_passed
from hardy_core import DegreeWindow, HardyElement, OperatorSymbol, symbol_from_dict
from subspace_lab import SubspaceBasis, doubly_commuting_test, reducing_test, submodule_span
from beurling_engine import (
    beurling_factor,
    inner_guard_degree,
    innerness_certificate,
    joint_wandering,
    verify_wandering_decomposition,
    wandering_invariance_residual,
)
from completion_solver import (
    CompletionProblem,
    complete,
    local_rank,
    minor_certificate,
    residual_sweep,
    verify_completion,
)

logger = logging.getLogger("hardy_factor")

COMMANDS = ("analyze", "extract-inner", "complete", "rank", "verify", "selftest")

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_PARSE = 2
EXIT_STAGE = 3


# ============================================================================
# Input schemas
# ============================================================================

ComplexEntry = Union[float, conlist(float, min_length=2, max_length=2)]


class TermModel(BaseModel):
    k: List[int]
    matrix: List[List[ComplexEntry]]


class SymbolModel(BaseModel):
    n: int = Field(ge=1)
    rows: int = Field(ge=0)
    cols: int = Field(ge=0)
    terms: List[TermModel] = Field(default_factory=list)

    def to_symbol(self, window: Optional[DegreeWindow] = None) -> OperatorSymbol:
        try:
            return symbol_from_dict(self.model_dump(), window)
        except HardyFactorError as exc:
            raise ProblemParseError(f"symbol: {exc.message}") from exc

    def to_element(self, window: DegreeWindow) -> HardyElement:
        symbol = self.to_symbol()
        if symbol.cols != 1:
            raise ProblemParseError(f"an element has cols=1, got {symbol.cols}")
        element = symbol.column(0)
        try:
            return element.embed(window)
        except HardyFactorError as exc:
            raise ProblemParseError(f"generator: {exc.message}") from exc


class WindowModel(BaseModel):
    d: int = Field(ge=0)


class AnalyzeInput(BaseModel):
    """analyze / extract-inner: generators, or a symbol whose columns generate S."""

    n: int = Field(ge=1)
    dimE: int = Field(ge=1)
    window: WindowModel
    generators: Optional[List[SymbolModel]] = None
    symbol: Optional[SymbolModel] = None
    tolerances: Dict[str, float] = Field(default_factory=dict)

    @model_validator(mode="after")
    def _one_source(self):
        if (self.generators is None) == (self.symbol is None):
            raise ValueError("give exactly one of 'generators' or 'symbol'")
        for item in (self.generators or []) + ([self.symbol] if self.symbol else []):
            if item.n != self.n:
                raise ValueError(f"symbol has n={item.n}, problem has n={self.n}")
        if self.generators is not None:
            if not self.generators:
                raise ValueError("'generators' is empty")
            for item in self.generators:
                if item.rows != self.dimE or item.cols != 1:
                    raise ValueError(f"generator shape {item.rows}×{item.cols}, expected {self.dimE}×1")
        elif self.symbol.rows != self.dimE:
            raise ValueError(f"symbol has {self.symbol.rows} rows, dimE is {self.dimE}")
        return self


class CompleteInput(BaseModel):
    n: int = Field(ge=1)
    dimE: int = Field(ge=1)
    dimEc: int = Field(ge=1)
    f: SymbolModel
    g: SymbolModel
    window: WindowModel
    tolerances: Dict[str, float] = Field(default_factory=dict)
    seed: int = 0
    torusGrid: Optional[int] = Field(default=None, ge=1)
    rankSamples: Optional[int] = Field(default=None, ge=1)

    @model_validator(mode="after")
    def _shapes(self):
        if (self.f.rows, self.f.cols) != (self.dimEc, self.dimE):
            raise ValueError(f"f is {self.f.rows}×{self.f.cols}, expected {self.dimEc}×{self.dimE}")
        if (self.g.rows, self.g.cols) != (self.dimE, self.dimEc):
            raise ValueError(f"g is {self.g.rows}×{self.g.cols}, expected {self.dimE}×{self.dimEc}")
        return self


class RankInput(BaseModel):
    n: int = Field(ge=1)
    g: SymbolModel
    samples: Optional[int] = Field(default=None, ge=1)
    seed: int = 0
    expectedRank: Optional[int] = Field(default=None, ge=0)


class VerifyInput(BaseModel):
    n: int = Field(ge=1)
    F: SymbolModel
    Omega: SymbolModel
    window: WindowModel
    innerColumns: Optional[int] = Field(default=None, ge=0)
    tolerances: Dict[str, float] = Field(default_factory=dict)


# ============================================================================
# Manifest and report envelope
# ============================================================================

@dataclass(frozen=True)
class RunManifest:
    command: str
    input_path: Optional[str] = None
    output_path: Optional[str] = None
    output_format: str = "json"
    tolerance: Optional[float] = None
    seed: Optional[int] = None
    degree: Optional[int] = None
    torus_grid: Optional[int] = None
    sweep: Optional[Tuple[int, ...]] = None
    version: str = HARDY_FACTOR_VERSION

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ValueError(f"unknown command {self.command!r}; expected one of {', '.join(COMMANDS)}")
        if self.output_format not in ("json", "text"):
            raise ValueError(f"unknown format {self.output_format!r}")

    def to_dict(self) -> Dict[str, Any]:
        return {
            "command": self.command,
            "inputPath": self.input_path,
            "outputPath": self.output_path,
            "format": self.output_format,
            "overrides": {
                "tolerance": self.tolerance,
                "seed": self.seed,
                "degree": self.degree,
                "torusGrid": self.torus_grid,
                "sweep": list(self.sweep) if self.sweep else None,
            },
            "version": self.version,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "RunManifest":
        overrides = data.get("overrides", {})
        return cls(
            command=data["command"],
            input_path=data.get("inputPath"),
            output_path=data.get("outputPath"),
            output_format=data.get("format", "json"),
            tolerance=overrides.get("tolerance"),
            seed=overrides.get("seed"),
            degree=overrides.get("degree"),
            torus_grid=overrides.get("torusGrid"),
            sweep=tuple(overrides["sweep"]) if overrides.get("sweep") else None,
            version=data.get("version", HARDY_FACTOR_VERSION),
        )


def build_report(manifest: RunManifest, checks: List[Check], result: Dict[str, Any],
                 status: Optional[str] = None) -> Dict[str, Any]:
    return {
        "manifest": manifest.to_dict(),
        "command": manifest.command,
        "status": status or ("pass" if all_passed(checks) else "fail"),
        "checks": [check.to_dict() for check in checks],
        "result": result,
    }


def report_to_json(report: Dict[str, Any]) -> str:
    return json.dumps(report, indent=2, sort_keys=True) + "\n"


def write_output(text: str, path: Optional[str]) -> None:
    if path is None:
        print(text, end="")
        return
    out_path = Path(path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    with open(out_path, "w", encoding="utf-8") as fp:
        fp.write(text)


# ============================================================================
# Rendering
# ============================================================================

def render_report(report: Any) -> str:
    """One PASS/FAIL line per check, in report order; deterministic."""
    if not isinstance(report, dict):
        checks = report.checks()
        report = {
            "command": type(report).__name__,
            "status": "pass" if all_passed(checks) else "fail",
            "checks": [check.to_dict() for check in checks],
        }
    manifest = report.get("manifest", {})
    lines = [f"hardy_factor {manifest.get('version', HARDY_FACTOR_VERSION)} "
             f"{report.get('command', '?')}: {report.get('status', '?').upper()}"]
    if report.get("stage"):
        lines.append(f"stage failure at {report['stage']}: {report.get('error', '')}")
    for item in report.get("checks", []):
        verdict = "PASS" if item["passed"] else "FAIL"
        stage = f"[{item['stage']}]" if item.get("stage") else ""
        lines.append(f"{stage:<20} {item['name']:<48} {item['value']:.3e} "
                     f"{item['relation']} {item['tolerance']:.1e}  {verdict}")
    return "\n".join(lines) + "\n"


# ============================================================================
# Command handlers
# ============================================================================

Handler = Callable[[RunManifest, Dict[str, Any], Tolerances], Tuple[List[Check], Dict[str, Any]]]


def _tolerances(manifest: RunManifest, from_file: Dict[str, float]) -> Tolerances:
    try:
        base = Tolerances(**{**DEFAULT_TOLERANCES.model_dump(), **from_file})
    except ValidationError as exc:
        raise ProblemParseError(f"tolerances: {exc}") from exc
    return base.override(manifest.tolerance)


def _subspace_from(model: AnalyzeInput, manifest: RunManifest,
                   tolerances: Tolerances) -> Tuple[SubspaceBasis, Optional[OperatorSymbol]]:
    d = manifest.degree if manifest.degree is not None else model.window.d
    window = DegreeWindow(model.n, d)
    if model.symbol is not None:
        symbol = model.symbol.to_symbol()
        return submodule_span(symbol.columns(), window, tolerances.rank), symbol
    generators = [g.to_element(window) for g in model.generators]
    return submodule_span(generators, window, tolerances.rank), None


def _cmd_analyze(manifest: RunManifest, payload: Dict[str, Any], _: Tolerances):
    model = AnalyzeInput(**payload)
    tolerances = _tolerances(manifest, model.tolerances)
    S, symbol = _subspace_from(model, manifest, tolerances)
    report = doubly_commuting_test(S, tolerances.commutator)
    reducing = reducing_test(S, tolerances.invariance)
    data = joint_wandering(S, report, tolerances)
    decomposition = verify_wandering_decomposition(S, data.joint, tolerances)

    checks = report.checks()
    consistent = (not reducing.reducing) or report.verdict
    checks.append(Check("reducing implies doubly commuting", float(consistent), 1.0, "==", "reducing"))
    result: Dict[str, Any] = {
        "subspaceDim": S.dim,
        "ambientDim": S.ambient_dim,
        "window": S.window.to_dict(),
        "commutator": report.to_dict(),
        "reducing": reducing.to_dict(),
        "wandering": data.to_dict(),
        "decomposition": decomposition.to_dict(),
    }
    if report.verdict:
        checks += decomposition.checks()
        invariance = wandering_invariance_residual(S, data)
        result["invarianceResidual"] = invariance
        checks.append(Check("wandering invariance residual", invariance,
                            tolerances.commutator, "<=", "wandering"))
    if symbol is not None:
        certificate = innerness_certificate(symbol, inner_guard_degree(S.window, symbol),
                                            manifest.torus_grid, tolerances.inner)
        result["symbolInnerCertificate"] = certificate.to_dict()
    return checks, result


def _cmd_extract_inner(manifest: RunManifest, payload: Dict[str, Any], _: Tolerances):
    model = AnalyzeInput(**payload)
    tolerances = _tolerances(manifest, model.tolerances)
    S, _symbol = _subspace_from(model, manifest, tolerances)
    factorization = beurling_factor(S, tolerances, manifest.torus_grid)
    return factorization.checks(), factorization.to_dict()


def _cmd_complete(manifest: RunManifest, payload: Dict[str, Any], _: Tolerances):
    model = CompleteInput(**payload)
    tolerances = _tolerances(manifest, model.tolerances)
    d = manifest.degree if manifest.degree is not None else model.window.d
    problem = CompletionProblem(
        f=model.f.to_symbol(),
        g=model.g.to_symbol(),
        window=DegreeWindow(model.n, d),
        tolerances=tolerances,
        seed=manifest.seed if manifest.seed is not None else model.seed,
        torus_grid=manifest.torus_grid or model.torusGrid,
        rank_samples=model.rankSamples,
    )
    if manifest.sweep:
        rows = residual_sweep(problem, manifest.sweep)
        last = max(rows, key=lambda row: row["degree"])
        checks = [Check(f"sweep: completion at d={last['degree']}", float(last["status"] == "pass"),
                        1.0, ">=", last["stage"] or "residuals")]
        return checks, {"sweep": rows}
    result = complete(problem)
    return result.checks(), result.to_dict()


def _cmd_rank(manifest: RunManifest, payload: Dict[str, Any], tolerances: Tolerances):
    model = RankInput(**payload)
    g = model.g.to_symbol()
    seed = manifest.seed if manifest.seed is not None else model.seed
    report = local_rank(g, model.samples, seed, tolerances.local_rank)
    minor = minor_certificate(g, report, tolerances.local_rank)
    checks = minor.checks()
    if model.expectedRank is not None:
        checks.append(Check("local rank == expected", report.rank, model.expectedRank, "==", "rank"))
    return checks, {"rank": report.to_dict(), "minor": minor.to_dict()}


def _cmd_verify(manifest: RunManifest, payload: Dict[str, Any], _: Tolerances):
    model = VerifyInput(**payload)
    tolerances = _tolerances(manifest, model.tolerances)
    d = manifest.degree if manifest.degree is not None else model.window.d
    report = verify_completion(model.F.to_symbol(), model.Omega.to_symbol(), DegreeWindow(model.n, d),
                               manifest.torus_grid, model.innerColumns, tolerances)
    return report.checks(), report.to_dict()


def _cmd_selftest(manifest: RunManifest, payload: Dict[str, Any], tolerances: Tolerances):
    from selftest import run_selftest

    seed = manifest.seed if manifest.seed is not None else get_settings().seed
    return run_selftest(seed=seed, tolerances=tolerances, grid=manifest.torus_grid)


HANDLERS: Dict[str, Handler] = {
    "analyze": _cmd_analyze,
    "extract-inner": _cmd_extract_inner,
    "complete": _cmd_complete,
    "rank": _cmd_rank,
    "verify": _cmd_verify,
    "selftest": _cmd_selftest,
}


# ============================================================================
# Run
# ============================================================================

def _load_payload(manifest: RunManifest) -> Dict[str, Any]:
    if manifest.command == "selftest":
        return {}
    if not manifest.input_path:
        raise ProblemParseError(f"'{manifest.command}' needs --input")
    try:
        with open(manifest.input_path, "r", encoding="utf-8") as fp:
            payload = json.load(fp)
    except FileNotFoundError as exc:
        raise ProblemParseError(f"input file not found: {manifest.input_path}") from exc
    except json.JSONDecodeError as exc:
        raise ProblemParseError(f"input is not valid JSON: {exc}") from exc
    if not isinstance(payload, dict):
        raise ProblemParseError("input must be a JSON object")
    return payload


def execute(manifest: RunManifest) -> Tuple[int, Dict[str, Any]]:
    """Run one command and return (exit code, report)."""
    tolerances = DEFAULT_TOLERANCES.override(manifest.tolerance)
    try:
        payload = _load_payload(manifest)
        checks, result = HANDLERS[manifest.command](manifest, payload, tolerances)
    except (ProblemParseError, ValidationError) as exc:
        message = exc.message if isinstance(exc, ProblemParseError) else str(exc)
        logger.error(f"❌ {manifest.command}: input does not parse: {message}")
        report = build_report(manifest, [], {}, status="parse-error")
        report.update({"stage": "parse", "error": {"error": type(exc).__name__, "message": message}})
        return EXIT_PARSE, report
    except HardyFactorError as exc:
        logger.error(f"❌ {manifest.command}: stage '{exc.stage}' failed: {exc.message}")
        partial = exc.report
        checks = partial.checks() if hasattr(partial, "checks") else []
        report = build_report(manifest, checks, {"partial": exc.report_dict()}, status="stage-failure")
        report.update({"stage": exc.stage, "error": exc.to_dict()})
        return EXIT_STAGE, report

    report = build_report(manifest, checks, result)
    passed = report["status"] == "pass"
    failing = sum(1 for c in checks if not c.passed)
    logger.info(f"{'✅' if passed else '❌'} {manifest.command}: {len(checks) - failing}/{len(checks)} checks pass")
    return (EXIT_PASS if passed else EXIT_FAIL), report


def run(manifest: RunManifest) -> int:
    """Execute the manifest, write the report, return the exit status."""
    code, report = execute(manifest)
    text = report_to_json(report) if manifest.output_format == "json" else render_report(report)
    write_output(text, manifest.output_path)
    return code
