"""
hardy_factor - Configuration, error and verdict tests
"""

import pytest
from pydantic import ValidationError

from core.config import DEFAULT_TOLERANCES, Settings, Tolerances, get_settings, reset_settings
from core.errors import LeftInverseError, NotDoublyCommutingError, ShapeMismatchError
from core.verdicts import Check, all_passed, prefixed


@pytest.fixture
def clean_settings():
    reset_settings()
    yield
    reset_settings()


def test_settings_from_env(monkeypatch, clean_settings):
    monkeypatch.setenv("HARDY_FACTOR_TORUS_GRID", "6")
    monkeypatch.setenv("HARDY_FACTOR_RANK_SAMPLES", "not-a-number")
    monkeypatch.setenv("HARDY_FACTOR_THREADS", "0")
    monkeypatch.setenv("HARDY_FACTOR_LOG_LEVEL", "debug")
    settings = get_settings()
    assert settings.torus_grid == 6
    assert settings.rank_samples == 64
    assert settings.threads == 0
    assert settings.log_level == "DEBUG"
    assert get_settings() is settings


def test_settings_defaults(monkeypatch):
    for name in ("HARDY_FACTOR_TORUS_GRID", "HARDY_FACTOR_SEED", "HARDY_FACTOR_THREADS"):
        monkeypatch.delenv(name, raising=False)
    settings = Settings.from_env()
    assert (settings.torus_grid, settings.seed, settings.threads) == (8, 0, None)


def test_tolerance_override():
    loose = DEFAULT_TOLERANCES.override(1e-6)
    assert (loose.commutator, loose.projection, loose.inner, loose.residual) == (1e-6,) * 4
    assert loose.rank == DEFAULT_TOLERANCES.rank
    assert DEFAULT_TOLERANCES.override(None) is DEFAULT_TOLERANCES
    with pytest.raises(ValidationError):
        Tolerances(rank=0.0)


def test_errors_carry_stage_and_report():
    error = LeftInverseError("gf ≠ I", report={"leftInverse": 1.0})
    assert error.stage == "left-inverse"
    assert error.to_dict() == {
        "error": "LeftInverseError",
        "stage": "left-inverse",
        "message": "gf ≠ I",
        "report": {"leftInverse": 1.0},
    }
    assert NotDoublyCommutingError("x").report_dict() is None
    assert isinstance(ShapeMismatchError("x"), ValueError)
    assert ShapeMismatchError("x", stage="parse").stage == "parse"


def test_checks():
    checks = [Check("a", 1e-12, 1e-10), Check("b", 3, 3, "=="), Check("c", 0.1, 0.5, ">=")]
    assert [c.passed for c in checks] == [True, True, False]
    assert not all_passed(checks)
    assert Check.from_dict(checks[0].to_dict()) == checks[0]
    labelled = prefixed(checks, "trial 3")
    assert [c.name for c in labelled] == ["trial 3: a", "trial 3: b", "trial 3: c"]
    assert [c.stage for c in labelled] == [c.stage for c in checks]
    assert [c.passed for c in labelled] == [True, True, False]
    with pytest.raises(ValueError):
        Check("d", 0.0, 1.0, "<")
