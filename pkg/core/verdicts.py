"""
hardy_factor - Verdict records

A Check is one certified invariant: a measured value compared against a
tolerance. Certificates expose their checks so the CLI can decide the exit
code and render PASS/FAIL lines.
"""

from dataclasses import dataclass
from typing import Any, Dict, Iterable, List

RELATIONS = ("<=", ">=", "==")


@dataclass(frozen=True)
class Check:
    name: str
    value: float
    tolerance: float
    relation: str = "<="
    stage: str = ""

    def __post_init__(self):
        if self.relation not in RELATIONS:
            raise ValueError(f"unknown relation {self.relation!r}")

    @property
    def passed(self) -> bool:
        if self.relation == "<=":
            return bool(self.value <= self.tolerance)
        if self.relation == ">=":
            return bool(self.value >= self.tolerance)
        return bool(self.value == self.tolerance)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "stage": self.stage,
            "value": float(self.value),
            "tolerance": float(self.tolerance),
            "relation": self.relation,
            "passed": self.passed,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Check":
        return cls(
            name=data["name"],
            value=data["value"],
            tolerance=data["tolerance"],
            relation=data.get("relation", "<="),
            stage=data.get("stage", ""),
        )


def all_passed(checks: Iterable[Check]) -> bool:
    return all(check.passed for check in checks)


def prefixed(checks: Iterable[Check], label: str) -> List[Check]:
    """Copies of ``checks`` with ``label: `` in front of each name."""
    return [
        Check(f"{label}: {c.name}", c.value, c.tolerance, c.relation, c.stage) for c in checks
    ]
