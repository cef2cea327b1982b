"""Structured PASS/FAIL/WARN records shared by all check operations."""

from dataclasses import dataclass, field, asdict


@dataclass
class Finding:
    check: str
    status: str  # "PASS" | "FAIL" | "WARN"
    values: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)
    message: str = ""
    level: int = -1  # refinement level, filled in by the harness

    @property
    def failed(self):
        return self.status == "FAIL"

    def as_dict(self):
        return asdict(self)
