"""Named pass/fail checks shared by the labs and the command line."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any


@dataclass
class Check:
    name: str
    passed: bool
    value: Any = None
    expected: Any = None
    tolerance: float | None = None
    warn: bool = False      # passed, but worth flagging

    @property
    def status(self) -> str:
        if not self.passed:
            return "fail"
        return "warn" if self.warn else "pass"

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "status": self.status,
            "value": jsonable(self.value),
            "expected": jsonable(self.expected),
            "tolerance": self.tolerance,
        }


@dataclass
class CheckReport:
    title: str = ""
    checks: list[Check] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    def note(self, name, value=None) -> Check:
        """An informational entry that never fails."""
        return self.add(name, True, value, warn=False)

    def add(self, name, passed, value=None, expected=None, tolerance=None, warn=False) -> Check:
        c = Check(name, bool(passed), value, expected, tolerance, warn)
        self.checks.append(c)
        return c

    def extend(self, other: "CheckReport", prefix: str = "") -> None:
        for c in other.checks:
            self.checks.append(Check(prefix + c.name, c.passed, c.value, c.expected, c.tolerance, c.warn))
        self.notes.extend(other.notes)

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)

    def failed(self) -> list[Check]:
        return [c for c in self.checks if not c.passed]

    def __getitem__(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)


def format_number(x) -> str:
    """15 significant digits for floats, p/q for rationals."""
    if isinstance(x, bool):
        return str(x).lower()
    if isinstance(x, Fraction):
        return f"{x.numerator}/{x.denominator}" if x.denominator != 1 else str(x.numerator)
    if isinstance(x, int):
        return str(x)
    if isinstance(x, complex):
        if x.imag == 0:
            return format_number(x.real)
        return f"{format_number(x.real)}{'+' if x.imag >= 0 else '-'}{format_number(abs(x.imag))}i"
    if isinstance(x, float):
        return f"{x:.15g}"
    return str(x)


def jsonable(x):
    import numpy as np

    if x is None or isinstance(x, (bool, str)):
        return x
    if isinstance(x, Fraction):
        return format_number(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(format_number(float(x)))
    if isinstance(x, float):
        return float(format_number(x))
    if isinstance(x, int):
        return x
    if isinstance(x, (complex, np.complexfloating)):
        return format_number(complex(x))
    if isinstance(x, dict):
        return {str(k): jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple, set, frozenset)):
        return [jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return jsonable(x.tolist())
    return str(x)
