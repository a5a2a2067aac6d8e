"""Result containers shared across modules.

All containers are plain frozen dataclasses with a ``to_dict`` that produces
JSON-ready primitives (floats, ints, strings, lists, dicts). Serialization
order is handled centrally by :mod:`chaincert.serialize`, which sorts keys, so
reports are byte-stable across runs.
"""
from __future__ import annotations

from dataclasses import dataclass, field


@dataclass(frozen=True)
class Estimate:
    """A numeric result with its uncertainty.

    ``std_error`` is 0.0 for closed-form values. ``method`` names how the
    number was produced ("closed-form", "mc", "quadrature", "exact-rational").
    """

    value: float
    std_error: float = 0.0
    method: str = "closed-form"
    budget: int = 0

    def to_dict(self) -> dict:
        return {
            "value": float(self.value),
            "std_error": float(self.std_error),
            "method": self.method,
            "budget": int(self.budget),
        }


@dataclass(frozen=True)
class CheckItem:
    name: str
    passed: bool
    detail: str = ""

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": bool(self.passed), "detail": self.detail}


@dataclass(frozen=True)
class ValidationReport:
    """Outcome of structure validation: one item per axiom checked."""

    items: tuple[CheckItem, ...]

    @property
    def ok(self) -> bool:
        return all(item.passed for item in self.items)

    def failures(self) -> list[CheckItem]:
        return [item for item in self.items if not item.passed]

    def to_dict(self) -> dict:
        return {"ok": self.ok, "items": [i.to_dict() for i in self.items]}


@dataclass(frozen=True)
class IdentityCase:
    """One instance of an identity check: lhs vs rhs at a tolerance."""

    label: str
    lhs: Estimate
    rhs: Estimate
    residual: float
    tolerance: float
    passed: bool

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "lhs": self.lhs.to_dict(),
            "rhs": self.rhs.to_dict(),
            "residual": float(self.residual),
            "tolerance": float(self.tolerance),
            "passed": bool(self.passed),
        }


@dataclass(frozen=True)
class IdentityReport:
    """Aggregate of identity cases for one named check."""

    check: str
    cases: tuple[IdentityCase, ...]
    params: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.cases)

    @property
    def max_residual(self) -> float:
        return max((c.residual for c in self.cases), default=0.0)

    def to_dict(self) -> dict:
        return {
            "check": self.check,
            "passed": self.passed,
            "max_residual": float(self.max_residual),
            "n_cases": len(self.cases),
            "params": dict(self.params),
            "cases": [c.to_dict() for c in self.cases],
        }


@dataclass(frozen=True)
class ConvergenceRow:
    """One row of a kernel-density convergence run."""

    n: int
    h: float
    j: Estimate
    s: Estimate
    phi: dict  # candidate label -> Estimate

    def to_dict(self) -> dict:
        return {
            "n": int(self.n),
            "h": float(self.h),
            "j": self.j.to_dict(),
            "s": self.s.to_dict(),
            "phi": {k: v.to_dict() for k, v in self.phi.items()},
        }


@dataclass(frozen=True)
class SlopeReport:
    """Fitted slope of the candidate functional against log bandwidth."""

    a: float
    b: float
    c: float
    dim: int
    slope: float
    theoretical: float
    passed: bool
    n_rows: int

    def to_dict(self) -> dict:
        return {
            "a": self.a,
            "b": self.b,
            "c": self.c,
            "dim": self.dim,
            "slope": float(self.slope),
            "theoretical": float(self.theoretical),
            "passed": bool(self.passed),
            "n_rows": self.n_rows,
        }


@dataclass(frozen=True)
class NullspaceReport:
    """Nullspace of the chain-rule constraint system on a law closure."""

    dimension: int
    n_points: int
    n_rows: int
    entropy_residual: float
    singular_values: tuple[float, ...]
    basis: object = None  # (n_points, dimension) ndarray; omitted from JSON

    def to_dict(self) -> dict:
        return {
            "dimension": int(self.dimension),
            "n_points": int(self.n_points),
            "n_rows": int(self.n_rows),
            "entropy_residual": float(self.entropy_residual),
            "smallest_singular_values": [float(s) for s in self.singular_values],
        }
