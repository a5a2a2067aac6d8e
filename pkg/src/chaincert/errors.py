"""Exception hierarchy.

Every error raised by this package derives from :class:`ChainCertError`, so
callers can catch one type at the boundary. Subclasses are semantic: they name
the contract that was violated, not the module that noticed.
"""


class ChainCertError(Exception):
    """Base class for all package errors."""


class StructureError(ChainCertError):
    """A poset/observable contract was violated."""


class NoCommonRefinement(StructureError):
    """Meet requested for observables with no common finer observable."""


class MeetAbsent(StructureError):
    """The joint observable exists mathematically but is not an object."""


class InvalidArrow(StructureError):
    """Marginalization/conditioning requested along a non-arrow."""


class InvalidSector(StructureError):
    """Observable or law of the wrong kind for the requested operation."""


class LawError(ChainCertError):
    """A probability-law contract was violated."""


class ZeroMassFiber(LawError):
    """Conditioning on an outcome that carries no mass."""


class NotGaussian(LawError):
    """A gaussian-only functional was applied to a non-gaussian law."""


class SingularCovariance(LawError):
    """Covariance invalid (negative spectrum) or demotion skipped upstream."""


class BudgetTooSmall(ChainCertError):
    """Monte Carlo budget below the floor, or requested precision unreachable."""


class DivergentAction(ChainCertError):
    """Running mean of a conditional average drifted; integral looks divergent."""


class ClosureExplosion(ChainCertError):
    """Law closure exceeded the configured point cap."""


class DegenerateFit(ChainCertError):
    """Slope regression impossible (too few rows or no bandwidth variation)."""


class MalformedInput(ChainCertError):
    """Unreadable or schema-violating input file/flag."""
