"""
Exception hierarchy shared by every lipkit module.
Precondition failures, numerical trouble and contract violations are kept apart so the
runner can map them to fail / inconclusive statuses.
"""

from typing import Any


class LipkitError(Exception):
    """Base class for all library errors."""


class StructuralError(LipkitError):
    """Malformed input: non-square matrices, mismatched lengths, missing subset points."""


class PreconditionError(LipkitError):
    """An operation was called outside its documented domain."""


class DegenerateFunctionalError(PreconditionError):
    """The functional has Lipschitz norm zero."""


class NotUniformlyConvexError(PreconditionError):
    """A uniformly convex model was required but a polyhedral one was given."""


class RangeError(PreconditionError):
    """A value fell outside its admissible interval."""


class SizeGuardError(PreconditionError):
    """Input too large for an exhaustive or exact routine."""


class NumericalError(LipkitError):
    """Solver failure. ``diagnostics`` carries whatever the backend reported."""

    def __init__(self, message: str, diagnostics: dict[str, Any] | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class LpInfeasibleError(NumericalError):
    pass


class LpUnboundedError(NumericalError):
    pass


class GridTooCoarseError(LipkitError):
    """No grid pair satisfies a smallness constraint at the current resolution."""

    def __init__(self, message: str, needed_resolution: int | None = None):
        super().__init__(message)
        self.needed_resolution = needed_resolution


class SamplerExhaustedError(LipkitError):
    """Rejection sampling produced no admissible point."""


class ContractViolationError(LipkitError):
    """A step output broke one of the audited properties of an iterative loop."""

    def __init__(
        self,
        property_name: str,
        measured: float,
        bound: float,
        iteration: int | None = None,
    ):
        where = f" at iteration {iteration}" if iteration is not None else ""
        super().__init__(
            f"property ({property_name}) violated{where}: measured {measured!r}, bound {bound!r}"
        )
        self.property_name = property_name
        self.measured = measured
        self.bound = bound
        self.iteration = iteration


class CorrectorNotAchievedError(LipkitError):
    """The staged corrector returned without meeting its distance bound."""

    def __init__(self, message: str, result: Any = None):
        super().__init__(message)
        self.result = result


class ScenarioParseError(LipkitError):
    """A manifest or scenario document failed validation."""

    def __init__(self, message: str, path: str = "$"):
        super().__init__(f"{path}: {message}")
        self.path = path
