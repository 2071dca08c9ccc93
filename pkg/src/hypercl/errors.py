"""Exception hierarchy.

Every error raised by the package derives from :class:`HyperclError`, so
callers (the CLI in particular) can separate "a checked property failed"
from "the input was malformed".
"""

from __future__ import annotations


class HyperclError(Exception):
    """Base class for all package errors."""


class InvalidParams(HyperclError, ValueError):
    pass


class NonAdmissibleState(HyperclError, ValueError):
    pass


class SingularDA(HyperclError, ArithmeticError):
    pass


class DerivativeMismatch(HyperclError):
    """Analytic and finite-difference derivatives disagree."""


class AsymmetricInput(HyperclError, ValueError):
    pass


class MissingEntropyFlux(HyperclError):
    pass


class PathLeavesAdmissibleSet(HyperclError):
    pass


class LambdaTooLarge(InvalidParams):
    def __init__(self, lam: float, threshold: float) -> None:
        super().__init__(
            f"coupling lambda={lam!r} exceeds the admissible threshold "
            f"{threshold!r}; the entropy is not convex on the box")
        self.lam = lam
        self.threshold = threshold


class NonConvexFlux(InvalidParams):
    pass


class NonConvexEnergy(InvalidParams):
    pass


class NonStrictlyConvex(InvalidParams):
    pass


class GridMismatch(HyperclError, ValueError):
    pass


class FieldLeavesSampleBox(HyperclError):
    pass


class EpsilonExceedsDomain(HyperclError, ValueError):
    pass


class EpsilonBelowGrid(HyperclError, ValueError):
    pass


class LadderTooShort(HyperclError, ValueError):
    pass


class BracketFailure(HyperclError):
    pass


class ThetaNonMonotone(HyperclError):
    pass


class NonMonotoneCharacteristicMap(HyperclError):
    pass


class CharacteristicLeavesDomain(HyperclError):
    pass


class PlanarConditionViolated(HyperclError):
    pass


class StateLeftAdmissibleSet(HyperclError):
    pass


class NonInvertibleA(HyperclError):
    pass


class ConfigError(HyperclError, ValueError):
    """Malformed scenario configuration (CLI exit code 2)."""
