"""
Exception hierarchy shared by every package.

Each error also derives from the closest builtin so callers that only know
about ``ValueError`` / ``KeyError`` / ``RuntimeError`` still catch it.
"""

from __future__ import annotations


class VPNetError(Exception):
    """Root of all errors raised by this project."""


# -------------------------------------------------------------------
# Operators / training
# -------------------------------------------------------------------


class ShapeMismatchError(VPNetError, ValueError):
    def __init__(self, operator: str, shape_a, shape_b, detail: str = ""):
        self.operator = operator
        self.shape_a = tuple(shape_a)
        self.shape_b = tuple(shape_b)
        msg = f"{operator}: incompatible shapes {self.shape_a} and {self.shape_b}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


class NonFiniteInputError(VPNetError, ValueError):
    def __init__(self, operator: str):
        self.operator = operator
        super().__init__(f"{operator}: non-finite input")


class UnregisteredOperatorError(VPNetError, KeyError):
    def __init__(self, kind: str):
        self.kind = kind
        super().__init__(f"no backward registered for operator {kind!r}")

    def __str__(self) -> str:
        return self.args[0]


class BackwardBeforeForwardError(VPNetError, RuntimeError):
    def __init__(self, operator: str):
        self.operator = operator
        super().__init__(f"{operator}: backward called before forward")


class MissingGradientError(VPNetError, ValueError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"parameter {name!r} has no accumulated gradient")


class DuplicateParameterError(VPNetError, ValueError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"parameter {name!r} already exists")


# -------------------------------------------------------------------
# Geometry / data
# -------------------------------------------------------------------


class ProjectionError(VPNetError, ValueError):
    """A point at or behind the camera plane (z <= 0) cannot be projected."""


class CalibrationError(VPNetError, ValueError):
    def __init__(self, message: str, key: str | None = None):
        self.key = key
        super().__init__(message)


class FormatError(VPNetError, ValueError):
    """A file does not follow its declared binary/text format."""


class DatasetError(VPNetError, ValueError):
    """Dataset directory is incomplete or inconsistent."""


class SamplingError(VPNetError, ValueError):
    """LiDAR simulation asked for something the scene cannot provide."""


class EmptyMaskError(VPNetError, ValueError):
    """A loss or metric was asked to reduce over zero valid pixels."""


class ConfigError(VPNetError, ValueError):
    """Illegal combination of model / run options."""
