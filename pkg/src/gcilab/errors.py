from __future__ import annotations


class GciError(Exception):
    """Base class for all errors raised by gcilab."""


class DimensionMismatchError(GciError, ValueError):
    pass


class DomainError(GciError, ValueError):
    """An argument lies outside the domain of the operation (range, definiteness, pole)."""


class SingularMatrixError(GciError, ValueError):
    pass


class InvalidQuintupleError(GciError, ValueError):
    pass


class ContainmentError(GciError, ValueError):
    pass


class ConfigError(GciError, ValueError):
    pass


class UnsupportedShapeError(GciError, NotImplementedError):
    pass


class ConvergenceError(GciError, RuntimeError):
    pass
