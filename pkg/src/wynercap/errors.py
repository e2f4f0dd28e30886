"""Exception types shared across the package."""

from __future__ import annotations


class WynerCapError(Exception):
    """Base class for errors raised by :mod:`wynercap`."""


class DimensionError(WynerCapError, ValueError):
    """Matrix shapes or exterior-power orders are inconsistent."""


class SingularBlockError(WynerCapError, ArithmeticError):
    """A block that must be invertible is singular to working precision.

    This is how a violation of the frontier hypothesis (the product
    ``zeta_0 zeta_d^dagger`` vanishing) surfaces at runtime.
    """

    def __init__(self, message: str, condition: float | None = None, count: int = 1):
        super().__init__(message)
        self.condition = condition
        self.count = count

    def __str__(self) -> str:
        base = super().__str__()
        if self.condition is None:
            return base
        return f"{base} (condition ratio {self.condition:.3g}, {self.count} block(s))"


class ModelError(WynerCapError, ValueError):
    """A fading model violates the moment or frontier hypotheses."""


class ContractError(WynerCapError, ValueError):
    """Input does not have the structure an operation requires."""


class ConfigError(WynerCapError, ValueError):
    """An experiment configuration failed validation."""
