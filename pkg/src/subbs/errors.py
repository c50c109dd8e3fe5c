"""Exception types carrying machine-readable codes for the CLI exit-code map."""

from __future__ import annotations


class PricerError(Exception):
    """Base class; ``code`` is a stable upper-snake identifier."""

    def __init__(self, code: str, message: str):
        super().__init__(f"{code}: {message}")
        self.code = code
        self.message = message


class ParameterError(PricerError, ValueError):
    """Invalid model, payoff, grid or call arguments (CLI exit 2)."""


class NumericalError(PricerError, ArithmeticError):
    """A numerical routine failed: overflow, non-convergence, non-finite output (CLI exit 3)."""
