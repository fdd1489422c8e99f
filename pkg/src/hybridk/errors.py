"""Error types shared across the library and the CLI exit-code contract."""

from __future__ import annotations

__all__ = ["BudgetExceededError", "InfeasibleError", "RegimeError", "ParseError"]


class BudgetExceededError(RuntimeError):
    """An enumeration budget would be exceeded; work is refused, not truncated."""


class InfeasibleError(RuntimeError):
    """No feasible solution exists under the given budgets or inputs."""


class RegimeError(RuntimeError):
    """A preprocessing step was invoked outside the regime it assumes."""


class ParseError(ValueError):
    """An instance or centers file failed to parse."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
