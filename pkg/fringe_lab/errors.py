"""Exception types shared across the lab."""
from typing import Optional, Sequence


class LabError(Exception):
    """Base class for errors raised by fringe-lab."""


class ConfigError(LabError, ValueError):
    """Scenario or lab configuration could not be accepted."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class NumericalAbort(LabError, FloatingPointError):
    """Time stepping produced non-finite values."""

    def __init__(self, step: int, message: str = "non-finite wavefunction"):
        self.step = step
        super().__init__(f"{message} at step {step}")


class VerdictFailure(LabError):
    """One or more suite checks failed."""

    def __init__(self, failed: Sequence[str]):
        self.failed = list(failed)
        super().__init__(f"{len(self.failed)} check(s) failed: {', '.join(self.failed)}")
