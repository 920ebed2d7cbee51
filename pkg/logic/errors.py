"""
logic/errors.py
---------------
Exception hierarchy shared by the physics modules, the simulation engine and the CLI.

Every error raised on purpose derives from SunPumpError, and most also derive from the
builtin the caller would naturally catch (ValueError / RuntimeError).
"""

from typing import Optional


class SunPumpError(Exception):
    """Base class for all domain errors."""


class NoConvergence(SunPumpError, RuntimeError):
    """The implicit PV current equation could not be solved to tolerance."""

    def __init__(self, message: str, residual: Optional[float] = None):
        super().__init__(message)
        self.residual = residual


class DomainError(SunPumpError, ValueError):
    """An argument lies outside the domain where the operation is defined."""


class DivisionDomain(DomainError):
    """A ratio is undefined (e.g. efficiency in the dark)."""


class Unachievable(DomainError):
    """The converter topology cannot produce the requested output voltage."""


class OutOfRange(DomainError):
    """A value lies outside its calibrated mapping range."""


class EmptyCurve(SunPumpError, ValueError):
    """An IV curve with no points was given where at least one is required."""


class ConfigError(SunPumpError, ValueError):
    """A scenario file is unreadable or violates a field invariant."""

    def __init__(self, message: str, key: Optional[str] = None, line: Optional[int] = None):
        self.key = key
        self.line = line
        parts = [p for p in (key, f"line {line}" if line else None) if p]
        location = f" [{', '.join(parts)}]" if parts else ""
        super().__init__(f"{message}{location}")


class StepFailure(SunPumpError):
    """A simulation step failed; carries the step index for diagnostics."""

    def __init__(self, step_index: int, time_s: float, cause: Exception):
        self.step_index = step_index
        self.time_s = time_s
        self.cause = cause
        super().__init__(f"step {step_index} (t={time_s:g} s) failed: {cause}")
