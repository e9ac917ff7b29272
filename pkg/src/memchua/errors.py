"""Exception types shared across the package.

The CLI maps these onto its stable exit codes, so new failure modes should
reuse one of the classes below instead of raising bare ValueError.
"""


class MemChuaError(Exception):
    """Base class for all package-specific failures."""


class InputFormatError(MemChuaError):
    """A CSV / config file could not be parsed. Carries an optional line number."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"{message} (line {line})"
        super().__init__(message)


class FitError(MemChuaError):
    """Polynomial fit rejected (underdetermined or singular system)."""


class DesignError(MemChuaError):
    """Circuit design infeasible or unsafe. `check` names the failing condition."""

    def __init__(self, check, message):
        self.check = check
        super().__init__(f"{check}: {message}")


class IntegrationError(MemChuaError):
    """Integrator could not proceed (bad config, step underflow, ...)."""


class LyapunovError(MemChuaError):
    """Exponent estimation failed (shadow trajectory diverged or collapsed)."""
