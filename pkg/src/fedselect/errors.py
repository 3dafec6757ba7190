"""Exception types shared across the package."""


class FedselectError(Exception):
    """Base class for all package errors."""


class ParameterError(FedselectError, ValueError):
    """A scalar or shape argument is outside its documented domain."""


class InsufficientDataError(FedselectError, ValueError):
    """Too few rows for the requested operation (e.g. more clients than samples)."""


class DataFormatError(FedselectError, ValueError):
    """A data file is malformed.  Carries the 1-based line number when known."""

    def __init__(self, message: str, line_number: int | None = None):
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)
        self.line_number = line_number


class DegenerateColumnError(FedselectError, ValueError):
    """A design column is (numerically) zero or a relaxed-projection residual collapsed."""

    def __init__(self, message: str, column: int | None = None):
        super().__init__(message)
        self.column = column


class ProtocolError(FedselectError, ValueError):
    """Malformed message traffic (wrong client count, duplicate client ids, ...)."""


class ClientRunError(FedselectError, RuntimeError):
    """One or more clients failed during a simulated run."""

    def __init__(self, failures: dict[int, Exception]):
        self.failures = dict(failures)
        detail = "; ".join(f"client {cid}: {err}" for cid, err in sorted(self.failures.items()))
        super().__init__(f"{len(self.failures)} client(s) failed: {detail}")


class StepSizeError(FedselectError, RuntimeError):
    """Gradient descent diverged (loss grew past the divergence threshold)."""


class ConfigError(FedselectError, ValueError):
    """An experiment configuration failed validation.  Message names the field path."""
