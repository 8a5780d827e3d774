"""Exception hierarchy shared across the engine.

The CLI maps these onto process exit codes (see ``aegcn.cli``).
"""


class AEGCNError(Exception):
    """Base class for all engine errors."""


class DimensionError(AEGCNError, ValueError):
    """Operand shapes are incompatible."""


class DegenerateDegreeError(AEGCNError, ValueError):
    """A row sum used as a degree is zero (or negative)."""


class ArgumentError(AEGCNError, ValueError):
    """An argument is outside the operation's domain (empty mask, empty list, ...)."""


class ConfigError(AEGCNError):
    """Inconsistent or invalid training configuration."""


class DataValidationError(AEGCNError):
    """A dataset directory failed validation."""

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        super().__init__(where + message)


class NumericalError(AEGCNError):
    """Non-finite values appeared during training."""

    def __init__(self, message, diagnostics=None):
        self.diagnostics = diagnostics or {}
        super().__init__(message)
