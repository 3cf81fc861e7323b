"""Exception hierarchy shared by the library and the command line."""

from typing import Optional


class AcrModelError(Exception):
    """Base class for all errors raised by this toolkit"""


class DomainError(AcrModelError, ValueError):
    """An argument lies outside the domain of an operation"""


class UnsupportedModelError(AcrModelError, ValueError):
    """The operation is not defined for the given model kind"""


class UsageError(AcrModelError, ValueError):
    """Command-line flags failed validation"""


class ConvergenceError(AcrModelError, RuntimeError):
    """An iterative solver stopped without meeting its tolerance"""

    def __init__(self, message: str, residual: float = float("nan"), iterations: int = 0):
        super().__init__(f"{message} (residual={residual:.3e}, iterations={iterations})")
        self.residual = residual
        self.iterations = iterations


class DatasetParseError(AcrModelError, ValueError):
    """A dataset file does not follow its schema"""

    def __init__(self, message: str, path: Optional[str] = None, row: Optional[int] = None):
        where = []
        if path is not None:
            where.append(str(path))
        if row is not None:
            where.append(f"row {row}")
        prefix = f"{':'.join(where)}: " if where else ""
        super().__init__(f"{prefix}{message}")
        self.path = path
        self.row = row


class ReportWriteError(AcrModelError, OSError):
    """A report could not be written"""
