"""
Exception types shared by the simulator packages
"""

from typing import Optional, Sequence


class MtjSimError(RuntimeError):
    """Base class for simulator failures"""


class DomainError(MtjSimError, ValueError):
    """Physical argument outside the model's domain (e.g. a <= 1)"""


class ContractViolation(MtjSimError, ValueError):
    """Caller broke an operation precondition (ranges, dimensions, arch)"""


class CalibrationError(MtjSimError):
    """No device parameters satisfy the calibration anchors"""

    def __init__(self, message: str, residuals: Optional[Sequence[float]] = None):
        self.residuals = list(residuals) if residuals is not None else []
        if self.residuals:
            report = ", ".join(f"{r:+.3e}" for r in self.residuals)
            message = f"{message} (relative residuals: {report})"
        super().__init__(message)


class SingularNetworkError(MtjSimError):
    """Nodal system has a floating component with no fixed terminal"""


class DatasetFormatError(MtjSimError, ValueError):
    """Dataset file is malformed or truncated"""


class ConfigError(MtjSimError, ValueError):
    """Invalid experiment configuration"""
