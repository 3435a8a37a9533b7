"""
Domain exceptions shared by every app of the lab.
"""
from typing import Any, Dict, Optional


class VoltVarLabError(Exception):
    """Base class for all lab errors."""
    message_key = "INTERNAL_SERVER_ERROR"

    def __init__(self, message: str, **context: Any):
        super().__init__(message)
        self.message = message
        self.context = context

    def __str__(self):
        if not self.context:
            return self.message
        details = ", ".join(f"{key}={value}" for key, value in self.context.items())
        return f"{self.message} ({details})"


class NetworkDataError(VoltVarLabError):
    """Case file cannot be parsed or violates the network invariants."""
    message_key = "VALIDATION_ERROR"


class PowerFlowError(VoltVarLabError):
    """Sweep did not converge or diverged."""
    message_key = "POWER_FLOW_ERROR"

    def __init__(self, message: str, iterations: int = 0, mismatch: float = float("nan"), **context: Any):
        super().__init__(message, iterations=iterations, mismatch=mismatch, **context)
        self.iterations = iterations
        self.mismatch = mismatch


class ContractViolation(VoltVarLabError, ValueError):
    """A caller broke a documented precondition."""
    message_key = "VALIDATION_ERROR"


class NumericalError(VoltVarLabError, ArithmeticError):
    """NaN or infinite values appeared during learning."""
    message_key = "NUMERICAL_ERROR"

    def __init__(self, message: str, diagnostics: Optional[Dict[str, Any]] = None):
        super().__init__(message, **(diagnostics or {}))
        self.diagnostics = diagnostics or {}


class ConfigurationError(VoltVarLabError):
    """Experiment configuration is invalid."""
    message_key = "VALIDATION_ERROR"


class MetricsAlignmentError(VoltVarLabError):
    """Two metrics tables do not cover the same days and steps."""
    message_key = "VALIDATION_ERROR"


class InsufficientDataError(VoltVarLabError):
    """A report needs more simulated days than the metrics contain."""
    message_key = "VALIDATION_ERROR"
