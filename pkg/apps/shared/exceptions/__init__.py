from .errors import (
    VoltVarLabError,
    NetworkDataError,
    PowerFlowError,
    ContractViolation,
    NumericalError,
    ConfigurationError,
    MetricsAlignmentError,
    InsufficientDataError,
)

__all__ = [
    'VoltVarLabError',
    'NetworkDataError',
    'PowerFlowError',
    'ContractViolation',
    'NumericalError',
    'ConfigurationError',
    'MetricsAlignmentError',
    'InsufficientDataError',
]
