"""
Exceptions

Error types raised by the estimator library. They subclass the builtin
exception a caller would otherwise expect, so ``except ValueError`` keeps
working.
"""
import numpy as np


class KorobovError(Exception):
    """Base class for all library errors."""


class ConfigurationError(KorobovError, ValueError):
    """An unsupported parameter choice (degree, smoothness, table size...)."""


class DomainError(KorobovError, ValueError):
    """An input outside the domain of an operation."""


class SingularSystemError(KorobovError, np.linalg.LinAlgError):
    """Every eigenvalue of a circulant system fell below the null-space threshold."""
