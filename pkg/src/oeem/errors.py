"""Exception hierarchy shared by all modules."""


class OEEMError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class ConfigError(OEEMError):
    exit_code = 2


class DataIOError(OEEMError):
    exit_code = 3


class ZeroField(OEEMError):
    """Bias field below the validity threshold of the Zeeman model."""

    exit_code = 4


class ZeroDistance(OEEMError):
    exit_code = 5


class FitFailure(OEEMError):
    exit_code = 6


class InsufficientData(OEEMError):
    exit_code = 7
