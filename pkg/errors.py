"""
Exception hierarchy. Each error carries the process exit code the CLI reports.
"""


class NetworkError(Exception):
    """Base error; exit_code plays the role of an HTTP status for the CLI."""

    exit_code = 1

    def __init__(self, detail: str):
        super().__init__(detail)
        self.detail = detail


class InvalidArgumentError(NetworkError):
    exit_code = 2


class CycleFormatError(NetworkError):
    """Cycle file could not be read or is not an N x p matrix of +-1."""

    exit_code = 2


class ConfigError(NetworkError):
    exit_code = 2


class NotAdmissibleError(NetworkError):
    """Raised when an operation requires J Sigma = Sigma P to be solvable."""

    exit_code = 2


class InvalidStepError(InvalidArgumentError):
    """dt does not divide the delay."""


class EnumerationLimitError(NetworkError):
    exit_code = 3


class IntegrationDivergedError(NetworkError):
    exit_code = 4


class BoundsUnavailableError(NetworkError):
    """Envelope bounds requested for a neuron without turning points."""

    exit_code = 4
