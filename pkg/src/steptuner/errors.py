"""Exception hierarchy shared across the package.

Each class maps to a distinct CLI exit code so scripted callers can tell
configuration mistakes apart from numerical failures.
"""


class StepTunerError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class DomainError(StepTunerError):
    """An argument lies outside the mathematical domain of an operation."""

    exit_code = 3


class ContractError(StepTunerError):
    """Inputs are individually valid but mutually inconsistent."""

    exit_code = 3


class ConfigError(StepTunerError):
    """A config file is malformed; message names the offending field path."""

    exit_code = 2


class NumericError(StepTunerError):
    """A computation produced a non-finite value."""

    exit_code = 4
