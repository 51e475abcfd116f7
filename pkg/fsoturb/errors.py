"""
Exceptions raised across fsoturb.

The command line maps each family onto an exit code (see :mod:`fsoturb.cli`).
"""


class FsoturbError(Exception):
    """Base class of all fsoturb errors."""


class ParameterError(FsoturbError, ValueError):
    """An invalid physical parameter, e.g. a negative Fried parameter or L0 <= l0."""


class ConfigError(ParameterError):
    """The run configuration document does not validate."""


class DomainError(FsoturbError, ValueError):
    """An argument outside of the mathematical domain of a function."""


class NumericError(FsoturbError, ArithmeticError):
    """
    A numerical procedure did not converge.

    :param diagnostics: details such as the reported error estimate and the quadrature messages
    :type diagnostics: dict
    """

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = {} if diagnostics is None else diagnostics

    def __str__(self):
        if not self.diagnostics:
            return super().__str__()
        details = ', '.join(f'{k}={v}' for k, v in self.diagnostics.items())
        return f'{super().__str__()} ({details})'


class AccuracyError(NumericError):
    """The integration grid is too coarse for the requested accuracy."""


class DataError(FsoturbError, ValueError):
    """
    Measured data that cannot be used.

    :param offending_count: how many values were invalid
    :param line: the first offending line of an input file (1-based), if known
    """

    def __init__(self, message, offending_count=0, line=None):
        super().__init__(message)
        self.offending_count = offending_count
        self.line = line


class DegenerateDataError(DataError):
    """All samples equal 1, there is no measurable turbulence."""
