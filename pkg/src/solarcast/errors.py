"""Exception hierarchy.

Every error carries an ``exit_code`` used by the command line front end:
2 for missing inputs, 3 for validation failures, 4 for numerical divergence.
"""


class SolarcastError(Exception):
    exit_code = 3


class MissingInputError(SolarcastError, FileNotFoundError):
    exit_code = 2


class FormatError(SolarcastError, ValueError):
    """Malformed station file. ``lineno`` is 1-based."""

    def __init__(self, message, lineno=None, source=None):
        self.lineno = lineno
        self.source = source
        where = ""
        if source is not None:
            where += f"{source}:"
        if lineno is not None:
            where += f"line {lineno}: "
        elif where:
            where += " "
        super().__init__(where + message)


class OrderingError(SolarcastError, ValueError):
    pass


class DataError(SolarcastError, ValueError):
    pass


class EmptyDatasetError(DataError):
    pass


class RangeError(SolarcastError, ValueError):
    pass


class ConfigurationError(SolarcastError, ValueError):
    pass


class UnusableFeatureError(DataError):
    def __init__(self, feature):
        self.feature = feature
        super().__init__(f"feature {feature!r} is absent for the entire period")


class DegenerateFeatureError(DataError):
    pass


class ShapeError(SolarcastError, ValueError):
    pass


class NumericalError(SolarcastError, ArithmeticError):
    exit_code = 4


class DivergenceError(NumericalError):
    def __init__(self, message, epoch=None):
        self.epoch = epoch
        super().__init__(message)
