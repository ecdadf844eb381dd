"""Exception hierarchy. The CLI maps each family onto an exit code."""


class FallsiftError(Exception):
    exit_code = 2


class ParameterError(FallsiftError, ValueError):
    """Invalid argument or model parameter."""

    exit_code = 1


class DataError(FallsiftError, ValueError):
    """Input data violates a precondition (bad file, grid, alignment...)."""

    exit_code = 2


class CalibrationError(DataError):
    pass


class ManifestError(DataError):
    pass


class NumericError(FallsiftError, ArithmeticError):
    """Degenerate fit or a numerical routine without a valid answer."""

    exit_code = 3


class DegenerateFitError(NumericError):
    pass
