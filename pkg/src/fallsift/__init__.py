"""fallsift: clean enacted-fall datasets by Hausdorff distance of head velocity profiles."""
from fallsift._backend import BACKEND
from fallsift.errors import DataError, FallsiftError, NumericError, ParameterError

__version__ = "0.1.0"

__all__ = ["BACKEND", "DataError", "FallsiftError", "NumericError", "ParameterError"]
