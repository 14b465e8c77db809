"""
Error Types Module

Exception hierarchy shared by every solver, loader and the command line.
Each family carries the process exit code the CLI reports for it.
"""


class GradDRError(Exception):
    """Base class for all toolkit errors"""

    exit_code = 1


class UsageError(GradDRError):
    """Bad parameters or configuration supplied by the caller"""

    exit_code = 2


class DataError(GradDRError):
    """Input data that cannot be processed"""

    exit_code = 3


class SolverError(GradDRError):
    """Numerical failure inside a solver"""

    exit_code = 4


# Usage errors

class ParameterError(UsageError, ValueError):
    """A numeric parameter is outside its documented range"""


class ConfigError(UsageError, ValueError):
    """Missing or inconsistent experiment configuration"""


# Data errors

class InvalidMatrix(DataError, ValueError):
    """Matrix with non-finite entries or broken structure"""


class DimensionError(DataError, ValueError):
    """Shapes of the inputs do not agree"""


class DegenerateSample(DataError, ValueError):
    """A sample cannot be used (e.g. zero-norm column)"""


class InconsistentConstraints(DataError, ValueError):
    """A pair appears both as must-link and cannot-link"""


class FormatError(DataError, ValueError):
    """File content does not follow the expected layout"""


class ParseError(DataError, ValueError):
    """A cell could not be parsed"""

    def __init__(self, message: str, row: int = None, column: int = None):
        if row is not None:
            message = f"{message} (row {row}, column {column})"
        super().__init__(message)
        self.row = row
        self.column = column


class GenerationError(DataError, RuntimeError):
    """A sampler could not produce the requested points"""


# Solver errors

class SpectralFunctionError(SolverError, ArithmeticError):
    """A spectral map produced non-finite values"""


class NotPSD(SolverError, ValueError):
    """Matrix expected positive semidefinite has a negative leading eigenvalue"""


class SingularGraphKernel(SolverError, ArithmeticError):
    """Graph kernel spectral function is not positive on the Laplacian spectrum"""


class DegenerateMixture(SolverError, ArithmeticError):
    """All mixture traces vanish so the weights are undefined"""


class RankDeficientEmbedding(SolverError, ArithmeticError):
    """Fewer usable eigenvalues than requested dimensions"""


class CoefficientOverflowError(SolverError, OverflowError):
    """Polynomial features overflowed"""
