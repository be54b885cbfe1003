import numpy as np


class EnsembleGPError(Exception):
    """Base class for every error raised by the toolkit."""


class NotPositiveDefinite(EnsembleGPError):
    pass


class DimensionMismatch(EnsembleGPError):
    pass


class LengthMismatch(DimensionMismatch):
    pass


class EmptyInput(EnsembleGPError):
    pass


class NonFiniteInput(EnsembleGPError):
    pass


class InvalidKernel(EnsembleGPError):
    pass


class ZeroWeightSum(InvalidKernel):
    pass


class NumericalError(EnsembleGPError):
    pass


class EmptyHistory(EnsembleGPError):
    pass


class NoSuccessfulTrial(EnsembleGPError):
    pass


class MissingColumn(EnsembleGPError):
    pass


class UnparseableStream(EnsembleGPError):
    pass


class NoRecordsForCategory(EnsembleGPError):
    pass


class SeriesTooShort(EnsembleGPError):
    pass


class InvalidMapping(EnsembleGPError):
    pass


class ConfigError(EnsembleGPError):
    pass


class InputNotFound(EnsembleGPError):
    def __init__(self, path, what: str = "input file"):
        self.path = str(path)
        self.what = what
        super().__init__(f"{what} not found: {self.path}")


def describe_error(exc: BaseException) -> str:
    """Turn a toolkit error into a one-line message for the terminal."""
    msg = str(exc) or exc.__class__.__name__
    if isinstance(exc, InputNotFound):
        return f"Cannot find {exc.what} '{exc.path}'. Check the path or the config file."
    if isinstance(exc, MissingColumn):
        return f"The CSV header is missing a required column ({msg})."
    if isinstance(exc, EmptyInput):
        return f"EmptyInput: nothing to process ({msg})."
    if isinstance(exc, UnparseableStream):
        return f"Could not parse the input as CSV ({msg})."
    if isinstance(exc, InvalidMapping):
        return f"The ATC mapping file is invalid ({msg})."
    if isinstance(exc, NoRecordsForCategory):
        return f"No sales records for the requested category ({msg})."
    if isinstance(exc, SeriesTooShort):
        return f"The series is too short to split into train/validation/test ({msg})."
    if isinstance(exc, NotPositiveDefinite):
        return ("The covariance matrix could not be factorized even with jitter. "
                "Try a larger noise variance or a shorter lengthscale.")
    if isinstance(exc, NoSuccessfulTrial):
        return f"Every weight vector tried failed to fit ({msg}). Try a larger noise variance."
    if isinstance(exc, ConfigError):
        return f"Invalid configuration: {msg}"
    if isinstance(exc, EnsembleGPError):
        return f"{exc.__class__.__name__}: {msg}"
    return f"Unexpected error: {msg}"


def require_finite(values, what: str = "input") -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise NonFiniteInput(f"{what} contains NaN or infinite values")
    return arr


def require_same_length(a, b, what: str = "vectors") -> None:
    if len(a) != len(b):
        raise LengthMismatch(f"{what} have different lengths ({len(a)} != {len(b)})")
