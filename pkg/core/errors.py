from __future__ import annotations


class TxReidError(Exception):
    """Base class for every error raised by txreid."""


class ShapeMismatchError(TxReidError, ValueError):
    pass


class InvalidModeError(TxReidError, ValueError):
    pass


class FeatureFormatError(TxReidError, ValueError):
    """Descriptor file could not be parsed. `location` is "line N" or "offset N"."""

    def __init__(self, path: str, location: str, reason: str) -> None:
        super().__init__(f"{path} ({location}): {reason}")
        self.path = path
        self.location = location
        self.reason = reason


class DuplicateIdentityError(TxReidError, ValueError):
    pass


class EmptyIntersectionError(TxReidError, ValueError):
    pass


class NoPositivePairsError(TxReidError, ValueError):
    pass


class SingleLabelError(TxReidError, ValueError):
    pass


class NumericalError(TxReidError, ArithmeticError):
    pass


class ModelFormatError(TxReidError, ValueError):
    pass


class ConfigError(TxReidError, ValueError):
    pass


class TooFewPersonsError(TxReidError, ValueError):
    pass


class RankOutOfRangeError(TxReidError, IndexError):
    pass


class FoldFailedError(TxReidError):
    def __init__(self, fold: int, dim: int | None, cause: BaseException) -> None:
        where = f"fold {fold}" if dim is None else f"fold {fold} (dim {dim})"
        super().__init__(f"{where} failed: {type(cause).__name__}: {cause}")
        self.fold = fold
        self.dim = dim
        self.cause = cause
