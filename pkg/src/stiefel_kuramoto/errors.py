"""Exception hierarchy shared by all modules."""


class StiefelSyncError(Exception):
    """Base class for every error raised by this package."""


class ShapeError(StiefelSyncError, ValueError):
    pass


class NotOrthonormal(StiefelSyncError, ValueError):
    def __init__(self, deviation: float, tol: float):
        super().__init__(f"columns not orthonormal: ||S^T S - I||_F = {deviation:.3e} > {tol:.1e}")
        self.deviation = deviation
        self.tol = tol


class RankDeficient(StiefelSyncError, ArithmeticError):
    """Raised when S + tV loses full column rank; reduce the step size."""


class InvalidSize(StiefelSyncError, ValueError):
    pass


class NodeOutOfRange(StiefelSyncError, IndexError):
    pass


class SizeMismatch(StiefelSyncError, ValueError):
    pass


class NotSkew(StiefelSyncError, ValueError):
    pass


class InvalidMultiplicities(StiefelSyncError, ValueError):
    pass


class InvalidDimensions(StiefelSyncError, ValueError):
    pass


class ConfigError(StiefelSyncError, ValueError):
    """Scenario or input file failed validation. ``field`` names the offending entry."""

    def __init__(self, message: str, field: str | None = None):
        super().__init__(f"{field}: {message}" if field else message)
        self.field = field
