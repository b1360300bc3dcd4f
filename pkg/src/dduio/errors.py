"""Exception hierarchy shared by the design and monitoring modules."""


class DduioError(Exception):
    """Base class for every error raised by this package."""


class DimensionError(DduioError, ValueError):
    pass


class RankDeficientCE(DduioError):
    """rank(CE) < r: the disturbance cannot be decoupled."""


class NotReconstructable(DduioError):
    """The pair (A, C) has an unobservable mode away from the origin."""


class SolvabilityFailed(DduioError):
    """The existence conditions for a dead-beat UIO residual generator fail."""


class GuaranteeViolated(DduioError):
    """A property that theory guarantees failed numerically (tolerance trouble)."""


class FaultyHistoricalData(DduioError):
    pass


class HorizonTooShort(DduioError):
    pass


class RankDeficientRegressor(DduioError):
    """[U_p; X_p] is not of full row rank."""


class ResidualTooLarge(DduioError):
    pass


class RankMismatch(DduioError):
    pass


class NotIdentifiable(DduioError):
    """The fault cannot be uniquely recovered from the residual."""


class SchemaError(DduioError, ValueError):
    """Malformed CSV / matrix / config file."""
