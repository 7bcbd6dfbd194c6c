"""Exception hierarchy shared by every holocurv module."""


class HolocurvError(Exception):
    """Base class for all library errors."""


class SingularMetric(HolocurvError):
    pass


class DerivativeUnavailable(HolocurvError):
    pass


class SymmetryViolation(HolocurvError):
    pass


class QuadratureUnavailable(HolocurvError):
    pass


class EigenSolverFailure(HolocurvError):
    pass


class ZeroVector(HolocurvError):
    pass


class OptimizerInconsistent(HolocurvError):
    """A dense random sweep beat the optimizer beyond the certification tolerance."""


class NonKahlerMetric(HolocurvError):
    pass


class NotEinstein(HolocurvError):
    pass


class ChartMismatch(HolocurvError):
    pass


class DimensionMismatch(HolocurvError):
    pass


class ConstantMapRejected(HolocurvError):
    pass


class DegenerateMapRejected(HolocurvError):
    pass


class NonPositiveDenominator(HolocurvError):
    pass


class NonPositivePairing(HolocurvError):
    pass


class InvalidClassData(HolocurvError):
    pass


class TargetNotNef(HolocurvError):
    pass


class ConfigInvalid(HolocurvError):
    """Scenario file failed to parse or validate.

    ``key`` and ``line`` point at the offending entry when known.
    """

    def __init__(self, message, key=None, line=None):
        self.key = key
        self.line = line
        where = []
        if key is not None:
            where.append(f"key {key!r}")
        if line is not None:
            where.append(f"line {line}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)


class UnknownName(ConfigInvalid):
    """A catalog name did not resolve."""
