"""Exception hierarchy shared by all modules."""


class HinfError(Exception):
    """Base class for every error raised by :mod:`hinflimit`."""


class ParseError(HinfError):
    """Plant description does not match the JSON schema."""


class SingularResolvent(HinfError):
    """``sI - A`` is numerically singular at the requested point."""


class DegenerateRealization(HinfError):
    """Both ``(b; d)`` and ``(c; d)`` vanish, so the pencil has no zeros."""


class IdenticallyZeroChannel(HinfError):
    """The channel transfer function is identically zero."""


class NullspaceExtractionFailure(HinfError):
    """A null vector could not be computed to the required residual."""


class NotHurwitz(HinfError):
    pass


class IllConditioned(HinfError):
    pass


class SpectraOverlap(HinfError):
    pass


class NotPSD(HinfError):
    pass


class NotPD(HinfError):
    pass


class NullVectorDegenerate(HinfError):
    """The feedthrough component of an imaginary-axis null vector vanishes."""


class NotStabilizable(HinfError):
    pass


class NotDetectable(HinfError):
    pass


class Unsupported(HinfError):
    """Zero structure outside the supported class (repeated or zero axis zeros)."""


class DegenerateChannel(HinfError):
    pass


class OracleInconclusive(HinfError):
    pass


class StructureMismatch(HinfError):
    """A solved dual violates the zero pattern it is supposed to have."""


class HypothesisViolated(HinfError):
    pass


class MaxIter(HinfError):
    pass


class NearSingular(HinfError):
    pass
