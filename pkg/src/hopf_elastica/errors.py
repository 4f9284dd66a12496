"""Exception hierarchy shared by all modules."""


class ElasticaError(Exception):
    """Base class for every error raised by this package."""


class NearZeroVector(ElasticaError, ValueError):
    pass


class NotTangent(ElasticaError, ValueError):
    pass


class AntipodalPoints(ElasticaError, ValueError):
    pass


class TooFewVertices(ElasticaError, ValueError):
    pass


class InvalidCurve(ElasticaError, ValueError):
    pass


class DegenerateSegment(ElasticaError, ValueError):
    pass


class DegenerateEdge(ElasticaError, ValueError):
    pass


class StepSizeUnderflow(ElasticaError, RuntimeError):
    pass


class BlowUp(ElasticaError, FloatingPointError):
    pass


class InconsistentTrace(ElasticaError):
    pass


class ModulusOutOfRange(ElasticaError, ValueError):
    pass


class IntegratorFailure(ElasticaError, RuntimeError):
    pass


class RatioOutOfRange(ElasticaError, ValueError):
    pass


class NotCoprime(ElasticaError, ValueError):
    pass


class MalformedPerturbation(ElasticaError, ValueError):
    pass


class NotSmoothlyClosing(ElasticaError, ValueError):
    pass


class EpsOutOfRange(ElasticaError, ValueError):
    pass


class SamplingTooCoarse(ElasticaError, ValueError):
    pass


class DiscontinuousPath(ElasticaError, ValueError):
    pass


class LiftDrift(ElasticaError, RuntimeError):
    pass


class DegenerateGrid(ElasticaError, ValueError):
    pass


class ScenarioFailure(ElasticaError):
    """A scenario assertion failed; ``assertion`` names the first one."""

    def __init__(self, assertion, message=""):
        self.assertion = assertion
        super().__init__(f"{assertion}: {message}" if message else assertion)


class IoFailure(ElasticaError, OSError):
    pass
