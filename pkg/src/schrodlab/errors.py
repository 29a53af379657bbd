"""Exception hierarchy for the lab."""


class LabError(Exception):
    """Base class for every error raised by schrodlab."""


class InvalidDimension(LabError):
    pass


class ResolutionError(LabError):
    """Radial grid too coarse for the profile self-consistency checks."""


class ConstantsInfeasible(LabError):
    pass


class ExponentOutOfRange(LabError):
    pass


class TestExponentTooLarge(LabError):
    __test__ = False  # keep pytest from collecting it


class ScaleTooSmall(LabError):
    pass


class DegenerateFrequencySet(LabError):
    pass


class QuadratureError(LabError):
    pass


class InvalidPerturbationBounds(LabError):
    pass


class SingularTime(LabError):
    pass


class DegenerateProbeSet(LabError):
    pass


class ExperimentInfeasible(LabError):
    pass


class LemmaViolation(LabError):
    """A search that the pigeonhole principle guarantees came back empty."""


class ConfigError(LabError):
    pass
