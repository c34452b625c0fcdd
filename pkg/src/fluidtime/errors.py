"""Exception hierarchy.

Every error raised by the library derives from :class:`FluidTimeError` so the
CLI can map it to an exit code without catching unrelated exceptions.
"""


class FluidTimeError(Exception):
    """Base class for all library errors."""


class ModelError(FluidTimeError, ValueError):
    """Invalid model or clock input."""


class NonConservativeGenerator(ModelError):
    pass


class ZeroRate(ModelError):
    pass


class NotIrreducible(ModelError):
    pass


class EmptyPhaseSet(ModelError):
    pass


class InvalidHorizon(ModelError):
    pass


class InvalidStages(ModelError):
    pass


class ShapeMismatch(ModelError):
    pass


class ComputationError(FluidTimeError, ArithmeticError):
    """A numerical routine failed."""


class NoConvergence(ComputationError):
    pass


class SingularSylvester(ComputationError):
    pass


class SingularSystem(ComputationError):
    pass


class NegativeEntries(ComputationError):
    """An approximation produced entries below the clamping threshold."""


class QueryError(FluidTimeError, ValueError):
    """Bad arguments to a distribution query."""


class StageOutOfRange(QueryError):
    pass


class InvalidLevels(QueryError):
    pass


class NegativeDisplacement(QueryError):
    pass


class InvalidEmbedding(QueryError):
    pass


class InvalidInitialDistribution(QueryError):
    pass


class InvalidSubgenerator(QueryError):
    pass


class InvalidPlan(QueryError):
    pass


class EmptySample(QueryError):
    pass


class GridMismatch(QueryError):
    pass


class ConfigError(FluidTimeError, ValueError):
    """Configuration file could not be parsed into a valid run."""
