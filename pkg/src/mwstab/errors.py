"""Exception hierarchy shared by all modules."""


class MWError(Exception):
    """Base class for errors raised by mwstab."""


class InvalidStructureError(MWError, ValueError):
    pass


class DimensionError(MWError, ValueError):
    pass


class SymmetryError(MWError, ValueError):
    pass


class ModelError(MWError, ValueError):
    pass


class NormalizationError(MWError, ValueError):
    pass


class DomainError(MWError, ValueError):
    pass


class SupportError(DomainError):
    pass


class DegeneratePairError(DomainError):
    pass


class StepError(MWError, ArithmeticError):
    """A map step would leave the simplotope or overflow.

    ``population`` is the index of the offending population, if known.
    """

    def __init__(self, message, population=None):
        super().__init__(message)
        self.population = population


class RateError(StepError):
    pass


class StepRuleFailure(MWError, RuntimeError):
    """A step-size rule could not produce an admissible rate."""


class FixedPointError(StepRuleFailure):
    """A rate was requested at a fixed point, where no step is needed."""


class OracleInapplicableError(StepRuleFailure):
    pass


class GameSpecError(MWError, ValueError):
    """A JSON game or scenario document failed validation."""
