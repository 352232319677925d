"""Exception hierarchy shared by all stages."""


class VinegraphError(Exception):
    """Base class; ``stage`` names the pipeline stage that raised."""

    stage = "core"

    def __init__(self, message, stage=None):
        super().__init__(message)
        if stage is not None:
            self.stage = stage


class DegenerateVariableError(VinegraphError, ValueError):
    stage = "transform"


class NotImputedError(VinegraphError, ValueError):
    stage = "transform"


class ImputationError(VinegraphError, ValueError):
    stage = "impute"


class NotPositiveDefiniteError(VinegraphError, ValueError):
    stage = "correlation"


class SingularityError(VinegraphError, ArithmeticError):
    stage = "correlation"


class ConvergenceError(VinegraphError, RuntimeError):
    """Raised by the 1-factor fit; carries the last iterate and objective trace."""

    stage = "factor"

    def __init__(self, message, loadings=None, trace=None):
        super().__init__(message)
        self.loadings = loadings
        self.trace = trace or []


class PartitionError(VinegraphError, ValueError):
    stage = "grouping"


class VineError(VinegraphError, RuntimeError):
    stage = "graphs"


class ConfigError(VinegraphError, ValueError):
    stage = "config"
