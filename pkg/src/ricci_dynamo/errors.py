"""Exception types shared across the package."""


class RicciDynamoError(Exception):
    """Base class for all errors raised by this package."""


class DegenerateMetric(RicciDynamoError):
    """A metric lost positive-definiteness (or is not invertible)."""


class InsufficientSamples(RicciDynamoError):
    """A time series is too short for the requested estimate."""


class GridMismatch(RicciDynamoError):
    """Grid fields have incompatible shapes."""


class DivisionByZero(RicciDynamoError, ZeroDivisionError):
    """A closed-form expression was evaluated at a pole of its parameters."""


class NonConvergent(RicciDynamoError):
    """Successive extrapolants disagree; no limit can be reported."""


class NoConvergence(RicciDynamoError):
    """Iterative eigensolver ran out of iterations."""


class StepUnstable(RicciDynamoError):
    """Time integration blew up (step size violates stability)."""


class NegativeDensity(RicciDynamoError, ValueError):
    """Matter density must be non-negative."""


class SchemaMismatch(RicciDynamoError):
    """A result table lacks columns required by the requested plot kind."""

    def __init__(self, kind, missing):
        self.kind = kind
        self.missing = tuple(missing)
        super().__init__(f"plot kind {kind!r} requires missing columns: {', '.join(self.missing)}")


class ScenarioError(RicciDynamoError):
    """A scenario file failed validation; `field` names the offending entry."""

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")
