"""Exception hierarchy shared by all modules."""


class KEError(Exception):
    """Base class. ``kind`` is the machine-readable tag used by the CLI."""

    kind = "error"

    def __init__(self, message, **details):
        super().__init__(message)
        self.details = details

    def as_dict(self):
        out = {"kind": self.kind, "message": str(self)}
        out.update({k: _jsonable(v) for k, v in self.details.items()})
        return out


class ConfigurationError(KEError):
    kind = "configuration"


class DomainError(KEError):
    kind = "domain"


class ResolutionError(KEError):
    kind = "resolution"


class NonConvergenceError(KEError):
    kind = "non-convergence"


class CoverageError(KEError):
    kind = "coverage"


class ZeroAssumptionViolated(KEError):
    kind = "zero-assumption-violated"


class NumericalDegeneracyError(KEError):
    kind = "numerical-degeneracy"


class StepFailure(KEError):
    kind = "step-failure"


class TruncationError(KEError):
    kind = "truncation"


class TruncationWarning(UserWarning):
    """Boundary traces have not decayed at the final sample."""


def _jsonable(v):
    try:
        return float(v)
    except (TypeError, ValueError):
        return str(v)
