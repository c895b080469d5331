"""Exception types shared across the package."""


class QubitCorrError(Exception):
    """Base class for all package-specific errors."""


class InvalidParameterError(QubitCorrError, ValueError):
    """A physical parameter is outside its allowed range."""


class InvalidArgumentError(QubitCorrError, ValueError):
    """An operation argument (lag, window bound, ...) is invalid."""


class InvalidWindowError(InvalidArgumentError):
    """A time-averaging window does not fit the trace."""


class EmptyEnsembleError(QubitCorrError, ValueError):
    """An operation requiring traces received an empty ensemble."""


class UnidentifiableError(QubitCorrError, RuntimeError):
    """The requested fit has a degenerate design matrix."""


class InvalidDataError(QubitCorrError, ValueError):
    """Input data violate a precondition (e.g. nonpositive values for a log fit)."""


class IntegrationDivergedError(QubitCorrError, RuntimeError):
    """A stochastic integration step produced a non-finite state."""

    def __init__(self, step_index: int, trace_index: int | None = None):
        self.step_index = step_index
        self.trace_index = trace_index
        where = f"step {step_index}"
        if trace_index is not None:
            where += f" of trace {trace_index}"
        super().__init__(f"integration diverged at {where}")


class TraceFormatError(QubitCorrError, ValueError):
    """A trace file is malformed or has an unsupported version."""
