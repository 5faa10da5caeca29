"""Exception hierarchy shared across the package."""


class PdcQkdError(Exception):
    """Base class for all errors raised by pdcqkd."""


class ValidationError(PdcQkdError, ValueError):
    """A parameter or configuration value is outside its allowed domain."""


class TruncationError(PdcQkdError):
    """The photon-number cap was reached before the tail tolerance was met."""

    def __init__(self, message, tail_mass):
        super().__init__(f"{message} (achieved tail mass {tail_mass:.3e})")
        self.tail_mass = tail_mass


class UnboundedOddsError(PdcQkdError, ZeroDivisionError):
    """Trigger odds r_n are infinite (gamma_n == 1)."""


class DegenerateObservablesError(PdcQkdError):
    """Observed rates are zero so ratios or QBERs are undefined."""

    def __init__(self, which):
        super().__init__(f"degenerate observables: {which} == 0")
        self.which = which


class ZeroRateError(PdcQkdError):
    """No strictly positive key rate anywhere in the search interval."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class BracketError(PdcQkdError, ValueError):
    """A root/switch bracket does not contain a sign change."""


class UndefinedBoundError(PdcQkdError, ValueError):
    """The single-photon lower bound xi(x) is not positive, so no error bound exists."""
