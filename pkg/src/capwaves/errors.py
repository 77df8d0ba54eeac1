"""Exception types shared across the package."""


class CapwavesError(Exception):
    """Base class for all package errors."""


class ConfigurationError(CapwavesError, ValueError):
    """Inputs are inconsistent with the lattice or with a scenario schema."""


class DomainError(CapwavesError, ValueError):
    """An operation was asked to evaluate outside its mathematical domain."""


class OutOfBandError(DomainError):
    """A requested frequency lies outside the resolved lattice band."""


class DivergenceError(CapwavesError, RuntimeError):
    """An iterative solve or a time integration failed to converge."""

    def __init__(self, message, history=None, last_valid_time=None):
        super().__init__(message)
        self.history = list(history) if history is not None else []
        self.last_valid_time = last_valid_time


class CFLError(CapwavesError, RuntimeError):
    """A time step violates the nonlinear stability restriction."""
