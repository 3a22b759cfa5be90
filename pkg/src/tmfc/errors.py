"""Exception types raised by the simulator."""


class SimulationError(Exception):
    """Base class for all errors raised by this package."""


class DomainWindowError(SimulationError):
    """A frequency fell outside a dispersion band's declared validity window."""

    def __init__(self, band: int, window: tuple, omega) -> None:
        self.band = band
        self.window = tuple(window)
        super().__init__(
            f"band {band}: frequency {omega!r} rad/s outside validity window "
            f"[{window[0]:.6e}, {window[1]:.6e}] rad/s"
        )


class DegenerateKernelError(SimulationError):
    """The conversion kernel vanished (or decomposed to numerical rank zero)."""


class ResolutionError(SimulationError):
    """A requested spectral feature is too narrow for the frequency grid."""


class BracketError(SimulationError):
    """A root/optimizer bracket does not straddle the sought value."""


class ConvergenceError(SimulationError):
    """An iterative solver ran out of iterations; carries the best iterate."""

    def __init__(self, message: str, best=None) -> None:
        self.best = best
        super().__init__(message)


class ConfigError(SimulationError):
    """A run configuration file is malformed or inconsistent."""
