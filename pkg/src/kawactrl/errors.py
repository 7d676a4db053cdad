"""Exception hierarchy for the kawactrl package."""


class KawactrlError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(KawactrlError, ValueError):
    """A configuration file or parameter block is malformed."""


class UndersampledGrid(KawactrlError, ValueError):
    """A collocation grid is too coarse for the field it must represent."""


class ResolutionError(KawactrlError):
    """Spectral truncation can no longer represent the evolving state.

    Raised when input support exceeds the mode cutoff or when the energy
    fraction in the top retained band crosses the refine-or-abort threshold.
    """


class NotGenerator(KawactrlError, ValueError):
    """The supplied mode set does not generate the full integer lattice."""


class SearchExhausted(KawactrlError):
    """A capped search (mode reachability or steering loop) ran out of budget."""


class ConstantNotRepresentable(KawactrlError, ValueError):
    """A constant component was requested over a mode set that excludes mode 0."""


class DecompositionError(KawactrlError, ValueError):
    """Target field cannot be certified over the requested mode set."""


class NoConvergence(KawactrlError):
    """A steering search exhausted its parameter grid.

    Carries the best error seen so it can be reported in diagnostics.
    """

    def __init__(self, message: str, best_error: float = float("inf")):
        super().__init__(message)
        self.best_error = best_error


class WindowCollapse(KawactrlError):
    """No usable coasting window exists at the requested tolerance."""
