"""Exception hierarchy shared by all modules.

The command-line front end maps these onto its exit codes, so new error
types should subclass one of the categories below.
"""


class AbsorbTimeError(Exception):
    """Base class for every error raised by the package."""


class ChainValidationError(AbsorbTimeError, ValueError):
    """Malformed input: bad matrix, bad state index, bad parameter."""


class NotAbsorbingError(ChainValidationError):
    """The chain has no absorbing state, or some transient state never absorbs."""

    def __init__(self, message, states=()):
        super().__init__(message)
        self.states = tuple(states)


class ImpossibleObservationError(AbsorbTimeError):
    """The requested pair of observations has probability zero."""


class SimulationError(AbsorbTimeError, RuntimeError):
    """Monte Carlo run exceeded its rejection or step cap."""


class TruncationError(AbsorbTimeError, RuntimeError):
    """A truncated series needed more terms than its hard cap."""
