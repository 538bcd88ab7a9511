"""Exception hierarchy for the simulation engine and its pipelines."""


class SkyrsimError(Exception):
    """Base class for all package errors."""


class ParameterError(SkyrsimError, ValueError):
    """Invalid or inconsistent model parameters."""


class DomainError(SkyrsimError, ValueError):
    """Argument outside a function's mathematical domain."""


class SingularConfigurationError(SkyrsimError):
    """Two particles closer than the coincidence guard."""


class InstabilityError(SkyrsimError):
    """A single step moved a particle farther than box_l/4."""


class PlacementError(SkyrsimError):
    """Rejection sampling exhausted its attempt budget."""


class InvalidInputError(SkyrsimError, ValueError):
    """Malformed input to an analysis routine (empty, NaN, too short)."""


class GenerationError(SkyrsimError):
    """Dataset generation could not meet a class quota within budget."""


class SweepError(SkyrsimError):
    """One or more sweep cells failed to produce order parameters."""


class ConfigError(SkyrsimError, ValueError):
    """Config file failed schema validation."""
