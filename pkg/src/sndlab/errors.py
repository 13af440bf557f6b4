"""Exception taxonomy shared by all subpackages."""


class ContractError(ValueError):
    """An argument violated a documented precondition (shape, range, dtype)."""


class NumericError(ArithmeticError):
    """A non-finite value appeared where finite math was required."""


class StateError(RuntimeError):
    """An operation was called in the wrong order (e.g. backward before forward)."""


class GenerationError(RuntimeError):
    """Procedural world generation failed to produce a valid layout."""


class ConfigError(ValueError):
    """A config file could not be parsed or contained invalid entries."""


class CheckpointError(RuntimeError):
    """A checkpoint could not be written or restored."""
