"""Exception hierarchy shared by all modules."""


class BesselMorreyError(Exception):
    """Base class for every error raised by this package."""


class SingularityError(BesselMorreyError, ValueError):
    pass


class DivergenceError(BesselMorreyError, ValueError):
    """An integral or norm is infinite for the requested parameters.

    ``endpoint`` names where the divergence happens ("0", "infinity", ...).
    """

    def __init__(self, message, endpoint=None):
        super().__init__(message)
        self.endpoint = endpoint


class InfeasibleExponentError(BesselMorreyError, ValueError):
    pass


class InvalidShapeError(BesselMorreyError, ValueError):
    pass


class EmptyIntersectionError(BesselMorreyError, ValueError):
    pass


class AliasingError(BesselMorreyError, RuntimeError):
    pass


class ConfigError(BesselMorreyError, ValueError):
    pass
