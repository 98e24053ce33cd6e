"""Exception types shared across the package."""


class HflsnmError(Exception):
    """Base class for every error raised by this package."""


class ConfigurationError(HflsnmError, ValueError):
    """Invalid configuration or generator parameters."""


class InfeasibleError(HflsnmError):
    """A latency/bandwidth constraint cannot be met.

    ``client`` names the offending client when one can be identified.
    """

    def __init__(self, message, client=None):
        super().__init__(message)
        self.client = client


class AssociationError(HflsnmError):
    """A client has no edge server within coverage."""

    def __init__(self, message, client=None):
        super().__init__(message)
        self.client = client


class ConstraintError(HflsnmError, ValueError):
    """The requested EDCR target cannot be reached (``r_ef0 > r_ef_max``)."""

    def __init__(self, message, bound=None):
        super().__init__(message)
        self.bound = bound


class CapacityError(HflsnmError):
    """No per-ES client cap >= 1 satisfies the averaged latency equation."""


class SelectionError(HflsnmError):
    """PEMO ended with an empty candidate pool."""


class NumericalError(HflsnmError, RuntimeError):
    """A 1-D root search failed to converge on a supposedly feasible instance."""


class OracleSizeError(HflsnmError, ValueError):
    """A brute-force oracle was asked to enumerate too many configurations."""


class RoundError(HflsnmError):
    """Wraps a sub-module failure with the global round index it occurred in."""

    def __init__(self, round_index, cause):
        super().__init__(f"round {round_index}: {cause}")
        self.round_index = round_index
        self.cause = cause
