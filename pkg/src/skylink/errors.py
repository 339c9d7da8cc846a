"""Exception hierarchy shared by all skylink modules."""


class SkylinkError(Exception):
    """Base class for every error raised by skylink."""


class DomainError(SkylinkError, ValueError):
    """A chart point lies outside the domain of a metric or construction."""


class IntegrationError(SkylinkError):
    """Geodesic integration failed; ``partial`` holds whatever was computed."""

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class NumericalError(SkylinkError):
    """A numerical method failed to converge; ``best`` holds its best estimate."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class CapabilityError(SkylinkError):
    """The requested operation is not supported for this metric kind."""


class IntegrityError(SkylinkError):
    """Sampled data fails a structural check (e.g. a Legendrian residual)."""


class NonGenericFrontError(SkylinkError):
    """A front diagram has an unresolved tangency at ``phi``."""

    def __init__(self, message, phi=None):
        super().__init__(message)
        self.phi = phi


class UnsupportedTopologyError(SkylinkError):
    """Link signatures are only defined for components of winding degree 1."""


class ConfigError(SkylinkError, ValueError):
    """Scenario configuration failed to parse or validate."""


class RangeError(SkylinkError):
    """A search (e.g. for a slice crossing) exhausted its allowed range."""
