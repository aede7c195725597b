"""Exception hierarchy.

Domain failures (bad geometry, unresolved data, incompatible boundary data,
solver blow-up) derive from :class:`DomainError`; malformed files and
configuration derive from :class:`InputError`.  The CLI maps the first family
to exit code 1 and the second to exit code 2.
"""


class MirrorflowError(Exception):
    pass


class DomainError(MirrorflowError):
    pass


class InputError(MirrorflowError):
    pass


class GeometryError(DomainError):
    """Operation called on a grid of the wrong geometry."""


class AlignmentError(DomainError):
    """A reflection plane or embedding does not fall on grid points."""


class ResolutionError(DomainError):
    """Too few grid planes for the requested stencil, or an under-resolved bump."""


class SupportError(DomainError):
    """A compactly supported construction does not fit inside the domain."""


class CompatibilityError(DomainError):
    """Initial data violates the slip or compatibility conditions."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class CFLError(DomainError):
    def __init__(self, message, step=0, time=0.0, cfl=float("nan")):
        super().__init__(message)
        self.step = step
        self.time = time
        self.cfl = cfl


class BlowUpError(DomainError):
    def __init__(self, message, step=0, time=0.0):
        super().__init__(message)
        self.step = step
        self.time = time


class FormatError(InputError):
    """Malformed or truncated MFLD file."""


class ConfigError(InputError):
    pass


class MismatchError(DomainError):
    """Two fields or trajectories that must correspond do not."""
