"""Exception hierarchy shared by all geofrac modules."""


class GeofracError(Exception):
    """Base class for all errors raised by this package."""


class ParameterError(GeofracError, ValueError):
    """Invalid argument values (non-positive sizes, bad resolutions, ...)."""


class GeometryError(GeofracError):
    """Geometric preconditions violated (path not alignable, outside domain)."""


class SolverError(GeofracError):
    """A linear solve failed or produced a non-finite result."""


class AdmissibilityError(GeofracError):
    """A stress field failed the weak admissibility checks."""


class ConsistencyError(GeofracError):
    """Internal consistency violated (e.g. dual bound above primal energy)."""


class ScenarioError(GeofracError):
    """Scenario file cannot be parsed or validated.

    Carries the offending key and line number when known.
    """

    def __init__(self, message, key=None, line=None):
        super().__init__(message)
        self.key = key
        self.line = line
