"""Exception hierarchy. Each class carries the CLI exit code it maps to."""


class GraphRankError(Exception):
    exit_code = 1


class DataError(GraphRankError, ValueError):
    """Malformed input data (bad indices, unparsable rows, empty files)."""

    exit_code = 2


class IdentifiabilityError(GraphRankError):
    """The merits (or regression coefficients) are not estimable from the design.

    ``components`` lists vertex groups of a disconnected graph;
    ``directions`` holds covariate coefficient vectors lying in the span of
    the incidence matrix.
    """

    exit_code = 3

    def __init__(self, message, components=None, directions=None):
        super().__init__(message)
        self.components = components
        self.directions = directions


class DegenerateFitError(GraphRankError):
    """Residual variance is zero, so scale-based statistics are undefined."""

    exit_code = 2


class ConfigError(GraphRankError, ValueError):
    exit_code = 4
