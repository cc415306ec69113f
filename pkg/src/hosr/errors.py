"""Exception hierarchy shared by all hosr modules."""


class HosrError(Exception):
    """Base class for every error raised by the package."""


class ParseError(HosrError):
    def __init__(self, message, line=None, path=None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}:"
        if line is not None:
            where += f"{line}:"
        super().__init__(f"{where} {message}" if where else message)


class TopologyError(HosrError):
    """Non-manifold or otherwise invalid mesh connectivity."""


class GeometryError(HosrError):
    """Degenerate geometric configuration (zero area, zero length, ...)."""


class AmbiguityError(GeometryError):
    """A closest point or normal is not uniquely defined."""


class DegenerateStencilError(HosrError):
    """Every column of a least-squares system was truncated."""


class NodeSetError(HosrError):
    """Invalid or ill-conditioned element node set."""


class ConfigurationError(HosrError):
    """Inconsistent reconstruction or run configuration."""
