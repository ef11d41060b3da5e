"""Exception types shared across the package."""


class ParseError(ValueError):
    """An input file is malformed. Carries the offending location."""

    def __init__(self, message, line=None, source=None):
        self.line = line
        self.source = source
        where = ""
        if source:
            where = str(source)
        if line is not None:
            where += ":%d" % line
        super().__init__(f"{where}: {message}" if where else message)


class DataError(ValueError):
    """Inputs are well-formed but semantically unusable."""


class ResourceError(DataError):
    """A knowledge table is internally inconsistent (e.g. a redirect cycle)."""


class ConsistencyError(DataError):
    """A temporal graph entails contradictory relations.

    ``cycle`` holds the nodes of one violating cycle, when known.
    """

    def __init__(self, message, cycle=()):
        super().__init__(message)
        self.cycle = tuple(cycle)
