"""Exception types shared across the package."""


class DataError(Exception):
    """Invalid data, parameters, or file contents supplied by the caller."""


class FormatError(DataError):
    """A binary container or label file failed structural validation."""
