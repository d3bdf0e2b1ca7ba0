"""Exception hierarchy shared by all modules.

The CLI maps these onto exit codes: config/usage problems -> 1,
data problems -> 2, anything else -> 3.
"""


class ColorSearchError(Exception):
    pass


class ConfigError(ColorSearchError):
    """Bad configuration file, parameter or command usage."""


class QueryError(ConfigError):
    """Malformed or unknown term in a search query."""


class DataError(ColorSearchError):
    """Input data is unusable (unreadable, inconsistent, empty)."""


class EmptyDatasetError(DataError):
    """An operation produced or received a dataset with no samples."""


class EmptyRegionError(DataError):
    """A semantic region contains no pixels after masking/erosion."""


class TreeFormatError(DataError):
    """A persisted tree file is corrupt or has an unsupported version."""
