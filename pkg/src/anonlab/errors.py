"""Exception types shared across the package."""


class ConfigurationError(Exception):
    """A config file or model/prior combination is invalid."""


class ResourceLimitError(Exception):
    """A requested computation exceeds a hard size cap."""


class UnsupportedPriorError(Exception):
    """The exact posterior machinery only supports the uniform prior."""


class NumericError(Exception):
    """A linear solve or similar numeric step failed to converge."""
