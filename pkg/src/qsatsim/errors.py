class InvalidParameters(ValueError):
    pass


class UnsupportedInstance(ValueError):
    pass


class DimacsParseError(ValueError):
    pass


class ResourceGuard(RuntimeError):
    """Refused because the request would exceed a configured size limit."""


class IntegrationError(RuntimeError):
    """Raised when a mean-field trajectory leaves its domain of validity."""
