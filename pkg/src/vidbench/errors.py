"""Exception taxonomy shared across the toolkit.

Two bases matter for callers: InputError covers everything caused by bad
input or configuration (CLI exit code 1), RuntimeFailure covers environment
and backend trouble (CLI exit code 2).
"""


class ToolkitError(Exception):
    """Base class for all toolkit errors."""


class InputError(ToolkitError):
    """Invalid data, configuration, or arguments supplied by the caller."""


class RuntimeFailure(ToolkitError):
    """External failure at run time: backends, storage, network."""


class ValidationError(InputError):
    """A record or artifact violates a model invariant."""


class ConfigError(InputError):
    """Inconsistent or out-of-range configuration values."""
