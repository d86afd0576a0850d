"""Shared exception types, mapped to CLI exit codes."""


class ConfigError(ValueError):
    """Invalid experiment configuration (CLI exit code 2)."""


class NumericError(RuntimeError):
    """A numeric routine failed to converge or produced inconsistent
    diagnostics (CLI exit code 3)."""


class UnstableChainError(NumericError):
    """The queue chain has no normalizable stationary distribution."""
