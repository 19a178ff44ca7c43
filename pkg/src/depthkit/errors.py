"""Exception types shared across depthkit modules."""


class InsufficientDataError(ValueError):
    """Raised when an analysis has too few samples to produce a result."""


class ConfigError(ValueError):
    """Raised for malformed configuration documents or inconsistent options."""


class FitError(ValueError):
    """Raised when a model fit is degenerate (rank-deficient support)."""
