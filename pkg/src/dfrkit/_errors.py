class UnsupportedError(ValueError):
    """The requested combination of model, policy and method is not supported."""
