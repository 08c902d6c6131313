class SetupError(RuntimeError):
    """The dump cannot start: bad backbone, missing weights, empty folder."""
