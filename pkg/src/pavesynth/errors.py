"""Exception types shared across the package."""


class ParameterError(ValueError):
    """A parameter violates a documented bound."""


class DatasetIOError(OSError):
    """Reading or writing a dataset failed.

    ``completed`` lists the sample indices (or ids) that were fully written
    before the failure, so a caller can resume or clean up.
    """

    def __init__(self, message, completed=()):
        super().__init__(message)
        self.completed = list(completed)
