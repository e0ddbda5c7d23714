"""Exception types shared by the physics apps, the config layer and the CLI."""


class QndsimError(Exception):
    """Base class for every error raised by qndsim."""


class InvalidParameterError(QndsimError, ValueError):
    """A physical parameter violates a documented precondition."""


class SequenceValidationError(InvalidParameterError):
    """A pulse sequence is malformed; ``index`` points at the offending segment."""

    def __init__(self, message, index=None):
        self.index = index
        self.detail = message
        if index is not None:
            message = f"segment {index}: {message}"
        super().__init__(message)


class ConfigValidationError(QndsimError):
    """A run configuration failed validation.

    ``errors`` is a list of ``(pointer, message)`` pairs where ``pointer`` is a
    JSON-pointer-style path such as ``/ensemble/n_atoms``.
    """

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__('; '.join(f"{path}: {msg}" for path, msg in self.errors))


class ShortTimeValidityWarning(UserWarning):
    """The short-time squeezing formula is used outside n·Ω²·t² ≪ 1."""
