"""Exception types shared across the package."""


class GraphlabError(Exception):
    """Base class for all package errors."""


class NoRoot(GraphlabError):
    """phi'(theta) = 0 has no positive root (critical or supercritical input)."""


class InvalidMass(GraphlabError):
    """A constructed distribution would carry negative mass."""


class SupportTooLarge(GraphlabError):
    """An exact dynamic program would exceed its support guard."""


class NotGraphical(GraphlabError):
    """No simple graph realizes the degree sequence."""


class AttemptsExhausted(GraphlabError):
    """Rejection sampling did not produce a simple graph in time."""


class PreconditionError(GraphlabError):
    """A theorem or operation precondition does not hold for the input."""


class ConfigError(GraphlabError):
    """An experiment configuration is malformed."""

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")
