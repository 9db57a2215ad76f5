"""Exception types raised across the package."""


class ConfigurationError(ValueError):
    """A scenario, pipeline or sweep configuration is invalid.

    ``problems`` holds one ``(field, message)`` pair per violated constraint.
    """

    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [("config", problems)]
        self.problems = list(problems)
        msg = "; ".join(f"{field}: {text}" for field, text in self.problems)
        super().__init__(msg)


class SingularityError(ValueError):
    """Emitter sits on top of a tag or the receiver (zero path length)."""


class DomainError(ValueError):
    """A distance is undefined for the given input (e.g. a zero-norm vector)."""

    def __init__(self, message, claimed_id=None, slot=None):
        super().__init__(message)
        self.claimed_id = claimed_id
        self.slot = slot
