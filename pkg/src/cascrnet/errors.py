"""Exception types shared across the package."""


class ContractViolation(ValueError):
    """An operation was called with arguments that break its preconditions."""


class InvalidSpecError(ValueError):
    """A layer or block configuration cannot produce a valid output."""


class NonFiniteError(ArithmeticError):
    """A NaN or Inf showed up where finiteness is required."""


class FormatError(ValueError):
    """A binary or text file could not be parsed.

    ``offset`` is the byte offset at which parsing failed, when known.
    """

    def __init__(self, message: str, offset: int | None = None, path: str | None = None):
        self.offset = offset
        self.path = path
        parts = [message]
        if offset is not None:
            parts.append(f"at byte offset {offset}")
        if path is not None:
            parts.append(f"in {path}")
        super().__init__(" ".join(parts))


class DataError(ValueError):
    """Dataset manifests or sample files are unusable."""


class ConfigError(ValueError):
    """A run configuration is missing, malformed, or names unknown keys."""
