"""Exception types shared by the library and mapped to CLI exit codes."""


class ParseError(ValueError):
    """Malformed field, element, region or config input (exit status 2)."""


class CapExceededError(RuntimeError):
    """An enumeration or iteration cap was hit before completion (exit status 3)."""


class InvariantError(AssertionError):
    """A checked mathematical invariant failed at runtime (exit status 4)."""
