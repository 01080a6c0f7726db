"""Exception types shared across the package.

The command line front end maps these onto process exit codes:
``FormatError`` -> 1, ``InputError`` (and subclasses) -> 2,
``CapacityError`` -> 3.
"""


class InputError(ValueError):
    """A precondition on arguments or in-memory inputs was violated."""


class NumericDomainError(InputError):
    """An operation left its numeric domain (e.g. log of a zero iterate)."""


class FormatError(ValueError):
    """A file could not be parsed or its content is malformed."""


class CapacityError(RuntimeError):
    """A configured enumeration or resource cap would be exceeded."""
