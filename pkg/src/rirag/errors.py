"""Exception hierarchy shared across the toolkit.

Exit-code mapping used by the CLI: usage errors are handled by click (2),
InputValidationError -> 3, TransportError -> 4, InternalInvariantError -> 5.
"""


class RiragError(Exception):
    """Base class for all toolkit errors."""


class InputValidationError(RiragError):
    """Malformed or invariant-violating input data."""


class ParseError(InputValidationError):
    """Unparseable input file; carries file/line context when known."""


class TransportError(RiragError):
    """A remote backend could not be reached or returned garbage."""

    def __init__(self, message, batch_range=None):
        super().__init__(message)
        self.batch_range = batch_range


class FixtureMissError(RiragError):
    """A fixture backend was asked for a pair it does not contain."""

    def __init__(self, message, pair_index=None, pair_hash=None):
        super().__init__(message)
        self.pair_index = pair_index
        self.pair_hash = pair_hash


class InternalInvariantError(RiragError):
    """A component produced output violating its own contract."""
