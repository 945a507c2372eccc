"""Exception hierarchy shared by all subround modules."""


class SubroundError(Exception):
    """Base class for errors raised by this package."""


class InputError(SubroundError, ValueError):
    """Malformed or out-of-contract input (CLI exit code 1)."""


class CapacityError(SubroundError):
    """Instance too large for an exact/exhaustive routine (CLI exit code 2)."""
