"""Shared exception bases.

Everything that can be provoked by user input derives from RetargetError
(CLI exit code 1). InternalError marks invariant violations inside the
toolkit itself (CLI exit code 2) and deliberately does not share a base
with the user-facing errors.
"""


class RetargetError(Exception):
    """Base class for user-facing errors."""


class InternalError(Exception):
    """An internal invariant was violated; this is a bug, not bad input."""
