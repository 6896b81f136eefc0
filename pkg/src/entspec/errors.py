"""Exception hierarchy.

The CLI maps these onto exit codes: validation problems exit with 3 and
resource-cap violations with 4.
"""


class EntspecError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(EntspecError, ValueError):
    """An input violated a documented precondition or invariant."""


class ResourceLimitError(EntspecError):
    """A dense dimension, copy count or grid size exceeded its hard cap."""


class NumericalError(EntspecError):
    """A computed quantity violated an invariant it must satisfy."""


class ProtocolAborted(EntspecError):
    """A protocol run produced no usable output.

    The partially filled outcome, when one exists, is kept on ``outcome``
    so callers can still report the failure probability.
    """

    def __init__(self, message, outcome=None):
        super().__init__(message)
        self.outcome = outcome
