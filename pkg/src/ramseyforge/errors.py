"""Exception types shared across the toolkit.

The CLI maps these onto exit codes: FormatError -> 3, CapError -> 2,
everything else that escapes -> 3.
"""


class RamseyForgeError(Exception):
    """Base class for all toolkit errors."""


class StructureError(RamseyForgeError):
    """A structure, language or vertex reference is malformed."""


class LanguageMismatchError(StructureError):
    """Two structures that must share a language do not."""


class MorphismError(RamseyForgeError):
    """A morphism certificate is malformed (e.g. maps an undeclared vertex)."""


class PreconditionError(RamseyForgeError):
    """An operation was called outside its stated precondition."""


class CapError(RamseyForgeError):
    """A desk-scale guard tripped; carries the projected size when known."""

    def __init__(self, message, projected=None):
        super().__init__(message)
        self.projected = projected


class FormatError(RamseyForgeError):
    """An interchange file (RSF / JSON sidecar) is malformed."""
