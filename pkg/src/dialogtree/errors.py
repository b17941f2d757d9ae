"""Exception hierarchy shared across the package."""


class DialogTreeError(Exception):
    """Base class for all errors raised by this package."""


class SchemaError(DialogTreeError):
    """A schema declaration or a value breaks a schema rule."""


class UnknownAttributeError(SchemaError):
    """An attribute name does not exist in the schema."""


class DatasetFormatError(DialogTreeError):
    """A tabular source cannot be parsed; carries row/column context."""

    def __init__(self, message, row=None, column=None):
        loc = []
        if row is not None:
            loc.append(f"row {row}")
        if column is not None:
            loc.append(f"column {column!r}")
        if loc:
            message = f"{message} ({', '.join(loc)})"
        super().__init__(message)
        self.row = row
        self.column = column


class InvalidAnswerError(DialogTreeError):
    """A dialog answer fails schema validation or has a bad confidence."""


class AttributeMismatchError(DialogTreeError):
    """An answer names an attribute other than the pending question's."""


class SessionClosedError(DialogTreeError):
    """The session is already classified; no further turns are possible."""


class VerificationError(DialogTreeError):
    """A supervisor verification is inconsistent with the store."""


class NotFoundError(DialogTreeError):
    """A requested stored document or version does not exist."""


class CorruptDocumentError(DialogTreeError):
    """A stored document fails its content-digest check."""
