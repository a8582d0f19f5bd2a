"""Exception hierarchy shared by all relac modules."""

from __future__ import annotations


class RelacError(Exception):
    """Base class for every error raised by this package."""


# --- system model / graph --------------------------------------------------

class ModelError(RelacError):
    """Violation of the system model (schema) or its referential rules."""


class UnknownTypeError(ModelError):
    pass


class UnknownRelationError(ModelError):
    pass


class UnknownNodeError(ModelError):
    pass


class UnknownActionError(ModelError):
    pass


class DuplicateEntityError(ModelError):
    pass


class SchemaViolationError(ModelError):
    """Edge not permitted by the permissible-relationship graph."""


class FrozenRelationError(SchemaViolationError):
    """Mutation of a relation that was frozen after history edges appeared."""


# --- path conditions -------------------------------------------------------

class PathSyntaxError(RelacError):
    """Malformed path-condition text. ``position`` is a 0-based column."""

    def __init__(self, message: str, position: int | None = None):
        self.position = position
        if position is not None:
            message = f"{message} (column {position})"
        super().__init__(message)


class EmptyInputError(PathSyntaxError):
    pass


class NotSimpleError(RelacError):
    """Operation requires a path condition in normalized simple form."""


class EmptyPathConditionError(RelacError):
    """The empty condition has no automaton; callers must special-case it."""


# --- policies ---------------------------------------------------------------

class PolicyError(RelacError):
    """Structurally invalid policy."""


class MalformedDagError(PolicyError):
    """DAG-shaped policy without a unique root, or containing a cycle."""


class NonDenyOverridesError(PolicyError):
    """Separation-of-duty construction requires the deny-overrides strategy."""


# --- file formats ----------------------------------------------------------

class FileFormatError(RelacError):
    """Problem in a model/graph/policy/requests file.

    Collects one message per offending line so a validation run can report
    everything at once.
    """

    def __init__(self, messages: list[str] | str, source: str = "<string>"):
        if isinstance(messages, str):
            messages = [messages]
        self.messages = messages
        self.source = source
        super().__init__("\n".join(messages))
