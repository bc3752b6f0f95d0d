"""Exception taxonomy.

Every error carries a stable machine-readable ``code`` so transport layers
(REST error envelopes, CLI exit messages) can map failures without string
matching on messages.
"""

from __future__ import annotations


class RepositoryError(Exception):
    """Base class for all domain errors."""

    code = "Internal"

    def __init__(self, message: str = ""):
        super().__init__(message or self.code)
        self.message = message or self.code


class MalformedPid(RepositoryError):
    code = "MalformedPid"


class MalformedPath(RepositoryError):
    code = "MalformedPath"


class NotFound(RepositoryError):
    code = "NotFound"


class NoVersionAtTime(RepositoryError):
    code = "NoVersionAtTime"


class DuplicatePid(RepositoryError):
    code = "DuplicatePid"


class DuplicateComponent(RepositoryError):
    code = "DuplicateComponent"


class ReservedId(RepositoryError):
    code = "ReservedId"


class BoundDatastream(RepositoryError):
    code = "BoundDatastream"


class MissingDependency(RepositoryError):
    code = "MissingDependency"


class ImmutableProperty(RepositoryError):
    code = "ImmutableProperty"


class XmlSyntax(RepositoryError):
    code = "XmlSyntax"


class SchemaViolation(RepositoryError):
    code = "SchemaViolation"


class InvariantViolation(RepositoryError):
    code = "InvariantViolation"


class RdfSyntax(RepositoryError):
    code = "RdfSyntax"


class SubjectRestriction(RepositoryError):
    code = "SubjectRestriction"


class ReservedPredicate(RepositoryError):
    code = "ReservedPredicate"


class QuerySyntax(RepositoryError):
    code = "QuerySyntax"


class UnknownMethod(RepositoryError):
    code = "UnknownMethod"


class MissingParameter(RepositoryError):
    code = "MissingParameter"


class UpstreamFetchFailed(RepositoryError):
    code = "UpstreamFetchFailed"


class UpstreamBadStatus(RepositoryError):
    code = "UpstreamBadStatus"


class WrongControlGroup(RepositoryError):
    code = "WrongControlGroup"


class InvalidServiceBinding(RepositoryError):
    code = "InvalidServiceBinding"
