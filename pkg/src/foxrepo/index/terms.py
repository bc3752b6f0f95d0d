"""RDF term and triple value types, plus the vocabulary namespaces."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

RDF_NS = "http://www.w3.org/1999/02/22-rdf-syntax-ns#"
XSD_NS = "http://www.w3.org/2001/XMLSchema#"
XSD_DATETIME = XSD_NS + "dateTime"
MODEL_NS = "info:fedora/fedora-system:def/model#"
VIEW_NS = "info:fedora/fedora-system:def/view#"
REL_NS = "info:fedora/fedora-system:def:relations-external#"
DC_NS = "http://purl.org/dc/elements/1.1/"

# Prefix aliases usable in <...> query tokens.
PREFIXES = {
    "rdf": RDF_NS,
    "xsd": XSD_NS,
    "fedora-model": MODEL_NS,
    "fedora-view": VIEW_NS,
    "rel": REL_NS,
    "dc": DC_NS,
}


@dataclass(frozen=True)
class Resource:
    uri: str


@dataclass(frozen=True)
class PlainLiteral:
    value: str


@dataclass(frozen=True)
class TypedLiteral:
    value: str
    datatype: str


Term = Union[Resource, PlainLiteral, TypedLiteral]


@dataclass(frozen=True)
class Triple:
    subject: Resource
    predicate: Resource
    object: Term


@dataclass(frozen=True)
class Variable:
    name: str


class _Wildcard:
    _instance: Optional["_Wildcard"] = None

    def __new__(cls) -> "_Wildcard":
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "*"


WILDCARD = _Wildcard()

PatternSlot = Union[Term, Variable, _Wildcard]


@dataclass(frozen=True)
class TriplePattern:
    subject: PatternSlot
    predicate: PatternSlot
    object: PatternSlot


@dataclass(frozen=True)
class ConjunctiveQuery:
    select_vars: tuple[str, ...]
    patterns: tuple[TriplePattern, ...]


# A solution row binds exactly the selected variables.
BindingRow = dict[str, Term]


def _escape_literal(value: str) -> str:
    out = []
    for ch in value:
        if ch == "\\":
            out.append("\\\\")
        elif ch == '"':
            out.append('\\"')
        elif ch == "\n":
            out.append("\\n")
        elif ch == "\r":
            out.append("\\r")
        elif ch == "\t":
            out.append("\\t")
        else:
            out.append(ch)
    return "".join(out)


def render_term(term: Term) -> str:
    """N-Triples form of a term; also the deterministic ordering key."""
    if isinstance(term, Resource):
        return f"<{term.uri}>"
    if isinstance(term, PlainLiteral):
        return f'"{_escape_literal(term.value)}"'
    return f'"{_escape_literal(term.value)}"^^<{term.datatype}>'


def render_cell(term: Term) -> str:
    """Tabular form of a term: bare URI, N-Triples form for literals."""
    if isinstance(term, Resource):
        return term.uri
    return render_term(term)


def render_triple(triple: Triple) -> str:
    return (
        f"{render_term(triple.subject)} {render_term(triple.predicate)} "
        f"{render_term(triple.object)} ."
    )


def expand_prefixed(text: str) -> str:
    """Expand a known "prefix:rest" alias inside a <...> token; opaque otherwise."""
    head, sep, rest = text.partition(":")
    if sep and head in PREFIXES:
        return PREFIXES[head] + rest
    return text
