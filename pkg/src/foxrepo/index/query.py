"""Conjunctive query surface: an iTQL subset and SPO triple patterns.

iTQL subset grammar:

    select $var+ from <#ri> where CLAUSE (and CLAUSE)*
    CLAUSE = [ "(" ] TERM <uri> TERM [ ")" ]
    TERM   = $var | <uri> | 'literal'

SPO grammar: three tokens, each <uri>, 'literal' (object only), or *.

URI tokens may use the fixed prefix aliases (rel:, fedora-model:,
fedora-view:, rdf:, xsd:, dc:); anything else inside <...> passes through
as an opaque URI.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional, Union
from xml.sax.saxutils import escape

from ..errors import QuerySyntax
from .store import Snapshot
from .terms import (
    WILDCARD,
    ConjunctiveQuery,
    PatternSlot,
    PlainLiteral,
    Resource,
    Term,
    Triple,
    TriplePattern,
    Variable,
    expand_prefixed,
    render_cell,
    render_term,
    render_triple,
)

DEFAULT_ROW_LIMIT = 10_000

_TOKEN_RE = re.compile(
    r"""\s*(?:
        (?P<var>\$[A-Za-z_][A-Za-z0-9_]*)
      | (?P<uri><[^<>]*>)
      | (?P<lit>'(?:[^'\\]|\\.)*')
      | (?P<punct>[()])
      | (?P<word>[A-Za-z][A-Za-z0-9_-]*)
    )""",
    re.VERBOSE,
)


@dataclass
class _Tokens:
    items: list[tuple[str, str]]
    pos: int = 0

    def peek(self) -> Optional[tuple[str, str]]:
        return self.items[self.pos] if self.pos < len(self.items) else None

    def next(self) -> tuple[str, str]:
        item = self.peek()
        if item is None:
            raise QuerySyntax("unexpected end of query")
        self.pos += 1
        return item

    def expect_word(self, word: str) -> None:
        kind, value = self.next()
        if kind != "word" or value.lower() != word:
            raise QuerySyntax(f"expected {word!r}, got {value!r}")


def _tokenize(text: str) -> _Tokens:
    items: list[tuple[str, str]] = []
    pos = 0
    while pos < len(text):
        if text[pos].isspace():
            pos += 1
            continue
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise QuerySyntax(f"unexpected character {text[pos]!r} at offset {pos}")
        for kind in ("var", "uri", "lit", "punct", "word"):
            value = m.group(kind)
            if value is not None:
                items.append((kind, value))
                break
        pos = m.end()
    return _Tokens(items)


def _unescape_literal(token: str) -> str:
    body = token[1:-1]
    return body.replace("\\'", "'").replace("\\\\", "\\")


def _term_from_token(kind: str, value: str) -> PatternSlot:
    if kind == "var":
        return Variable(value[1:])
    if kind == "uri":
        return Resource(expand_prefixed(value[1:-1].strip()))
    if kind == "lit":
        return PlainLiteral(_unescape_literal(value))
    raise QuerySyntax(f"expected a term, got {value!r}")


def _parse_clause(tokens: _Tokens) -> TriplePattern:
    parenthesized = False
    item = tokens.peek()
    if item is not None and item == ("punct", "("):
        tokens.next()
        parenthesized = True
    subject = _term_from_token(*tokens.next())
    kind, value = tokens.next()
    if kind != "uri":
        raise QuerySyntax(f"predicate must be a <uri>, got {value!r}")
    predicate = Resource(expand_prefixed(value[1:-1].strip()))
    obj = _term_from_token(*tokens.next())
    if parenthesized:
        kind, value = tokens.next()
        if (kind, value) != ("punct", ")"):
            raise QuerySyntax(f"expected ')', got {value!r}")
    if isinstance(subject, PlainLiteral):
        raise QuerySyntax("subject cannot be a literal")
    return TriplePattern(subject, predicate, obj)


def _parse_itql(text: str) -> ConjunctiveQuery:
    tokens = _tokenize(text)
    tokens.expect_word("select")
    select_vars: list[str] = []
    while True:
        item = tokens.peek()
        if item is None or item[0] != "var":
            break
        select_vars.append(tokens.next()[1][1:])
    if not select_vars:
        raise QuerySyntax("select list needs at least one variable")
    tokens.expect_word("from")
    kind, value = tokens.next()
    if kind != "uri" or value != "<#ri>":
        raise QuerySyntax(f"from target must be <#ri>, got {value!r}")
    tokens.expect_word("where")

    patterns: list[TriplePattern] = []
    patterns.append(_parse_clause(tokens))
    while tokens.peek() is not None:
        tokens.expect_word("and")
        patterns.append(_parse_clause(tokens))

    # conjunction is idempotent: exact duplicate clauses collapse
    deduped: list[TriplePattern] = []
    for p in patterns:
        if p not in deduped:
            deduped.append(p)

    bound = {
        slot.name
        for p in deduped
        for slot in (p.subject, p.predicate, p.object)
        if isinstance(slot, Variable)
    }
    missing = [v for v in select_vars if v not in bound]
    if missing:
        raise QuerySyntax(f"selected variables never used in a clause: {missing}")
    return ConjunctiveQuery(select_vars=tuple(select_vars), patterns=tuple(deduped))


_SPO_TOKEN_RE = re.compile(r"\s*(\*|<[^<>]*>|'(?:[^'\\]|\\.)*')")


def _parse_spo(text: str) -> TriplePattern:
    slots: list[PatternSlot] = []
    pos = 0
    while len(slots) < 3:
        m = _SPO_TOKEN_RE.match(text, pos)
        if m is None:
            raise QuerySyntax("an SPO query is three tokens: <uri>|'literal'|*")
        token = m.group(1)
        if token == "*":
            slots.append(WILDCARD)
        elif token.startswith("<"):
            slots.append(Resource(expand_prefixed(token[1:-1].strip())))
        else:
            slots.append(PlainLiteral(_unescape_literal(token)))
        pos = m.end()
    if text[pos:].strip():
        raise QuerySyntax(f"trailing input after SPO pattern: {text[pos:].strip()!r}")
    subject, predicate, obj = slots
    if isinstance(subject, PlainLiteral) or isinstance(predicate, PlainLiteral):
        raise QuerySyntax("subject and predicate cannot be literals")
    return TriplePattern(subject, predicate, obj)


def parse_query(text: str, language: str) -> Union[ConjunctiveQuery, TriplePattern]:
    if language == "itql":
        return _parse_itql(text)
    if language == "spo":
        return _parse_spo(text)
    raise QuerySyntax(f"unknown query language: {language!r}")


def _slot_id(snapshot: Snapshot, slot: PatternSlot) -> Optional[int]:
    """Interned id for a concrete slot; None for variables/wildcards.

    A concrete term missing from the table cannot match anything, signalled
    with -1 (no valid id is negative).
    """
    if slot is WILDCARD or isinstance(slot, Variable):
        return None
    found = snapshot.terms.lookup(slot)
    return -1 if found is None else found


def _pattern_ids(snapshot: Snapshot, pattern: TriplePattern, bound: dict[str, int]):
    ids = []
    for slot in (pattern.subject, pattern.predicate, pattern.object):
        if isinstance(slot, Variable) and slot.name in bound:
            ids.append(bound[slot.name])
        else:
            ids.append(_slot_id(snapshot, slot))
    return ids


def _base_estimate(snapshot: Snapshot, pattern: TriplePattern) -> int:
    ids = [_slot_id(snapshot, slot) for slot in (pattern.subject, pattern.predicate, pattern.object)]
    if -1 in ids:
        return 0
    return snapshot.count(*ids)


def _order_patterns(snapshot: Snapshot, patterns: tuple[TriplePattern, ...]) -> list[TriplePattern]:
    """Greedy ordering: cheapest pattern first, preferring ones that join with
    already-bound variables."""
    remaining = list(enumerate(patterns))
    estimates = {i: _base_estimate(snapshot, p) for i, p in remaining}
    ordered: list[TriplePattern] = []
    bound: set[str] = set()

    def pattern_vars(p: TriplePattern) -> set[str]:
        return {s.name for s in (p.subject, p.predicate, p.object) if isinstance(s, Variable)}

    while remaining:
        def rank(item: tuple[int, TriplePattern]):
            i, p = item
            joined = bool(pattern_vars(p) & bound) if bound else True
            return (not joined, estimates[i], i)

        best = min(remaining, key=rank)
        remaining.remove(best)
        ordered.append(best[1])
        bound |= pattern_vars(best[1])
    return ordered


def _match_rows(
    snapshot: Snapshot, pattern: TriplePattern, rows: list[dict[str, int]]
) -> list[dict[str, int]]:
    out: list[dict[str, int]] = []
    slots = (pattern.subject, pattern.predicate, pattern.object)
    for row in rows:
        ids = _pattern_ids(snapshot, pattern, row)
        if -1 in ids:
            continue
        for found in snapshot.match(*ids):
            extended = dict(row)
            ok = True
            for slot, value in zip(slots, found):
                if isinstance(slot, Variable):
                    prior = extended.get(slot.name)
                    if prior is None:
                        extended[slot.name] = value
                    elif prior != value:
                        ok = False
                        break
            if ok:
                out.append(extended)
    return out


def query_tuples(
    snapshot: Snapshot, query: ConjunctiveQuery, limit: int = DEFAULT_ROW_LIMIT
) -> tuple[list[dict[str, Term]], bool]:
    """Natural join of all patterns, projected, deduplicated, ordered.

    Returns (rows, truncated); rows bind exactly the select variables.
    """
    rows: list[dict[str, int]] = [{}]
    for pattern in _order_patterns(snapshot, query.patterns):
        rows = _match_rows(snapshot, pattern, rows)
        if not rows:
            break
    projected = {tuple(row[name] for name in query.select_vars) for row in rows}
    terms = snapshot.terms
    rendered = sorted(
        projected, key=lambda ids: tuple(render_cell(terms.term(i)) for i in ids)
    )
    truncated = len(rendered) > limit
    rendered = rendered[:limit]
    return (
        [
            {name: terms.term(i) for name, i in zip(query.select_vars, ids)}
            for ids in rendered
        ],
        truncated,
    )


def query_triples(
    snapshot: Snapshot, pattern: TriplePattern, limit: int = DEFAULT_ROW_LIMIT
) -> tuple[list[Triple], bool]:
    """All stored triples matching the pattern, deterministically ordered."""
    ids = [
        _slot_id(snapshot, slot)
        for slot in (pattern.subject, pattern.predicate, pattern.object)
    ]
    if -1 in ids:
        return [], False
    terms = snapshot.terms
    found = [
        Triple(terms.term(s), terms.term(p), terms.term(o))
        for s, p, o in snapshot.match(*ids)
    ]
    found.sort(key=lambda t: (render_term(t.subject), render_term(t.predicate), render_term(t.object)))
    truncated = len(found) > limit
    return found[:limit], truncated


TRUNCATION_MARK = "# truncated"


def render_tuples_tsv(select_vars: tuple[str, ...], rows: list[dict[str, Term]], truncated: bool) -> str:
    lines = ["\t".join(select_vars)]
    for row in rows:
        lines.append("\t".join(render_cell(row[name]) for name in select_vars))
    if truncated:
        lines.append(TRUNCATION_MARK)
    return "\n".join(lines) + "\n"


def render_triples_ntriples(triples: list[Triple], truncated: bool) -> str:
    lines = [render_triple(t) for t in triples]
    if truncated:
        lines.append(TRUNCATION_MARK)
    return "\n".join(lines) + "\n" if lines else ""


def _binding_xml(name: str, term: Term) -> str:
    if isinstance(term, Resource):
        return f'    <binding name="{escape(name)}" type="uri">{escape(term.uri)}</binding>'
    if isinstance(term, PlainLiteral):
        return f'    <binding name="{escape(name)}" type="literal">{escape(term.value)}</binding>'
    return (
        f'    <binding name="{escape(name)}" type="typed-literal" '
        f'datatype="{escape(term.datatype)}">{escape(term.value)}</binding>'
    )


def render_tuples_xml(select_vars: tuple[str, ...], rows: list[dict[str, Term]], truncated: bool) -> str:
    lines = [f'<results truncated="{"true" if truncated else "false"}">']
    for row in rows:
        lines.append("  <row>")
        for name in select_vars:
            lines.append(_binding_xml(name, row[name]))
        lines.append("  </row>")
    lines.append("</results>")
    return "\n".join(lines) + "\n"


def render_triples_xml(triples: list[Triple], truncated: bool) -> str:
    lines = [f'<results truncated="{"true" if truncated else "false"}">']
    for t in triples:
        lines.append("  <triple>")
        lines.append(_binding_xml("subject", t.subject))
        lines.append(_binding_xml("predicate", t.predicate))
        lines.append(_binding_xml("object", t.object))
        lines.append("  </triple>")
    lines.append("</results>")
    return "\n".join(lines) + "\n"


def execute_query(
    snapshot: Snapshot,
    language: str,
    text: str,
    fmt: Optional[str] = None,
    limit: int = DEFAULT_ROW_LIMIT,
) -> tuple[str, bytes]:
    """Parse, evaluate, and render one query: (content type, payload).

    Shared by the HTTP query endpoint and the CLI so both emit identical
    bytes. Tuple queries render as tsv (default) or xml; triple queries as
    ntriples (default) or xml.
    """
    parsed = parse_query(text, language)
    if isinstance(parsed, ConjunctiveQuery):
        chosen = fmt or "tsv"
        if chosen not in ("tsv", "xml"):
            raise QuerySyntax(f"format {chosen!r} unavailable for tuple queries")
        rows, truncated = query_tuples(snapshot, parsed, limit)
        if chosen == "tsv":
            rendered = render_tuples_tsv(parsed.select_vars, rows, truncated)
            return "text/tab-separated-values; charset=utf-8", rendered.encode("utf-8")
        return "text/xml; charset=utf-8", render_tuples_xml(parsed.select_vars, rows, truncated).encode("utf-8")
    chosen = fmt or "ntriples"
    if chosen not in ("ntriples", "xml"):
        raise QuerySyntax(f"format {chosen!r} unavailable for triple queries")
    triples, truncated = query_triples(snapshot, parsed, limit)
    if chosen == "ntriples":
        return "application/n-triples", render_triples_ntriples(triples, truncated).encode("utf-8")
    return "text/xml; charset=utf-8", render_triples_xml(triples, truncated).encode("utf-8")
