"""Embedded triple index: interned terms, three sorted permutations, immutable
snapshots.

Readers grab a snapshot reference and never block writers; each sync commit
publishes a whole new snapshot. Term interning is shared across snapshots and
only ever grows.
"""

from __future__ import annotations

import threading
from bisect import bisect_left, bisect_right
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional

from .terms import Term, Triple, render_term

_MAX = float("inf")

IdTriple = tuple[int, int, int]


class TermTable:
    """Bidirectional term <-> integer id mapping, append-only."""

    def __init__(self) -> None:
        self._ids: dict[Term, int] = {}
        self._terms: list[Term] = []
        self._lock = threading.Lock()

    def intern(self, term: Term) -> int:
        existing = self._ids.get(term)
        if existing is not None:
            return existing
        with self._lock:
            existing = self._ids.get(term)
            if existing is not None:
                return existing
            term_id = len(self._terms)
            self._terms.append(term)
            self._ids[term] = term_id
            return term_id

    def lookup(self, term: Term) -> Optional[int]:
        return self._ids.get(term)

    def term(self, term_id: int) -> Term:
        return self._terms[term_id]


@dataclass(frozen=True)
class Snapshot:
    """One immutable state of the index: SPO, POS, OSP sorted tuples."""

    terms: TermTable
    spo: tuple[IdTriple, ...]
    pos: tuple[IdTriple, ...]
    osp: tuple[IdTriple, ...]

    def __len__(self) -> int:
        return len(self.spo)

    def triples(self) -> Iterator[Triple]:
        for s, p, o in self.spo:
            yield Triple(self.terms.term(s), self.terms.term(p), self.terms.term(o))

    def triple_set(self) -> frozenset[Triple]:
        return frozenset(self.triples())

    def _range(self, index: tuple[IdTriple, ...], prefix: tuple[int, ...]) -> tuple[int, int]:
        lo = bisect_left(index, prefix)
        hi = bisect_right(index, prefix + (_MAX,) * (3 - len(prefix)))
        return lo, hi

    def count(self, s: Optional[int], p: Optional[int], o: Optional[int]) -> int:
        """Cardinality of a pattern with bound positions given as term ids."""
        lo, hi = self._match_range(s, p, o)
        if lo is None:
            return sum(1 for _ in self.match(s, p, o))
        return hi - lo

    def _match_range(self, s, p, o):
        """(lo, hi) over the permutation that serves this binding shape, or
        (None, None) when a residual filter is required."""
        if s is not None and p is not None and o is not None:
            lo = bisect_left(self.spo, (s, p, o))
            hi = lo + 1 if lo < len(self.spo) and self.spo[lo] == (s, p, o) else lo
            return lo, hi
        if s is not None:
            if p is not None:
                return self._range(self.spo, (s, p))
            if o is None:
                return self._range(self.spo, (s,))
            return None, None  # s + o: osp range then filter, counted lazily
        if p is not None:
            if o is not None:
                return self._range(self.pos, (p, o))
            return self._range(self.pos, (p,))
        if o is not None:
            return self._range(self.osp, (o,))
        return 0, len(self.spo)

    def match(self, s: Optional[int], p: Optional[int], o: Optional[int]) -> Iterator[IdTriple]:
        """All id-triples matching the pattern (None = unbound), as (s, p, o)."""
        if s is not None and o is not None and p is None:
            lo, hi = self._range(self.osp, (o, s))
            for obj, subj, pred in self.osp[lo:hi]:
                yield subj, pred, obj
            return
        if s is not None:
            prefix = (s,) if p is None else (s, p)
            lo, hi = self._range(self.spo, prefix)
            for triple in self.spo[lo:hi]:
                if o is None or triple[2] == o:
                    yield triple
            return
        if p is not None:
            prefix = (p,) if o is None else (p, o)
            lo, hi = self._range(self.pos, prefix)
            for pred, obj, subj in self.pos[lo:hi]:
                yield subj, pred, obj
            return
        if o is not None:
            lo, hi = self._range(self.osp, (o,))
            for obj, subj, pred in self.osp[lo:hi]:
                yield subj, pred, obj
            return
        yield from self.spo


def _build_snapshot(terms: TermTable, id_triples: Iterable[IdTriple]) -> Snapshot:
    spo = tuple(sorted(set(id_triples)))
    pos = tuple(sorted((p, o, s) for s, p, o in spo))
    osp = tuple(sorted((o, s, p) for s, p, o in spo))
    return Snapshot(terms=terms, spo=spo, pos=pos, osp=osp)


class TripleStore:
    """Snapshot holder; all mutation goes through whole-snapshot swaps."""

    def __init__(self) -> None:
        self.terms = TermTable()
        self._snapshot = _build_snapshot(self.terms, ())
        self._lock = threading.Lock()

    def snapshot(self) -> Snapshot:
        return self._snapshot

    def intern_triple(self, triple: Triple) -> IdTriple:
        return (
            self.terms.intern(triple.subject),
            self.terms.intern(triple.predicate),
            self.terms.intern(triple.object),
        )

    def prepare_replacement(
        self, object_uri: str, new_triples: Iterable[Triple]
    ) -> tuple[IdTriple, ...]:
        """Intern the replacement triples for one object ahead of commit.

        Interning may allocate ids but never changes query results, so it is
        safe to run before the commit point.
        """
        return tuple(self.intern_triple(t) for t in new_triples)

    def commit_replacement(self, object_uri: str, prepared: tuple[IdTriple, ...]) -> None:
        """Swap in a snapshot where all triples under object_uri are replaced.

        "Under" means subject equal to the object URI or prefixed by it plus
        "/" (representation subjects). Infallible by construction: all terms
        are already interned.
        """
        prefix = object_uri + "/"
        with self._lock:
            old = self._snapshot
            kept = []
            for s, p, o in old.spo:
                term = old.terms.term(s)
                uri = getattr(term, "uri", None)
                if uri is not None and (uri == object_uri or uri.startswith(prefix)):
                    continue
                kept.append((s, p, o))
            kept.extend(prepared)
            self._snapshot = _build_snapshot(self.terms, kept)

    def replace_all(self, triples: Iterable[Triple]) -> None:
        id_triples = [self.intern_triple(t) for t in triples]
        with self._lock:
            self._snapshot = _build_snapshot(self.terms, id_triples)


def sort_key(triple: Triple) -> tuple[str, str, str]:
    return (render_term(triple.subject), render_term(triple.predicate), render_term(triple.object))
