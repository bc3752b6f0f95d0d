"""Triple extraction and the embedded store.

The expected triple set for the golden demo:11 object is enumerated by hand
below, independently of the extraction code, and the extractor must
reproduce it exactly.
"""

import pytest

from foxrepo.errors import RdfSyntax, ReservedPredicate, SubjectRestriction
from foxrepo.foxml import parse_foxml
from foxrepo.model import Datastream, DatastreamVersion
from foxrepo.index.extract import extract_all, extract_relation_triples, extract_system_triples
from foxrepo.index.store import TripleStore, sort_key
from foxrepo.index.terms import (
    MODEL_NS,
    RDF_NS,
    REL_NS,
    VIEW_NS,
    XSD_NS,
    PlainLiteral,
    Resource,
    Triple,
    TypedLiteral,
)

XSD_DATETIME = XSD_NS + "dateTime"
OBJ = "info:fedora/demo:11"


def date(value: str) -> TypedLiteral:
    return TypedLiteral(value, XSD_DATETIME)


def expected_demo11_triples() -> set[Triple]:
    """Every triple the golden demo:11 object must contribute, written out
    longhand: 6 object triples, 3 per datastream (5 datastreams), 3 for
    the single ZPAN method, and 1 explicit relationship."""
    subject = Resource(OBJ)
    triples = {
        Triple(subject, Resource(RDF_NS + "type"), Resource(MODEL_NS + "FedoraObject")),
        Triple(subject, Resource(MODEL_NS + "state"), PlainLiteral("A")),
        Triple(subject, Resource(MODEL_NS + "label"), PlainLiteral("Image Object – UVA Pavilion")),
        Triple(subject, Resource(MODEL_NS + "contentModel"), PlainLiteral("UVA_STD_IMG")),
        Triple(subject, Resource(MODEL_NS + "createdDate"), date("2004-12-10T00:21:57Z")),
        Triple(subject, Resource(VIEW_NS + "lastModifiedDate"), date("2004-12-23T00:20:00Z")),
        Triple(subject, Resource(REL_NS + "isMemberOf"), Resource("info:fedora/demo:10")),
    }
    reps = {
        "THUMB": ("image/jpg", "2004-12-10T00:21:57Z"),
        "HIGH": ("image/jpeg", "2004-12-23T00:20:00Z"),
        "DC": ("text/xml", "2004-12-10T00:21:57Z"),
        "RELS-EXT": ("text/xml", "2004-12-10T00:21:57Z"),
        "AUDIT": ("text/xml", "2004-12-12T00:22:00Z"),
    }
    for ds_id, (mime, modified) in reps.items():
        rep = Resource(f"{OBJ}/{ds_id}")
        triples.add(Triple(subject, Resource(VIEW_NS + "disseminates"), rep))
        triples.add(Triple(rep, Resource(VIEW_NS + "lastModifiedDate"), date(modified)))
        triples.add(Triple(rep, Resource(VIEW_NS + "mimeType"), PlainLiteral(mime)))
    zpan = Resource(f"{OBJ}/BDEF:2/ZPAN")
    triples.add(Triple(subject, Resource(VIEW_NS + "disseminates"), zpan))
    triples.add(Triple(zpan, Resource(VIEW_NS + "disseminationType"), Resource("info:fedora/*/BDEF:2/ZPAN")))
    triples.add(Triple(zpan, Resource(VIEW_NS + "lastModifiedDate"), date("2004-12-23T00:20:00Z")))
    return triples


class TestExtraction:
    def test_golden_object_matches_hand_enumeration(self, demo_11_doc):
        obj = parse_foxml(demo_11_doc)
        actual = set(extract_all(obj, bdef_methods=lambda pid: ["ZPAN"] if pid == "BDEF:2" else None))
        expected = expected_demo11_triples()
        assert actual == expected
        assert len(actual) == 25

    def test_dangling_bdef_contributes_no_method_triples(self, demo_11_doc):
        obj = parse_foxml(demo_11_doc)
        triples = extract_system_triples(obj, bdef_methods=lambda pid: None)
        assert not [t for t in triples if "ZPAN" in getattr(t.object, "uri", "")]
        assert len(triples) == 21

    def test_relation_extraction_reads_rels_ext(self, demo_11_doc):
        obj = parse_foxml(demo_11_doc)
        relations = extract_relation_triples(obj)
        assert relations == [
            Triple(
                Resource(OBJ),
                Resource(REL_NS + "isMemberOf"),
                Resource("info:fedora/demo:10"),
            )
        ]

    def test_relation_subject_restriction(self, demo_11_doc):
        data = demo_11_doc.replace(
            b'rdf:about="info:fedora/demo:11"', b'rdf:about="info:fedora/other:1"'
        )
        obj = parse_foxml(data)
        with pytest.raises(SubjectRestriction):
            extract_relation_triples(obj)

    def test_reserved_predicate_rejected(self, demo_11_doc):
        data = demo_11_doc.replace(
            b"<fedora:isMemberOf rdf:resource=\"info:fedora/demo:10\"/>",
            b"<view:disseminates xmlns:view=\"info:fedora/fedora-system:def/view#\" rdf:resource=\"info:fedora/demo:10\"/>",
        )
        obj = parse_foxml(data)
        with pytest.raises(ReservedPredicate):
            extract_relation_triples(obj)

    def test_bad_rdf_rejected(self, demo_11_doc):
        obj = parse_foxml(demo_11_doc)
        rels = obj.datastreams["RELS-EXT"]
        broken = Datastream(
            id="RELS-EXT",
            control_group=rels.control_group,
            mime_type=rels.mime_type,
            state=rels.state,
            versionable=rels.versionable,
            versions=(
                DatastreamVersion(
                    "RELS-EXT.0", "r", rels.versions[0].created, inline_xml=b"<notrdf/>"
                ),
            ),
        )
        obj.datastreams["RELS-EXT"] = broken
        with pytest.raises(RdfSyntax):
            extract_relation_triples(obj)


class TestTripleStore:
    def fill(self, store: TripleStore, triples) -> None:
        store.replace_all(triples)

    def sample(self):
        a, b, c = Resource("info:fedora/a"), Resource("info:fedora/b"), Resource("info:fedora/c")
        p, q = Resource("http://p#1"), Resource("http://p#2")
        lit = PlainLiteral("hello")
        return [
            Triple(a, p, b),
            Triple(a, q, lit),
            Triple(b, p, c),
            Triple(Resource("info:fedora/a/DS"), q, lit),
        ]

    def ids(self, store, *terms):
        return tuple(store.terms.intern(t) for t in terms)

    def test_match_all_shapes(self):
        store = TripleStore()
        self.fill(store, self.sample())
        snap = store.snapshot()
        a, b, p, lit = self.ids(
            store,
            Resource("info:fedora/a"),
            Resource("info:fedora/b"),
            Resource("http://p#1"),
            PlainLiteral("hello"),
        )
        assert len(list(snap.match(None, None, None))) == 4
        assert len(list(snap.match(a, None, None))) == 2
        assert list(snap.match(a, p, None)) == [(a, p, b)]
        assert len(list(snap.match(None, p, None))) == 2
        assert len(list(snap.match(None, None, lit))) == 2
        assert list(snap.match(None, p, b)) == [(a, p, b)]
        assert list(snap.match(a, None, b)) == [(a, p, b)]
        assert list(snap.match(a, p, b)) == [(a, p, b)]
        assert list(snap.match(a, p, lit)) == []

    def test_count_agrees_with_match(self):
        store = TripleStore()
        self.fill(store, self.sample())
        snap = store.snapshot()
        a, b, p = self.ids(
            store, Resource("info:fedora/a"), Resource("info:fedora/b"), Resource("http://p#1")
        )
        for pattern in [(None, None, None), (a, None, None), (a, p, None), (None, p, None),
                        (None, p, b), (None, None, b), (a, None, b), (a, p, b)]:
            assert snap.count(*pattern) == len(list(snap.match(*pattern)))

    def test_replacement_drops_subject_subtree(self):
        store = TripleStore()
        self.fill(store, self.sample())
        prepared = store.prepare_replacement("info:fedora/a", [])
        before = store.snapshot().triple_set()
        store.commit_replacement("info:fedora/a", prepared)
        after = store.snapshot().triple_set()
        assert {t for t in before if getattr(t.subject, "uri", "").startswith("info:fedora/a")} != set()
        assert all(not getattr(t.subject, "uri", "").startswith("info:fedora/a") for t in after)
        # triples about other subjects survive
        assert Triple(Resource("info:fedora/b"), Resource("http://p#1"), Resource("info:fedora/c")) in after

    def test_replacement_does_not_clip_similar_prefixes(self):
        store = TripleStore()
        p = Resource("http://p#1")
        keep = Triple(Resource("info:fedora/ab"), p, PlainLiteral("x"))
        drop = Triple(Resource("info:fedora/a"), p, PlainLiteral("y"))
        self.fill(store, [keep, drop])
        store.commit_replacement("info:fedora/a", store.prepare_replacement("info:fedora/a", []))
        assert store.snapshot().triple_set() == {keep}

    def test_prepare_is_observation_free(self):
        store = TripleStore()
        self.fill(store, self.sample())
        before = store.snapshot()
        store.prepare_replacement("info:fedora/a", [Triple(Resource("info:fedora/zz"), Resource("http://p#9"), PlainLiteral("new"))])
        assert store.snapshot() is before
        assert store.snapshot().triple_set() == before.triple_set()

    def test_snapshot_isolation(self):
        store = TripleStore()
        self.fill(store, self.sample())
        snap = store.snapshot()
        store.replace_all([])
        assert len(snap) == 4
        assert len(store.snapshot()) == 0

    def test_duplicate_insert_is_idempotent(self):
        store = TripleStore()
        triples = self.sample()
        self.fill(store, triples + triples)
        assert len(store.snapshot()) == 4

    def test_sort_key_orders_by_rendered_terms(self):
        p = Resource("http://p#1")
        early = Triple(Resource("info:fedora/a"), p, PlainLiteral("x"))
        late = Triple(Resource("info:fedora/b"), p, PlainLiteral("a"))
        assert sorted([late, early], key=sort_key) == [early, late]
