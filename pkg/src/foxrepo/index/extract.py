"""Derivation of the Resource Index graph from a digital object.

Two sources: the RELS-EXT datastream (explicit statements, restricted
RDF/XML) and the object structure itself (system-ontology triples).
"""

from __future__ import annotations

import xml.etree.ElementTree as ET
from typing import Callable, Iterable, Optional

from ..errors import RdfSyntax, ReservedPredicate, SubjectRestriction
from ..model import DigitalObject, format_timestamp, parse_timestamp, resolve_version
from .terms import (
    MODEL_NS,
    RDF_NS,
    VIEW_NS,
    XSD_DATETIME,
    PlainLiteral,
    Resource,
    Term,
    Triple,
    TypedLiteral,
)

RDF_TAG = f"{{{RDF_NS}}}RDF"
DESCRIPTION_TAG = f"{{{RDF_NS}}}Description"
ABOUT_ATTR = f"{{{RDF_NS}}}about"
RESOURCE_ATTR = f"{{{RDF_NS}}}resource"
DATATYPE_ATTR = f"{{{RDF_NS}}}datatype"

# Extraction needs method names from another object's contract; callers pass
# a lookup so this module stays independent of storage.
BdefMethods = Callable[[str], Optional[list[str]]]


def _normalize_object_term(value: str, datatype: Optional[str]) -> Term:
    if datatype is None:
        return PlainLiteral(value)
    if datatype == XSD_DATETIME:
        try:
            value = format_timestamp(parse_timestamp(value))
        except ValueError as exc:
            raise RdfSyntax(f"bad xsd:dateTime literal {value!r}") from exc
    return TypedLiteral(value, datatype)


def extract_relation_triples(obj: DigitalObject) -> list[Triple]:
    """Triples explicitly asserted in RELS-EXT.

    Every statement's subject must be the owning object's URI, and
    predicates may not come from the reserved model/view namespaces.
    """
    rels = obj.datastreams.get("RELS-EXT")
    if rels is None:
        return []
    version = resolve_version(rels)
    if version.inline_xml is None:
        raise RdfSyntax("RELS-EXT content is not inline XML")
    try:
        root = ET.fromstring(version.inline_xml)
    except ET.ParseError as exc:
        raise RdfSyntax(f"RELS-EXT is not well-formed XML: {exc}") from exc
    if root.tag != RDF_TAG:
        raise RdfSyntax(f"RELS-EXT root must be rdf:RDF, got {root.tag}")

    subject = Resource(obj.uri())
    triples: list[Triple] = []
    for description in root:
        if description.tag != DESCRIPTION_TAG:
            raise RdfSyntax(f"expected rdf:Description, got {description.tag}")
        about = description.get(ABOUT_ATTR)
        if about is None:
            raise RdfSyntax("rdf:Description lacks rdf:about")
        if about.strip() != subject.uri:
            raise SubjectRestriction(
                f"statement subject {about.strip()!r} is not {subject.uri!r}"
            )
        for prop in description:
            if not prop.tag.startswith("{"):
                raise RdfSyntax(f"property {prop.tag!r} has no namespace")
            namespace, local = prop.tag[1:].split("}", 1)
            if namespace in (MODEL_NS, VIEW_NS):
                raise ReservedPredicate(f"{namespace}{local} is system-reserved")
            predicate = Resource(namespace + local)
            resource_ref = prop.get(RESOURCE_ATTR)
            if resource_ref is not None:
                triples.append(Triple(subject, predicate, Resource(resource_ref.strip())))
                continue
            if len(prop) > 0:
                raise RdfSyntax(f"nested content under {predicate.uri} is not supported")
            value = prop.text or ""
            obj_term = _normalize_object_term(value, prop.get(DATATYPE_ATTR))
            triples.append(Triple(subject, predicate, obj_term))
    return triples


def _date_literal(dt) -> TypedLiteral:
    return TypedLiteral(format_timestamp(dt), XSD_DATETIME)


def extract_system_triples(
    obj: DigitalObject, bdef_methods: Optional[BdefMethods] = None
) -> list[Triple]:
    """Triples derived from the object structure per the fixed table:

    - object: rdf:type, state, label, contentModel, createdDate,
      lastModifiedDate;
    - per datastream D: disseminates obj/D, plus lastModifiedDate and
      mimeType on obj/D;
    - per method m of a disseminator's BDef B: disseminates obj/B/m, plus
      disseminationType (wildcard form) and lastModifiedDate on obj/B/m.

    Methods of a BDef that is absent (dangling reference) contribute
    nothing until the BDef appears.
    """
    from ..model import derive_last_modified

    subject = Resource(obj.uri())
    props = obj.properties
    triples: list[Triple] = [
        Triple(subject, Resource(RDF_NS + "type"), Resource(MODEL_NS + "FedoraObject")),
        Triple(subject, Resource(MODEL_NS + "state"), PlainLiteral(props.state.value)),
        Triple(subject, Resource(MODEL_NS + "label"), PlainLiteral(props.label)),
        Triple(subject, Resource(MODEL_NS + "contentModel"), PlainLiteral(props.content_model)),
        Triple(subject, Resource(MODEL_NS + "createdDate"), _date_literal(props.created_date)),
        Triple(
            subject,
            Resource(VIEW_NS + "lastModifiedDate"),
            _date_literal(derive_last_modified(obj)),
        ),
    ]

    disseminates = Resource(VIEW_NS + "disseminates")
    rep_modified = Resource(VIEW_NS + "lastModifiedDate")
    for ds in obj.datastreams.values():
        rep = Resource(f"{subject.uri}/{ds.id}")
        latest = max(v.created for v in ds.versions)
        triples.append(Triple(subject, disseminates, rep))
        triples.append(Triple(rep, rep_modified, _date_literal(latest)))
        triples.append(Triple(rep, Resource(VIEW_NS + "mimeType"), PlainLiteral(ds.mime_type)))

    for diss in obj.disseminators.values():
        methods = bdef_methods(str(diss.bdef_pid)) if bdef_methods else None
        if not methods:
            continue
        latest_version = max(diss.versions, key=lambda v: v.created)
        stamps = [latest_version.created]
        for _key, (ds_id, _label) in latest_version.bindings:
            bound = obj.datastreams.get(ds_id)
            if bound is not None:
                stamps.extend(v.created for v in bound.versions)
        modified = max(stamps)
        for method in methods:
            rep = Resource(f"{subject.uri}/{diss.bdef_pid}/{method}")
            triples.append(Triple(subject, disseminates, rep))
            triples.append(
                Triple(
                    rep,
                    Resource(VIEW_NS + "disseminationType"),
                    Resource(f"info:fedora/*/{diss.bdef_pid}/{method}"),
                )
            )
            triples.append(Triple(rep, rep_modified, _date_literal(modified)))
    return triples


def extract_all(obj: DigitalObject, bdef_methods: Optional[BdefMethods] = None) -> list[Triple]:
    return extract_relation_triples(obj) + extract_system_triples(obj, bdef_methods)
