"""Bit-faithful FOXML 1.0 parse and serialize.

Inline XML under <xmlContent> is captured as an exact byte range of the
input and re-emitted verbatim, so foreign markup and whitespace inside it
survive round-trips untouched. Everything outside xmlContent is re-emitted
in one canonical form (2-space indent, fixed attribute order), which makes
serialization a byte-for-byte fixpoint after a single pass.
"""

from __future__ import annotations

import re
import xml.etree.ElementTree as ET
from dataclasses import dataclass
from datetime import datetime
from typing import Optional
from xml.parsers import expat
from xml.sax.saxutils import escape

from .errors import InvariantViolation, NotFound, SchemaViolation, WrongControlGroup, XmlSyntax
from .model import (
    AUDIT_NS,
    AuditRecord,
    ControlGroup,
    Datastream,
    DatastreamVersion,
    DigitalObject,
    Disseminator,
    DisseminatorVersion,
    ObjectProperties,
    State,
    Violation,
    derive_last_modified,
    format_timestamp,
    parse_pid,
    parse_timestamp,
    render_audit_trail,
    resolve_version,
    validate_object,
)

FOXML_NS = "info:fedora/fedora-system:def/foxml#"
MODEL_NS = "info:fedora/fedora-system:def/model#"
VIEW_NS = "info:fedora/fedora-system:def/view#"
RDF_NS = "http://www.w3.org/1999/02/22-rdf-syntax-ns#"
XSI_NS = "http://www.w3.org/2001/XMLSchema-instance"
SCHEMA_LOCATION = f"{FOXML_NS} http://www.fedora.info/definitions/1/0/foxml1-0.xsd"

PROP_TYPE = RDF_NS + "type"
PROP_STATE = MODEL_NS + "state"
PROP_LABEL = MODEL_NS + "label"
PROP_CREATED = MODEL_NS + "createdDate"
PROP_MODIFIED = VIEW_NS + "lastModifiedDate"
PROP_CONTENT_MODEL = MODEL_NS + "contentModel"


def _q(local: str) -> str:
    return f"{{{FOXML_NS}}}{local}"


@dataclass(frozen=True)
class FoxmlDocument:
    raw: bytes
    object: DigitalObject


_ENCODING_RE = re.compile(rb"^<\?xml[^>]*encoding\s*=\s*['\"]([^'\"]+)['\"]")


def _check_encoding(data: bytes) -> None:
    m = _ENCODING_RE.match(data.lstrip())
    if m and m.group(1).decode("ascii", "replace").lower() not in ("utf-8", "us-ascii"):
        raise XmlSyntax(f"unsupported document encoding {m.group(1)!r}; use UTF-8")


def _end_of_start_tag(data: bytes, start: int) -> int:
    """Byte offset just past the '>' that closes the tag opened at start."""
    i = start
    quote = b""
    while i < len(data):
        c = data[i : i + 1]
        if quote:
            if c == quote:
                quote = b""
        elif c in (b'"', b"'"):
            quote = c
        elif c == b">":
            return i + 1
        i += 1
    raise XmlSyntax("unterminated start tag")


def _capture_inline_content(data: bytes) -> dict[tuple[str, str], bytes]:
    """Exact byte ranges of each datastream version's xmlContent.

    Keyed by (datastream id, version id). Only xmlContent elements at the
    digitalObject/datastream/datastreamVersion level are captured; anything
    nested deeper belongs to some captured fragment itself.
    """
    parser = expat.ParserCreate(namespace_separator=" ")
    stack: list[str] = []
    state = {"ds": "", "version": "", "capture_depth": -1, "capture_start": -1, "key": ("", "")}
    captured: dict[tuple[str, str], bytes] = {}

    ds_tag = f"{FOXML_NS} datastream"
    version_tag = f"{FOXML_NS} datastreamVersion"
    content_tag = f"{FOXML_NS} xmlContent"

    def on_start(name: str, attrs: dict[str, str]) -> None:
        depth = len(stack)
        if state["capture_depth"] < 0:
            if name == ds_tag and depth == 1:
                state["ds"] = attrs.get("ID", "")
            elif name == version_tag and depth == 2:
                state["version"] = attrs.get("ID", "")
            elif name == content_tag and depth == 3:
                state["capture_depth"] = depth
                state["capture_start"] = _end_of_start_tag(data, parser.CurrentByteIndex)
                state["key"] = (state["ds"], state["version"])
        stack.append(name)

    def on_end(name: str) -> None:
        stack.pop()
        if state["capture_depth"] == len(stack) and name == content_tag:
            end = parser.CurrentByteIndex
            start = state["capture_start"]
            captured[state["key"]] = data[start:end] if end > start else b""
            state["capture_depth"] = -1

    parser.StartElementHandler = on_start
    parser.EndElementHandler = on_end
    try:
        parser.Parse(data, True)
    except expat.ExpatError as exc:
        raise XmlSyntax(f"not well-formed XML: {exc}") from exc
    return captured


def _parse_bool(value: str, context: str) -> bool:
    if value == "true":
        return True
    if value == "false":
        return False
    raise SchemaViolation(f"{context}: boolean must be 'true' or 'false', got {value!r}")


def _parse_state(code: str, context: str) -> State:
    try:
        return State.from_code(code)
    except ValueError as exc:
        raise SchemaViolation(f"{context}: {exc}") from exc


def _require(attrs: ET.Element, name: str, context: str) -> str:
    value = attrs.get(name)
    if value is None:
        raise SchemaViolation(f"{context}: missing {name} attribute")
    return value


def _parse_created(element: ET.Element, context: str) -> datetime:
    raw = _require(element, "CREATED", context)
    try:
        return parse_timestamp(raw)
    except ValueError as exc:
        raise SchemaViolation(f"{context}: bad CREATED timestamp {raw!r}") from exc


def _parse_properties(element: ET.Element) -> tuple[ObjectProperties, Optional[datetime]]:
    seen: dict[str, str] = {}
    for prop in element:
        if prop.tag != _q("property"):
            raise SchemaViolation(f"unexpected element {prop.tag} in objectProperties")
        name = _require(prop, "NAME", "property")
        value = _require(prop, "VALUE", "property")
        if name in seen:
            raise SchemaViolation(f"duplicate object property {name}")
        if name not in (PROP_TYPE, PROP_STATE, PROP_LABEL, PROP_CREATED, PROP_MODIFIED, PROP_CONTENT_MODEL):
            raise SchemaViolation(f"unknown object property {name}")
        seen[name] = value
    for required in (PROP_TYPE, PROP_STATE, PROP_CREATED):
        if required not in seen:
            raise SchemaViolation(f"missing object property {required}")
    try:
        state = State.from_code(seen[PROP_STATE])
    except ValueError as exc:
        raise SchemaViolation(str(exc)) from exc
    try:
        created = parse_timestamp(seen[PROP_CREATED])
    except ValueError as exc:
        raise SchemaViolation(f"bad createdDate {seen[PROP_CREATED]!r}") from exc
    declared_modified: Optional[datetime] = None
    if PROP_MODIFIED in seen:
        try:
            declared_modified = parse_timestamp(seen[PROP_MODIFIED])
        except ValueError as exc:
            raise SchemaViolation(f"bad lastModifiedDate {seen[PROP_MODIFIED]!r}") from exc
    properties = ObjectProperties(
        state=state,
        label=seen.get(PROP_LABEL, ""),
        content_model=seen.get(PROP_CONTENT_MODEL, ""),
        created_date=created,
        object_type=seen[PROP_TYPE],
    )
    return properties, declared_modified


def _parse_datastream(
    element: ET.Element, captured: dict[tuple[str, str], bytes]
) -> Datastream:
    ds_id = _require(element, "ID", "datastream")
    context = f"datastream {ds_id}"
    try:
        group = ControlGroup.from_code(_require(element, "CONTROL_GROUP", context))
    except ValueError as exc:
        raise SchemaViolation(f"{context}: {exc}") from exc
    versions: list[DatastreamVersion] = []
    for child in element:
        if child.tag != _q("datastreamVersion"):
            raise SchemaViolation(f"{context}: unexpected element {child.tag}")
        version_id = _require(child, "ID", context)
        vctx = f"{context} version {version_id}"
        created = _parse_created(child, vctx)
        locations = list(child)
        if len(locations) != 1:
            raise SchemaViolation(f"{vctx}: needs exactly one contentLocation or xmlContent")
        location = locations[0]
        internal_id = url = inline = None
        if location.tag == _q("contentLocation"):
            ref = _require(location, "REF", vctx)
            loc_type = _require(location, "TYPE", vctx)
            if loc_type == "INTERNAL_ID":
                internal_id = ref
            elif loc_type == "URL":
                url = ref
            else:
                raise SchemaViolation(f"{vctx}: unknown location TYPE {loc_type!r}")
        elif location.tag == _q("xmlContent"):
            inline = captured.get((ds_id, version_id))
            if inline is None:
                raise SchemaViolation(f"{vctx}: xmlContent not captured")
        else:
            raise SchemaViolation(f"{vctx}: unexpected element {location.tag}")
        versions.append(
            DatastreamVersion(
                version_id=version_id,
                label=child.get("LABEL", ""),
                created=created,
                internal_id=internal_id,
                url=url,
                inline_xml=inline,
            )
        )
    if not versions:
        raise SchemaViolation(f"{context}: needs at least one version")
    return Datastream(
        id=ds_id,
        control_group=group,
        mime_type=element.get("MIMETYPE", ""),
        format_uri=element.get("FORMAT_URI"),
        state=_parse_state(element.get("STATE", "A"), context),
        versionable=_parse_bool(element.get("VERSIONABLE", "true"), context),
        versions=tuple(versions),
    )


def _parse_disseminator(element: ET.Element) -> Disseminator:
    diss_id = _require(element, "ID", "disseminator")
    context = f"disseminator {diss_id}"
    try:
        bdef_pid = parse_pid(_require(element, "BDEF_CONTRACT_PID", context))
    except Exception as exc:
        raise SchemaViolation(f"{context}: {exc}") from exc
    versions: list[DisseminatorVersion] = []
    for child in element:
        if child.tag != _q("disseminatorVersion"):
            raise SchemaViolation(f"{context}: unexpected element {child.tag}")
        version_id = _require(child, "ID", context)
        vctx = f"{context} version {version_id}"
        try:
            bmech_pid = parse_pid(_require(child, "BMECH_SERVICE_PID", vctx))
        except Exception as exc:
            raise SchemaViolation(f"{vctx}: {exc}") from exc
        bindings: list[tuple[str, tuple[str, str]]] = []
        maps = list(child)
        if len(maps) > 1 or (maps and maps[0].tag != _q("serviceInputMap")):
            raise SchemaViolation(f"{vctx}: expected at most one serviceInputMap")
        if maps:
            for binding in maps[0]:
                if binding.tag != _q("datastreamBinding"):
                    raise SchemaViolation(f"{vctx}: unexpected element {binding.tag}")
                key = _require(binding, "KEY", vctx)
                target = _require(binding, "DATASTREAM_ID", vctx)
                bindings.append((key, (target, binding.get("LABEL", ""))))
        versions.append(
            DisseminatorVersion(
                version_id=version_id,
                bmech_pid=bmech_pid,
                label=child.get("LABEL", ""),
                created=_parse_created(child, vctx),
                bindings=tuple(bindings),
            )
        )
    if not versions:
        raise SchemaViolation(f"{context}: needs at least one version")
    return Disseminator(
        id=diss_id,
        bdef_pid=bdef_pid,
        state=_parse_state(element.get("STATE", "A"), context),
        versionable=_parse_bool(element.get("VERSIONABLE", "true"), context),
        versions=tuple(versions),
    )


def parse_audit_trail(data: bytes) -> tuple[AuditRecord, ...]:
    try:
        root = ET.fromstring(data)
    except ET.ParseError as exc:
        raise SchemaViolation(f"AUDIT content is not well-formed XML: {exc}") from exc
    if root.tag != f"{{{AUDIT_NS}}}auditTrail":
        raise SchemaViolation(f"AUDIT root must be audit:auditTrail, got {root.tag}")
    records: list[AuditRecord] = []
    for rec in root:
        if rec.tag != f"{{{AUDIT_NS}}}record":
            raise SchemaViolation(f"unexpected element {rec.tag} in audit trail")
        fields = {"process": "", "action": "", "componentID": "", "responsibility": "", "date": "", "justification": ""}
        for child in rec:
            local = child.tag.rsplit("}", 1)[-1]
            if local == "process":
                fields["process"] = child.get("type", "")
            elif local in fields:
                fields[local] = child.text or ""
            else:
                raise SchemaViolation(f"unexpected audit field {child.tag}")
        try:
            date = parse_timestamp(fields["date"])
        except ValueError as exc:
            raise SchemaViolation(f"bad audit date {fields['date']!r}") from exc
        records.append(
            AuditRecord(
                id=rec.get("ID", ""),
                process_type=fields["process"],
                action=fields["action"].strip(),
                component_id=fields["componentID"].strip(),
                responsibility=fields["responsibility"].strip(),
                date=date,
                justification=fields["justification"],
            )
        )
    return tuple(records)


def parse_foxml(data: bytes, validate: bool = True) -> DigitalObject:
    """Parse FOXML bytes into a DigitalObject.

    With validate=False the structural checks still run but model
    invariants are left to the caller (used by ingest, which internalizes
    managed URL content before validating).
    """
    _check_encoding(data)
    try:
        root = ET.fromstring(data)
    except ET.ParseError as exc:
        raise XmlSyntax(f"not well-formed XML: {exc}") from exc
    if root.tag != _q("digitalObject"):
        raise SchemaViolation(f"root element must be foxml:digitalObject, got {root.tag}")
    pid_text = root.get("PID")
    if pid_text is None:
        raise SchemaViolation("digitalObject lacks a PID attribute")
    try:
        pid = parse_pid(pid_text)
    except Exception as exc:
        raise SchemaViolation(str(exc)) from exc

    captured = _capture_inline_content(data)

    properties: Optional[ObjectProperties] = None
    declared_modified: Optional[datetime] = None
    datastreams: dict[str, Datastream] = {}
    disseminators: dict[str, Disseminator] = {}
    phase = 0  # 0: properties, 1: datastreams, 2: disseminators
    for child in root:
        if child.tag == _q("objectProperties"):
            if phase != 0 or properties is not None:
                raise SchemaViolation("objectProperties must appear exactly once, first")
            properties, declared_modified = _parse_properties(child)
            phase = 1
        elif child.tag == _q("datastream"):
            if phase == 0:
                raise SchemaViolation("datastream before objectProperties")
            if phase == 2:
                raise SchemaViolation("datastream after a disseminator")
            ds = _parse_datastream(child, captured)
            if ds.id in datastreams:
                raise SchemaViolation(f"duplicate datastream id {ds.id}")
            datastreams[ds.id] = ds
        elif child.tag == _q("disseminator"):
            if phase == 0:
                raise SchemaViolation("disseminator before objectProperties")
            phase = 2
            diss = _parse_disseminator(child)
            if diss.id in disseminators:
                raise SchemaViolation(f"duplicate disseminator id {diss.id}")
            disseminators[diss.id] = diss
        else:
            raise SchemaViolation(f"unexpected element {child.tag}")
    if properties is None:
        raise SchemaViolation("document lacks objectProperties")

    audit_trail: tuple[AuditRecord, ...] = ()
    audit_ds = datastreams.get("AUDIT")
    if audit_ds is not None:
        latest = audit_ds.versions[-1]
        if latest.inline_xml is None:
            raise SchemaViolation("AUDIT content must be inline XML")
        audit_trail = parse_audit_trail(latest.inline_xml)
        # normalize stored bytes to the canonical regeneration so equality
        # of objects is plain field equality
        normalized = DatastreamVersion(
            version_id=latest.version_id,
            label=latest.label,
            created=latest.created,
            inline_xml=render_audit_trail(audit_trail),
        )
        datastreams["AUDIT"] = Datastream(
            id=audit_ds.id,
            control_group=audit_ds.control_group,
            mime_type=audit_ds.mime_type,
            format_uri=audit_ds.format_uri,
            state=audit_ds.state,
            versionable=audit_ds.versionable,
            versions=audit_ds.versions[:-1] + (normalized,),
        )

    obj = DigitalObject(
        pid=pid,
        properties=properties,
        datastreams=datastreams,
        disseminators=disseminators,
        audit_trail=audit_trail,
    )

    if validate:
        report = validate_object(obj)
        if declared_modified is not None and declared_modified != derive_last_modified(obj):
            report.violations.append(
                Violation(
                    "last modified",
                    f"declared {format_timestamp(declared_modified)} != derived "
                    f"{format_timestamp(derive_last_modified(obj))}",
                )
            )
        if report:
            raise InvariantViolation(str(report))
    return obj


def parse_document(data: bytes, validate: bool = True) -> FoxmlDocument:
    return FoxmlDocument(raw=data, object=parse_foxml(data, validate=validate))


def _attr(value: str) -> str:
    return escape(value, {'"': "&quot;"})


def _serialize_version(out: list[str], version: DatastreamVersion) -> None:
    out.append(
        f'    <foxml:datastreamVersion ID="{_attr(version.version_id)}" '
        f'LABEL="{_attr(version.label)}" CREATED="{format_timestamp(version.created)}">'
    )
    if version.internal_id is not None:
        out.append(
            f'      <foxml:contentLocation TYPE="INTERNAL_ID" REF="{_attr(version.internal_id)}"/>'
        )
    elif version.url is not None:
        out.append(f'      <foxml:contentLocation TYPE="URL" REF="{_attr(version.url)}"/>')
    else:
        inline = version.inline_xml.decode("utf-8")
        out.append(f"      <foxml:xmlContent>{inline}</foxml:xmlContent>")
    out.append("    </foxml:datastreamVersion>")


def serialize_foxml(obj: DigitalObject, validate: bool = True) -> bytes:
    """Canonical FOXML serialization of a valid object.

    The AUDIT datastream's content is regenerated from the audit trail (the
    trail is the source of truth); everything else is emitted as stored.
    """
    if validate:
        report = validate_object(obj)
        if report:
            raise InvariantViolation(str(report))

    props = obj.properties
    out: list[str] = ['<?xml version="1.0" encoding="UTF-8"?>']
    out.append(
        f'<foxml:digitalObject PID="{_attr(str(obj.pid))}" '
        f'xmlns:foxml="{FOXML_NS}" '
        f'xmlns:xsi="{XSI_NS}" '
        f'xsi:schemaLocation="{SCHEMA_LOCATION}">'
    )
    out.append("  <foxml:objectProperties>")
    for name, value in (
        (PROP_TYPE, props.object_type),
        (PROP_STATE, props.state.value),
        (PROP_LABEL, props.label),
        (PROP_CREATED, format_timestamp(props.created_date)),
        (PROP_MODIFIED, format_timestamp(derive_last_modified(obj))),
        (PROP_CONTENT_MODEL, props.content_model),
    ):
        out.append(f'    <foxml:property NAME="{name}" VALUE="{_attr(value)}"/>')
    out.append("  </foxml:objectProperties>")

    for ds in obj.datastreams.values():
        versions = ds.versions
        if ds.id == "AUDIT" and obj.audit_trail:
            regenerated = render_audit_trail(obj.audit_trail)
            versions = tuple(
                DatastreamVersion(
                    version_id=v.version_id,
                    label=v.label,
                    created=v.created,
                    inline_xml=regenerated,
                )
                for v in versions
            )
        format_attr = f' FORMAT_URI="{_attr(ds.format_uri)}"' if ds.format_uri is not None else ""
        out.append(
            f'  <foxml:datastream ID="{_attr(ds.id)}" CONTROL_GROUP="{ds.control_group.value}" '
            f'MIMETYPE="{_attr(ds.mime_type)}"{format_attr} STATE="{ds.state.value}" '
            f'VERSIONABLE="{"true" if ds.versionable else "false"}">'
        )
        for version in versions:
            _serialize_version(out, version)
        out.append("  </foxml:datastream>")

    for diss in obj.disseminators.values():
        out.append(
            f'  <foxml:disseminator ID="{_attr(diss.id)}" '
            f'BDEF_CONTRACT_PID="{_attr(str(diss.bdef_pid))}" STATE="{diss.state.value}" '
            f'VERSIONABLE="{"true" if diss.versionable else "false"}">'
        )
        for version in diss.versions:
            out.append(
                f'    <foxml:disseminatorVersion ID="{_attr(version.version_id)}" '
                f'BMECH_SERVICE_PID="{_attr(str(version.bmech_pid))}" '
                f'LABEL="{_attr(version.label)}" CREATED="{format_timestamp(version.created)}">'
            )
            if version.bindings:
                out.append("      <foxml:serviceInputMap>")
                for key, (target, label) in version.bindings:
                    out.append(
                        f'        <foxml:datastreamBinding KEY="{_attr(key)}" '
                        f'DATASTREAM_ID="{_attr(target)}" LABEL="{_attr(label)}"/>'
                    )
                out.append("      </foxml:serviceInputMap>")
            out.append("    </foxml:disseminatorVersion>")
        out.append("  </foxml:disseminator>")

    out.append("</foxml:digitalObject>")
    return ("\n".join(out) + "\n").encode("utf-8")


def extract_inline_xml(obj: DigitalObject, ds_id: str, as_of: Optional[datetime] = None) -> bytes:
    """Embedded XML fragment of the resolved version of an inline datastream."""
    ds = obj.datastreams.get(ds_id)
    if ds is None:
        raise NotFound(f"no datastream {ds_id} in {obj.pid}")
    if ds.control_group is not ControlGroup.INLINE_XML:
        raise WrongControlGroup(f"{ds_id} is {ds.control_group.value}, not inline XML")
    version = resolve_version(ds, as_of)
    assert version.inline_xml is not None
    return version.inline_xml
