"""Core digital object model: identifiers, components, versioning, validation.

Pure value types shared by every other module. Nothing here touches disk,
XML parsers, or HTTP.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from typing import Iterable, Mapping, Optional, Union
from xml.sax.saxutils import escape

from .errors import MalformedPath, MalformedPid, NoVersionAtTime

PID_PATTERN = re.compile(r"^([A-Za-z0-9.-]+):([A-Za-z0-9.~_-]+)$")
TOKEN_PATTERN = re.compile(r"^[A-Za-z0-9.~_-]+$")
MAX_PID_LENGTH = 64

OBJECT_TYPE = "FedoraObject"

# Datastream ids the repository controls or constrains.
RESERVED_DATASTREAM_IDS = frozenset({"DC", "RELS-EXT", "POLICY", "AUDIT"})

AUDIT_NS = "info:fedora/def:audit/"


@dataclass(frozen=True)
class Pid:
    """Persistent identifier, rendered "namespace:id"."""

    namespace: str
    id: str

    def __str__(self) -> str:
        return f"{self.namespace}:{self.id}"


def parse_pid(text: str) -> Pid:
    """Parse a PID string, enforcing the identifier grammar."""
    if len(text) > MAX_PID_LENGTH:
        raise MalformedPid(f"pid longer than {MAX_PID_LENGTH} characters: {text[:80]!r}")
    m = PID_PATTERN.match(text)
    if not m:
        raise MalformedPid(f"not a valid pid: {text!r}")
    return Pid(namespace=m.group(1), id=m.group(2))


@dataclass(frozen=True)
class ObjectUri:
    """An object or representation URI in the info scheme."""

    pid: Pid
    path: Optional[str] = None

    def __str__(self) -> str:
        base = f"info:fedora/{self.pid}"
        return base if self.path is None else f"{base}/{self.path}"


def to_object_uri(pid: Pid, path: Optional[str] = None) -> ObjectUri:
    """Build an info URI for an object or one of its representations.

    A one-segment path names a datastream; a two-segment path is a
    "bdef-pid/method" pair. The check is purely syntactic.
    """
    if path is not None:
        segments = path.split("/")
        if len(segments) == 1:
            if not TOKEN_PATTERN.match(segments[0]):
                raise MalformedPath(f"not a datastream id: {segments[0]!r}")
        elif len(segments) == 2:
            try:
                parse_pid(segments[0])
            except MalformedPid as exc:
                raise MalformedPath(f"not a bdef pid: {segments[0]!r}") from exc
            if not TOKEN_PATTERN.match(segments[1]):
                raise MalformedPath(f"not a method name: {segments[1]!r}")
        else:
            raise MalformedPath(f"too many path segments: {path!r}")
    return ObjectUri(pid=pid, path=path)


class State(Enum):
    ACTIVE = "A"
    INACTIVE = "I"
    DELETED = "D"

    @classmethod
    def from_code(cls, code: str) -> "State":
        try:
            return cls(code)
        except ValueError:
            raise ValueError(f"unknown state code: {code!r}") from None


class ControlGroup(Enum):
    MANAGED = "M"
    EXTERNAL = "E"
    REDIRECTED = "R"
    INLINE_XML = "X"

    @classmethod
    def from_code(cls, code: str) -> "ControlGroup":
        try:
            return cls(code)
        except ValueError:
            raise ValueError(f"unknown control group: {code!r}") from None


def parse_timestamp(text: str) -> datetime:
    """Parse an ISO-8601 timestamp into an aware UTC datetime (second precision).

    Accepts date-only form (midnight UTC), a trailing "Z", an explicit
    offset, or no zone at all (taken as UTC).
    """
    text = text.strip()
    if not text:
        raise ValueError("empty timestamp")
    normalized = text[:-1] + "+00:00" if text.endswith("Z") else text
    try:
        dt = datetime.fromisoformat(normalized)
    except ValueError:
        raise ValueError(f"not an ISO-8601 timestamp: {text!r}") from None
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.astimezone(timezone.utc).replace(microsecond=0)


def format_timestamp(dt: datetime) -> str:
    """Render a UTC timestamp as "YYYY-MM-DDTHH:MM:SSZ"."""
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.astimezone(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


@dataclass(frozen=True)
class ObjectProperties:
    """Key descriptive properties of a digital object.

    lastModifiedDate is intentionally not stored: it is derived as the
    maximum CREATED over all component versions and audit records (see
    derive_last_modified).
    """

    state: State
    label: str
    content_model: str
    created_date: datetime
    object_type: str = OBJECT_TYPE


@dataclass(frozen=True)
class DatastreamVersion:
    """One dated instantiation of a content item.

    Exactly one of internal_id, url, inline_xml is set; which one must
    agree with the owning datastream's control group.
    """

    version_id: str
    label: str
    created: datetime
    internal_id: Optional[str] = None
    url: Optional[str] = None
    inline_xml: Optional[bytes] = None

    def __post_init__(self) -> None:
        locations = [x for x in (self.internal_id, self.url, self.inline_xml) if x is not None]
        if len(locations) != 1:
            raise ValueError(f"version {self.version_id!r} needs exactly one location")


@dataclass(frozen=True)
class Datastream:
    id: str
    control_group: ControlGroup
    mime_type: str
    state: State
    versionable: bool
    versions: tuple[DatastreamVersion, ...]
    format_uri: Optional[str] = None


@dataclass(frozen=True)
class DisseminatorVersion:
    version_id: str
    bmech_pid: Pid
    label: str
    created: datetime
    # binding key -> (datastream id, binding label)
    bindings: tuple[tuple[str, tuple[str, str]], ...]

    def binding_map(self) -> dict[str, tuple[str, str]]:
        return dict(self.bindings)


@dataclass(frozen=True)
class Disseminator:
    id: str
    bdef_pid: Pid
    state: State
    versionable: bool
    versions: tuple[DisseminatorVersion, ...]


@dataclass(frozen=True)
class AuditRecord:
    """Who/what/when/why entry, auto-generated per mutating operation."""

    id: str
    process_type: str
    action: str
    component_id: str
    responsibility: str
    date: datetime
    justification: str = ""


@dataclass
class DigitalObject:
    pid: Pid
    properties: ObjectProperties
    datastreams: dict[str, Datastream] = field(default_factory=dict)
    disseminators: dict[str, Disseminator] = field(default_factory=dict)
    audit_trail: tuple[AuditRecord, ...] = ()

    def uri(self) -> str:
        return f"info:fedora/{self.pid}"


def version_suffix(version_id: str) -> int:
    """Numeric suffix of a "{componentId}.{n}" version id; -1 when malformed."""
    head, dot, tail = version_id.rpartition(".")
    if not dot or not tail.isdigit():
        return -1
    return int(tail)


def resolve_version(component, as_of: Optional[datetime] = None):
    """Return the version with the greatest created <= as_of (latest when absent).

    Works for datastreams and disseminators alike. Ties on created break by
    version-id suffix, latest wins.
    """
    versions = sorted(component.versions, key=lambda v: (v.created, version_suffix(v.version_id)))
    if not versions:
        raise NoVersionAtTime(f"{component.id} has no versions")
    if as_of is None:
        return versions[-1]
    candidates = [v for v in versions if v.created <= as_of]
    if not candidates:
        raise NoVersionAtTime(
            f"no version of {component.id} at {format_timestamp(as_of)}"
        )
    return candidates[-1]


def derive_last_modified(obj: DigitalObject) -> datetime:
    """Max CREATED over all component versions and audit records."""
    stamps = [obj.properties.created_date]
    for ds in obj.datastreams.values():
        stamps.extend(v.created for v in ds.versions)
    for diss in obj.disseminators.values():
        stamps.extend(v.created for v in diss.versions)
    stamps.extend(rec.date for rec in obj.audit_trail)
    return max(stamps)


def render_audit_trail(trail: Iterable[AuditRecord]) -> bytes:
    """Canonical XML fragment for the AUDIT datastream's inline content.

    The fragment is what sits between <xmlContent> and </xmlContent>; the
    surrounding newlines and indentation are part of the canonical bytes.
    """
    lines = [f'        <audit:auditTrail xmlns:audit="{AUDIT_NS}">']
    for rec in trail:
        lines.append(f'          <audit:record ID="{escape(rec.id)}">')
        lines.append(f'            <audit:process type="{escape(rec.process_type)}"/>')
        lines.append(f"            <audit:action>{escape(rec.action)}</audit:action>")
        lines.append(f"            <audit:componentID>{escape(rec.component_id)}</audit:componentID>")
        lines.append(
            f"            <audit:responsibility>{escape(rec.responsibility)}</audit:responsibility>"
        )
        lines.append(f"            <audit:date>{format_timestamp(rec.date)}</audit:date>")
        lines.append(
            f"            <audit:justification>{escape(rec.justification)}</audit:justification>"
        )
        lines.append("          </audit:record>")
    lines.append("        </audit:auditTrail>")
    return ("\n" + "\n".join(lines) + "\n      ").encode("utf-8")


def audit_datastream(trail: tuple[AuditRecord, ...]) -> Datastream:
    """The regenerated AUDIT datastream for a non-empty trail."""
    return Datastream(
        id="AUDIT",
        control_group=ControlGroup.MANAGED,
        mime_type="text/xml",
        state=State.ACTIVE,
        versionable=False,
        versions=(
            DatastreamVersion(
                version_id="AUDIT.0",
                label="Object Audit Trail",
                created=trail[0].date,
                inline_xml=render_audit_trail(trail),
            ),
        ),
    )


@dataclass(frozen=True)
class Violation:
    rule: str
    detail: str

    def __str__(self) -> str:
        return f"{self.rule}: {self.detail}"


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)

    def add(self, rule: str, detail: str) -> None:
        self.violations.append(Violation(rule, detail))

    def __bool__(self) -> bool:
        return bool(self.violations)

    def __str__(self) -> str:
        return "; ".join(str(v) for v in self.violations) or "ok"


def _check_versions(report: ValidationReport, owner: str, component) -> None:
    previous: Optional[datetime] = None
    seen_ids: set[str] = set()
    for v in component.versions:
        if not v.version_id.startswith(component.id + ".") or version_suffix(v.version_id) < 0:
            report.add("version id", f"{owner}: bad version id {v.version_id!r}")
        if v.version_id in seen_ids:
            report.add("version id", f"{owner}: duplicate version id {v.version_id!r}")
        seen_ids.add(v.version_id)
        if previous is not None and v.created <= previous:
            report.add("version order", f"{owner}: {v.version_id} not after previous version")
        previous = v.created
    if not component.versionable and len(component.versions) > 1:
        report.add("sole version", f"{owner}: versionable=false with {len(component.versions)} versions")


def validate_object(obj: DigitalObject) -> ValidationReport:
    """Check every model invariant; violations are report entries, not failures."""
    report = ValidationReport()

    if not PID_PATTERN.match(str(obj.pid)) or len(str(obj.pid)) > MAX_PID_LENGTH:
        report.add("pid grammar", f"invalid pid {obj.pid}")
    if obj.properties.object_type != OBJECT_TYPE:
        report.add("object type", f"objectType must be {OBJECT_TYPE!r}, got {obj.properties.object_type!r}")

    overlap = set(obj.datastreams) & set(obj.disseminators)
    if overlap:
        report.add("id disjoint", f"ids used by both datastreams and disseminators: {sorted(overlap)}")

    for ds_id, ds in obj.datastreams.items():
        name = f"datastream {ds_id}"
        if ds.id != ds_id:
            report.add("key mismatch", f"{name}: keyed as {ds_id!r} but id is {ds.id!r}")
        if not TOKEN_PATTERN.match(ds.id):
            report.add("component id", f"{name}: invalid id")
        if not ds.versions:
            report.add("version order", f"{name}: no versions")
            continue
        _check_versions(report, name, ds)
        for v in ds.versions:
            if v.internal_id is not None:
                expected = f"{obj.pid}:{ds.id}:{v.version_id}"
                if v.internal_id != expected:
                    report.add("internal id", f"{name}: {v.internal_id!r} != {expected!r}")
            if ds.id != "AUDIT" and not _location_matches_group(ds.control_group, v):
                report.add(
                    "location group",
                    f"{name}: {ds.control_group.value} version {v.version_id} has wrong location kind",
                )
        if ds.id in {"DC", "RELS-EXT", "POLICY"} and ds.control_group is not ControlGroup.INLINE_XML:
            report.add("reserved group", f"{name}: reserved datastream must be inline XML")

    for diss_id, diss in obj.disseminators.items():
        name = f"disseminator {diss_id}"
        if diss.id != diss_id:
            report.add("key mismatch", f"{name}: keyed as {diss_id!r} but id is {diss.id!r}")
        if not TOKEN_PATTERN.match(diss.id):
            report.add("component id", f"{name}: invalid id")
        if not diss.versions:
            report.add("version order", f"{name}: no versions")
            continue
        _check_versions(report, name, diss)
        for v in diss.versions:
            for key, (target_id, _label) in v.bindings:
                target = obj.datastreams.get(target_id)
                if target is None:
                    report.add("dangling binding", f"{name}: key {key!r} binds missing datastream {target_id!r}")
                elif target.versions and target.versions[0].created > v.created:
                    report.add(
                        "temporal binding",
                        f"{name}: key {key!r} binds {target_id!r} created after {v.version_id}",
                    )

    _check_audit(report, obj)
    return report


def _location_matches_group(group: ControlGroup, version: DatastreamVersion) -> bool:
    if group is ControlGroup.MANAGED:
        return version.internal_id is not None
    if group in (ControlGroup.EXTERNAL, ControlGroup.REDIRECTED):
        return version.url is not None
    return version.inline_xml is not None


def _check_audit(report: ValidationReport, obj: DigitalObject) -> None:
    previous: Optional[datetime] = None
    for n, rec in enumerate(obj.audit_trail, start=1):
        if rec.id != f"AUDREC{n}":
            report.add("audit sequence", f"record {n} has id {rec.id!r}")
        if previous is not None and rec.date < previous:
            report.add("audit order", f"{rec.id} dated before its predecessor")
        previous = rec.date

    audit_ds = obj.datastreams.get("AUDIT")
    if obj.audit_trail and audit_ds is None:
        report.add("audit content", "audit trail present but AUDIT datastream missing")
    if audit_ds is None:
        return
    if not obj.audit_trail:
        report.add("audit content", "AUDIT datastream present but audit trail empty")
        return
    if audit_ds.versionable or len(audit_ds.versions) != 1:
        report.add("audit shape", "AUDIT must be a single non-versionable version")
        return
    version = audit_ds.versions[0]
    if version.created != obj.audit_trail[0].date:
        report.add("audit shape", "AUDIT version date must equal the first record date")
    if version.inline_xml != render_audit_trail(obj.audit_trail):
        report.add("audit content", "AUDIT content does not match the audit trail")


def diff_objects(a: DigitalObject, b: DigitalObject) -> list[str]:
    """Field-by-field differences between two objects, for honest reporting."""
    diffs: list[str] = []
    if a.pid != b.pid:
        diffs.append(f"pid: {a.pid} != {b.pid}")
    if a.properties != b.properties:
        diffs.append(f"properties: {a.properties} != {b.properties}")
    for kind, left, right in (
        ("datastream", a.datastreams, b.datastreams),
        ("disseminator", a.disseminators, b.disseminators),
    ):
        for key in sorted(set(left) | set(right)):
            if key not in left:
                diffs.append(f"{kind} {key}: only in second object")
            elif key not in right:
                diffs.append(f"{kind} {key}: only in first object")
            elif left[key] != right[key]:
                diffs.append(f"{kind} {key}: differs")
    if a.audit_trail != b.audit_trail:
        diffs.append("audit trail differs")
    return diffs
