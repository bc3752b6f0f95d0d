"""Durable object registry, managed-content store, and mutation semantics.

Layout under the root directory: one canonical FOXML file per object in
objects/ (filename is the percent-encoded PID) and one flat file per
managed content version in content/ (filename is the percent-encoded
internal id).

Every mutating operation follows the same commit protocol inside a
per-object critical section:

  begin -> prepare (build + validate the new object, pure)
        -> stage   (write content files and the temp FOXML file)
        -> precommit
        -> os.replace of the FOXML file   <- the commit point
        -> swap in-memory object and index snapshot (infallible)
        -> garbage-collect unreferenced content files

A failure anywhere before the commit point removes the staged files and
leaves every observable surface (export bytes, reachable content, index
triples) untouched. The fault_hook attribute, called as hook(op, step) at
the named steps, exists so tests can abort operations mid-flight.
"""

from __future__ import annotations

import fnmatch
import os
import threading
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field, replace
from datetime import datetime, timedelta, timezone
from pathlib import Path
from typing import Callable, Iterable, Optional, Union
from urllib.parse import quote
from xml.sax.saxutils import escape

import httpx

from . import dissemination
from .errors import (
    BoundDatastream,
    DuplicateComponent,
    DuplicatePid,
    ImmutableProperty,
    InvariantViolation,
    MissingDependency,
    NotFound,
    QuerySyntax,
    RepositoryError,
    ReservedId,
    SchemaViolation,
    UpstreamBadStatus,
    UpstreamFetchFailed,
    WrongControlGroup,
    XmlSyntax,
)
from .foxml import parse_foxml, serialize_foxml
from .index.extract import extract_all
from .index.store import TripleStore
from .model import (
    TOKEN_PATTERN,
    AuditRecord,
    ControlGroup,
    Datastream,
    DatastreamVersion,
    DigitalObject,
    Disseminator,
    DisseminatorVersion,
    ObjectProperties,
    Pid,
    State,
    derive_last_modified,
    format_timestamp,
    audit_datastream,
    parse_pid,
    parse_timestamp,
    resolve_version,
    validate_object,
    version_suffix,
)

Clock = Callable[[], datetime]
FaultHook = Callable[[str, str], None]
Fetcher = Callable[[str], tuple[int, str, bytes]]

PROCESS_TYPE = "Fedora API-M"
DEFAULT_FETCH_TIMEOUT = 10.0


def default_clock() -> datetime:
    return datetime.now(timezone.utc).replace(microsecond=0)


def make_httpx_fetcher(timeout: float = DEFAULT_FETCH_TIMEOUT) -> Fetcher:
    def fetch(url: str) -> tuple[int, str, bytes]:
        try:
            response = httpx.get(url, timeout=timeout, follow_redirects=True)
        except httpx.HTTPError as exc:
            raise UpstreamFetchFailed(f"GET {url} failed: {exc}") from exc
        return response.status_code, response.headers.get("content-type", ""), response.content

    return fetch


@dataclass(frozen=True)
class Redirect:
    """Marker result for Redirected datastreams: the caller should 302."""

    url: str


@dataclass(frozen=True)
class ChangeResult:
    pid: Pid
    component_id: str
    new_version_id: Optional[str]
    audit_record_id: str
    timestamp: datetime


@dataclass
class RebuildStats:
    objects: int = 0
    triples: int = 0
    failures: list[tuple[str, str]] = field(default_factory=list)


def _pid_text(pid: Union[Pid, str]) -> str:
    if isinstance(pid, Pid):
        return str(pid)
    return str(parse_pid(pid))


def _normalize_bindings(bindings) -> tuple[tuple[str, tuple[str, str]], ...]:
    """Accept {key: dsId} or [(key, dsId, label)] and normalize."""
    if bindings is None:
        return ()
    if isinstance(bindings, dict):
        return tuple((key, (ds_id, "")) for key, ds_id in bindings.items())
    normalized = []
    for entry in bindings:
        if len(entry) == 3:
            key, ds_id, label = entry
        else:
            key, ds_id = entry
            label = ""
        normalized.append((key, (ds_id, label)))
    return tuple(normalized)


class Repository:
    """The registry plus content store, loaded whole into memory at start.

    fetcher: url -> (status, content-type, body); injectable for tests.
    fault_hook: called as hook(operation, step); a raise aborts the write.
    """

    def __init__(
        self,
        root: Union[str, Path],
        base_url: str = "http://localhost:8080/fedora",
        clock: Optional[Clock] = None,
        fetcher: Optional[Fetcher] = None,
        fetch_timeout: float = DEFAULT_FETCH_TIMEOUT,
    ) -> None:
        self.root = Path(root)
        self.objects_dir = self.root / "objects"
        self.content_dir = self.root / "content"
        self.objects_dir.mkdir(parents=True, exist_ok=True)
        self.content_dir.mkdir(parents=True, exist_ok=True)
        self.base_url = base_url.rstrip("/")
        self.clock: Clock = clock or default_clock
        self.fetcher: Fetcher = fetcher or make_httpx_fetcher(fetch_timeout)
        self.fault_hook: Optional[FaultHook] = None
        self.objects: dict[str, DigitalObject] = {}
        self.index = TripleStore()
        self.load_errors: list[tuple[str, str]] = []
        self._locks: dict[str, threading.RLock] = {}
        self._locks_guard = threading.Lock()
        self._load()

    # -- paths and registry plumbing --------------------------------------

    def _object_path(self, pid_text: str) -> Path:
        return self.objects_dir / (quote(pid_text, safe="") + ".xml")

    def _content_path(self, internal_id: str) -> Path:
        return self.content_dir / quote(internal_id, safe="")

    def _lock_for(self, pid_text: str) -> threading.RLock:
        with self._locks_guard:
            lock = self._locks.get(pid_text)
            if lock is None:
                lock = self._locks[pid_text] = threading.RLock()
            return lock

    def _load(self) -> None:
        for path in sorted(self.objects_dir.glob("*.xml")):
            try:
                obj = parse_foxml(path.read_bytes())
            except RepositoryError as exc:
                self.load_errors.append((path.name, f"{exc.code}: {exc.message}"))
                continue
            self.objects[str(obj.pid)] = obj
        self._rebuild_from_memory()

    def _lookup(self, pid_text: str) -> Optional[DigitalObject]:
        return self.objects.get(pid_text)

    def _method_lookup(self, extra: Optional[DigitalObject] = None):
        def lookup(pid_text: str) -> Optional[list[str]]:
            if extra is not None and str(extra.pid) == pid_text:
                obj: Optional[DigitalObject] = extra
            else:
                obj = self.objects.get(pid_text)
            return dissemination.contract_method_names(obj) if obj is not None else None

        return lookup

    def _extract(self, obj: DigitalObject, extra: Optional[DigitalObject] = None):
        try:
            return extract_all(obj, self._method_lookup(extra))
        except RepositoryError as exc:
            raise InvariantViolation(f"relationship extraction failed: {exc.message}") from exc

    def _rebuild_from_memory(self) -> None:
        triples = []
        for pid_text in sorted(self.objects):
            triples.extend(self._extract(self.objects[pid_text]))
        self.index.replace_all(triples)

    def _get(self, pid: Union[Pid, str]) -> DigitalObject:
        pid_text = _pid_text(pid)
        obj = self.objects.get(pid_text)
        if obj is None:
            raise NotFound(f"no object {pid_text}")
        return obj

    def get_object(self, pid: Union[Pid, str]) -> DigitalObject:
        return self._get(pid)

    def _fault(self, op: str, step: str) -> None:
        hook = self.fault_hook
        if hook is not None:
            hook(op, step)

    def _effective_time(self, obj: Optional[DigitalObject]) -> datetime:
        now = self.clock()
        if now.tzinfo is None:
            now = now.replace(tzinfo=timezone.utc)
        now = now.astimezone(timezone.utc).replace(microsecond=0)
        if obj is not None:
            latest = derive_last_modified(obj)
            if now <= latest:
                # keep version timestamps strictly increasing even under a
                # stopped or lagging clock
                now = latest + timedelta(seconds=1)
        return now

    @staticmethod
    def _referenced(obj: Optional[DigitalObject]) -> set[str]:
        if obj is None:
            return set()
        return {
            v.internal_id
            for ds in obj.datastreams.values()
            for v in ds.versions
            if v.internal_id is not None
        }

    def reachable_content_ids(self) -> set[str]:
        ids: set[str] = set()
        for obj in self.objects.values():
            ids |= self._referenced(obj)
        return ids

    # -- commit protocol ---------------------------------------------------

    def _commit(
        self,
        op: str,
        pid_text: str,
        new_obj: Optional[DigitalObject],
        staged: dict[str, bytes],
        old_obj: Optional[DigitalObject],
    ) -> None:
        self._fault(op, "prepared")
        uri = f"info:fedora/{pid_text}"
        if new_obj is not None:
            triples = self._extract(new_obj, extra=new_obj)
            prepared = self.index.prepare_replacement(uri, triples)
            xml = serialize_foxml(new_obj)
        else:
            prepared = ()
            xml = None

        path = self._object_path(pid_text)
        tmp = path.with_name(path.name + ".tmp")
        written: list[Path] = []
        try:
            for internal_id, data in staged.items():
                content_path = self._content_path(internal_id)
                content_path.write_bytes(data)
                written.append(content_path)
            self._fault(op, "staged")
            if xml is not None:
                tmp.write_bytes(xml)
            self._fault(op, "precommit")
        except BaseException:
            for written_path in written:
                written_path.unlink(missing_ok=True)
            tmp.unlink(missing_ok=True)
            raise

        # commit point: a single filesystem rename (or removal)
        if new_obj is not None:
            os.replace(tmp, path)
            self.objects[pid_text] = new_obj
        else:
            path.unlink()
            self.objects.pop(pid_text, None)
        self.index.commit_replacement(uri, prepared)

        for internal_id in self._referenced(old_obj) - self._referenced(new_obj):
            self._content_path(internal_id).unlink(missing_ok=True)

    def _resync_dependents(self, touched_pid: str) -> None:
        """Refresh index triples of objects whose method list hangs off the
        touched object (their disseminators name it as behavior definition)."""
        for pid_text, obj in list(self.objects.items()):
            if pid_text == touched_pid:
                continue
            if any(str(d.bdef_pid) == touched_pid for d in obj.disseminators.values()):
                self.sync_index(pid_text)

    def sync_index(self, pid: Union[Pid, str]) -> int:
        pid_text = _pid_text(pid)
        obj = self._get(pid_text)
        uri = f"info:fedora/{pid_text}"
        triples = self._extract(obj)
        self.index.commit_replacement(uri, self.index.prepare_replacement(uri, triples))
        return len(triples)

    # -- content staging and fetch ------------------------------------------

    def stage_content(self, internal_id: str, data: bytes) -> None:
        """Pre-place managed bytes so an ingest can reference them."""
        path = self._content_path(internal_id)
        tmp = path.with_name(path.name + ".tmp")
        tmp.write_bytes(data)
        os.replace(tmp, path)

    def _fetch_ok(self, url: str) -> bytes:
        status, _content_type, body = self.fetcher(url)
        if not 200 <= status < 300:
            raise UpstreamBadStatus(f"GET {url} returned {status}")
        return body

    # -- object-level operations ---------------------------------------------

    def ingest(self, xml: bytes, principal: str) -> Pid:
        obj = parse_foxml(xml, validate=False)
        pid_text = str(obj.pid)
        with self._lock_for(pid_text):
            self._fault("ingest", "begin")
            if pid_text in self.objects:
                raise DuplicatePid(f"{pid_text} already exists")
            staged: dict[str, bytes] = {}
            datastreams: dict[str, Datastream] = {}
            for ds in obj.datastreams.values():
                if ds.control_group is ControlGroup.MANAGED and ds.id != "AUDIT":
                    versions = []
                    for v in ds.versions:
                        internal = f"{pid_text}:{ds.id}:{v.version_id}"
                        if v.url is not None:
                            # internalize: fetch once, then owned forever
                            staged[internal] = self._fetch_ok(v.url)
                            v = DatastreamVersion(
                                version_id=v.version_id,
                                label=v.label,
                                created=v.created,
                                internal_id=internal,
                            )
                        elif v.internal_id is not None:
                            if v.internal_id not in staged and not self._content_path(v.internal_id).exists():
                                staged[v.internal_id] = b""
                        versions.append(v)
                    ds = replace(ds, versions=tuple(versions))
                datastreams[ds.id] = ds
            if "DC" not in datastreams:
                datastreams["DC"] = _synthesize_dc(obj)
            new_obj = DigitalObject(
                pid=obj.pid,
                properties=obj.properties,
                datastreams=datastreams,
                disseminators=dict(obj.disseminators),
                audit_trail=obj.audit_trail,
            )
            report = validate_object(new_obj)
            if report:
                raise InvariantViolation(str(report))
            self._commit("ingest", pid_text, new_obj, staged, old_obj=None)
        self._resync_dependents(pid_text)
        return obj.pid

    def export(self, pid: Union[Pid, str]) -> bytes:
        return serialize_foxml(self._get(pid))

    def purge_object(self, pid: Union[Pid, str], principal: str) -> None:
        pid_text = _pid_text(pid)
        with self._lock_for(pid_text):
            self._fault("purgeObject", "begin")
            old = self._get(pid_text)
            self._commit("purgeObject", pid_text, None, {}, old_obj=old)
        self._resync_dependents(pid_text)

    # -- shared mutation plumbing ---------------------------------------------

    def _append_audit(
        self,
        obj: DigitalObject,
        action: str,
        component_id: str,
        principal: str,
        justification: str,
        ts: datetime,
    ) -> tuple[AuditRecord, tuple[AuditRecord, ...]]:
        record = AuditRecord(
            id=f"AUDREC{len(obj.audit_trail) + 1}",
            process_type=PROCESS_TYPE,
            action=action,
            component_id=component_id,
            responsibility=principal,
            date=ts,
            justification=justification or "",
        )
        return record, obj.audit_trail + (record,)

    def _assemble(
        self,
        obj: DigitalObject,
        trail: tuple[AuditRecord, ...],
        properties: Optional[ObjectProperties] = None,
        datastreams: Optional[dict[str, Datastream]] = None,
        disseminators: Optional[dict[str, Disseminator]] = None,
    ) -> DigitalObject:
        new_datastreams = dict(obj.datastreams if datastreams is None else datastreams)
        new_datastreams["AUDIT"] = audit_datastream(trail)
        new_obj = DigitalObject(
            pid=obj.pid,
            properties=obj.properties if properties is None else properties,
            datastreams=new_datastreams,
            disseminators=dict(obj.disseminators if disseminators is None else disseminators),
            audit_trail=trail,
        )
        report = validate_object(new_obj)
        if report:
            raise InvariantViolation(str(report))
        return new_obj

    def _build_version(
        self,
        pid_text: str,
        ds_id: str,
        group: ControlGroup,
        version_id: str,
        label: str,
        ts: datetime,
        content: Optional[bytes],
        url: Optional[str],
        inline_xml: Optional[bytes],
    ) -> tuple[DatastreamVersion, dict[str, bytes]]:
        if group is ControlGroup.MANAGED:
            if inline_xml is not None:
                raise WrongControlGroup("managed content cannot be inline XML")
            if content is None and url is not None:
                content = self._fetch_ok(url)
            if content is None:
                raise SchemaViolation(f"{ds_id}: managed datastream needs content bytes or a source url")
            internal = f"{pid_text}:{ds_id}:{version_id}"
            version = DatastreamVersion(
                version_id=version_id, label=label, created=ts, internal_id=internal
            )
            return version, {internal: content}
        if group in (ControlGroup.EXTERNAL, ControlGroup.REDIRECTED):
            if url is None:
                raise SchemaViolation(f"{ds_id}: control group {group.value} needs a url")
            if content is not None or inline_xml is not None:
                raise WrongControlGroup(f"{ds_id}: control group {group.value} takes a url, not content")
            return DatastreamVersion(version_id=version_id, label=label, created=ts, url=url), {}
        data = inline_xml if inline_xml is not None else content
        if data is None:
            raise SchemaViolation(f"{ds_id}: inline datastream needs XML content")
        _check_fragment(data)
        return DatastreamVersion(version_id=version_id, label=label, created=ts, inline_xml=data), {}

    # -- datastream operations ---------------------------------------------

    def add_datastream(
        self,
        pid: Union[Pid, str],
        ds_id: str,
        control_group: Union[ControlGroup, str],
        mime_type: str,
        principal: str,
        content: Optional[bytes] = None,
        url: Optional[str] = None,
        inline_xml: Optional[bytes] = None,
        label: str = "",
        versionable: bool = True,
        state: State = State.ACTIVE,
        format_uri: Optional[str] = None,
        justification: str = "",
    ) -> ChangeResult:
        pid_text = _pid_text(pid)
        group = ControlGroup.from_code(control_group) if isinstance(control_group, str) else control_group
        with self._lock_for(pid_text):
            self._fault("addDatastream", "begin")
            obj = self._get(pid_text)
            if ds_id == "AUDIT":
                raise ReservedId("AUDIT is system-controlled")
            if not TOKEN_PATTERN.match(ds_id):
                raise SchemaViolation(f"invalid datastream id {ds_id!r}")
            if ds_id in obj.datastreams or ds_id in obj.disseminators:
                raise DuplicateComponent(f"{pid_text} already has a component {ds_id}")
            ts = self._effective_time(obj)
            version_id = f"{ds_id}.0"
            version, staged = self._build_version(
                pid_text, ds_id, group, version_id, label, ts, content, url, inline_xml
            )
            datastreams = dict(obj.datastreams)
            datastreams[ds_id] = Datastream(
                id=ds_id,
                control_group=group,
                mime_type=mime_type,
                state=state,
                versionable=versionable,
                versions=(version,),
                format_uri=format_uri,
            )
            record, trail = self._append_audit(obj, "addDatastream", ds_id, principal, justification, ts)
            new_obj = self._assemble(obj, trail, datastreams=datastreams)
            self._commit("addDatastream", pid_text, new_obj, staged, old_obj=obj)
        self._resync_dependents(pid_text)
        return ChangeResult(obj.pid, ds_id, version_id, record.id, ts)

    def modify_datastream(
        self,
        pid: Union[Pid, str],
        ds_id: str,
        principal: str,
        content: Optional[bytes] = None,
        url: Optional[str] = None,
        inline_xml: Optional[bytes] = None,
        label: Optional[str] = None,
        justification: str = "",
    ) -> ChangeResult:
        pid_text = _pid_text(pid)
        action = "modifyDatastreamByRef" if url is not None else "modifyDatastreamByValue"
        with self._lock_for(pid_text):
            self._fault(action, "begin")
            obj = self._get(pid_text)
            if ds_id == "AUDIT":
                raise ReservedId("AUDIT is system-controlled")
            ds = obj.datastreams.get(ds_id)
            if ds is None:
                raise NotFound(f"no datastream {ds_id} in {pid_text}")
            ts = self._effective_time(obj)
            latest = resolve_version(ds)
            suffix = max(version_suffix(v.version_id) for v in ds.versions) + 1
            version_id = f"{ds_id}.{suffix}"
            if content is None and url is None and inline_xml is None:
                # metadata-only change: carry the previous content forward
                if latest.internal_id is not None:
                    content = self._content_path(latest.internal_id).read_bytes()
                elif latest.url is not None:
                    url = latest.url
                    action = "modifyDatastreamByValue"
                else:
                    inline_xml = latest.inline_xml
            version, staged = self._build_version(
                pid_text,
                ds_id,
                ds.control_group,
                version_id,
                latest.label if label is None else label,
                ts,
                content,
                url,
                inline_xml,
            )
            versions = ds.versions + (version,) if ds.versionable else (version,)
            datastreams = dict(obj.datastreams)
            datastreams[ds_id] = replace(ds, versions=versions)
            record, trail = self._append_audit(obj, action, ds_id, principal, justification, ts)
            new_obj = self._assemble(obj, trail, datastreams=datastreams)
            self._commit(action, pid_text, new_obj, staged, old_obj=obj)
        self._resync_dependents(pid_text)
        return ChangeResult(obj.pid, ds_id, version_id, record.id, ts)

    def purge_datastream(
        self,
        pid: Union[Pid, str],
        ds_id: str,
        principal: str,
        justification: str = "",
    ) -> ChangeResult:
        pid_text = _pid_text(pid)
        with self._lock_for(pid_text):
            self._fault("purgeDatastream", "begin")
            obj = self._get(pid_text)
            if ds_id in ("DC", "AUDIT"):
                raise ReservedId(f"{ds_id} may not be purged")
            if ds_id not in obj.datastreams:
                raise NotFound(f"no datastream {ds_id} in {pid_text}")
            for diss in obj.disseminators.values():
                for v in diss.versions:
                    if any(target == ds_id for _key, (target, _label) in v.bindings):
                        raise BoundDatastream(f"{diss.id} binds {ds_id}")
            datastreams = dict(obj.datastreams)
            del datastreams[ds_id]
            ts = self._effective_time(obj)
            record, trail = self._append_audit(obj, "purgeDatastream", ds_id, principal, justification, ts)
            new_obj = self._assemble(obj, trail, datastreams=datastreams)
            self._commit("purgeDatastream", pid_text, new_obj, {}, old_obj=obj)
        self._resync_dependents(pid_text)
        return ChangeResult(obj.pid, ds_id, None, record.id, ts)

    # -- disseminator operations ---------------------------------------------

    def _check_behavior_pair(self, bdef: Pid, bmech: Pid) -> None:
        for pid_obj, model in ((bdef, "BDEF"), (bmech, "BMECH")):
            target = self.objects.get(str(pid_obj))
            if target is None:
                raise MissingDependency(f"{pid_obj} is not in the repository")
            if target.properties.content_model != model:
                raise MissingDependency(f"{pid_obj} does not have content model {model}")

    def add_disseminator(
        self,
        pid: Union[Pid, str],
        diss_id: str,
        bdef_pid: str,
        bmech_pid: str,
        bindings,
        principal: str,
        label: str = "",
        state: State = State.ACTIVE,
        versionable: bool = True,
        justification: str = "",
    ) -> ChangeResult:
        pid_text = _pid_text(pid)
        with self._lock_for(pid_text):
            self._fault("addDisseminator", "begin")
            obj = self._get(pid_text)
            if not TOKEN_PATTERN.match(diss_id):
                raise SchemaViolation(f"invalid disseminator id {diss_id!r}")
            if diss_id in obj.datastreams or diss_id in obj.disseminators:
                raise DuplicateComponent(f"{pid_text} already has a component {diss_id}")
            bdef = parse_pid(bdef_pid)
            bmech = parse_pid(bmech_pid)
            self._check_behavior_pair(bdef, bmech)
            ts = self._effective_time(obj)
            version_id = f"{diss_id}.0"
            version = DisseminatorVersion(
                version_id=version_id,
                bmech_pid=bmech,
                label=label,
                created=ts,
                bindings=_normalize_bindings(bindings),
            )
            disseminators = dict(obj.disseminators)
            disseminators[diss_id] = Disseminator(
                id=diss_id, bdef_pid=bdef, state=state, versionable=versionable, versions=(version,)
            )
            record, trail = self._append_audit(obj, "addDisseminator", diss_id, principal, justification, ts)
            new_obj = self._assemble(obj, trail, disseminators=disseminators)
            self._commit("addDisseminator", pid_text, new_obj, {}, old_obj=obj)
        self._resync_dependents(pid_text)
        return ChangeResult(obj.pid, diss_id, version_id, record.id, ts)

    def modify_disseminator(
        self,
        pid: Union[Pid, str],
        diss_id: str,
        principal: str,
        bmech_pid: Optional[str] = None,
        bindings=None,
        label: Optional[str] = None,
        justification: str = "",
    ) -> ChangeResult:
        pid_text = _pid_text(pid)
        with self._lock_for(pid_text):
            self._fault("modifyDisseminator", "begin")
            obj = self._get(pid_text)
            diss = obj.disseminators.get(diss_id)
            if diss is None:
                raise NotFound(f"no disseminator {diss_id} in {pid_text}")
            latest = resolve_version(diss)
            bmech = parse_pid(bmech_pid) if bmech_pid is not None else latest.bmech_pid
            self._check_behavior_pair(diss.bdef_pid, bmech)
            ts = self._effective_time(obj)
            suffix = max(version_suffix(v.version_id) for v in diss.versions) + 1
            version_id = f"{diss_id}.{suffix}"
            version = DisseminatorVersion(
                version_id=version_id,
                bmech_pid=bmech,
                label=latest.label if label is None else label,
                created=ts,
                bindings=latest.bindings if bindings is None else _normalize_bindings(bindings),
            )
            versions = diss.versions + (version,) if diss.versionable else (version,)
            disseminators = dict(obj.disseminators)
            disseminators[diss_id] = replace(diss, versions=versions)
            record, trail = self._append_audit(
                obj, "modifyDisseminator", diss_id, principal, justification, ts
            )
            new_obj = self._assemble(obj, trail, disseminators=disseminators)
            self._commit("modifyDisseminator", pid_text, new_obj, {}, old_obj=obj)
        self._resync_dependents(pid_text)
        return ChangeResult(obj.pid, diss_id, version_id, record.id, ts)

    def purge_disseminator(
        self,
        pid: Union[Pid, str],
        diss_id: str,
        principal: str,
        justification: str = "",
    ) -> ChangeResult:
        pid_text = _pid_text(pid)
        with self._lock_for(pid_text):
            self._fault("purgeDisseminator", "begin")
            obj = self._get(pid_text)
            if diss_id not in obj.disseminators:
                raise NotFound(f"no disseminator {diss_id} in {pid_text}")
            disseminators = dict(obj.disseminators)
            del disseminators[diss_id]
            ts = self._effective_time(obj)
            record, trail = self._append_audit(
                obj, "purgeDisseminator", diss_id, principal, justification, ts
            )
            new_obj = self._assemble(obj, trail, disseminators=disseminators)
            self._commit("purgeDisseminator", pid_text, new_obj, {}, old_obj=obj)
        self._resync_dependents(pid_text)
        return ChangeResult(obj.pid, diss_id, None, record.id, ts)

    # -- object properties ---------------------------------------------------

    def set_object_property(
        self,
        pid: Union[Pid, str],
        name: str,
        value: str,
        principal: str,
        justification: str = "",
    ) -> ChangeResult:
        pid_text = _pid_text(pid)
        with self._lock_for(pid_text):
            self._fault("setObjectProperty", "begin")
            obj = self._get(pid_text)
            if name in ("createdDate", "lastModifiedDate"):
                raise ImmutableProperty(f"{name} is system-managed")
            if name == "state":
                try:
                    properties = replace(obj.properties, state=State.from_code(value))
                except ValueError as exc:
                    raise SchemaViolation(str(exc)) from exc
            elif name == "label":
                properties = replace(obj.properties, label=value)
            elif name == "contentModel":
                properties = replace(obj.properties, content_model=value)
            else:
                raise SchemaViolation(f"unknown object property {name!r}")
            ts = self._effective_time(obj)
            record, trail = self._append_audit(obj, "setObjectProperty", "", principal, justification, ts)
            new_obj = self._assemble(obj, trail, properties=properties)
            self._commit("setObjectProperty", pid_text, new_obj, {}, old_obj=obj)
        self._resync_dependents(pid_text)
        return ChangeResult(obj.pid, "", None, record.id, ts)

    def get_object_property(self, pid: Union[Pid, str], name: str) -> str:
        obj = self._get(pid)
        if name == "state":
            return obj.properties.state.value
        if name == "label":
            return obj.properties.label
        if name == "contentModel":
            return obj.properties.content_model
        if name == "createdDate":
            return format_timestamp(obj.properties.created_date)
        if name == "lastModifiedDate":
            return format_timestamp(derive_last_modified(obj))
        raise NotFound(f"no object property {name!r}")

    # -- reads ----------------------------------------------------------------

    def get_datastream_content(
        self, pid: Union[Pid, str], ds_id: str, as_of: Optional[datetime] = None
    ) -> tuple[str, Union[bytes, Redirect]]:
        obj = self._get(pid)
        ds = obj.datastreams.get(ds_id)
        if ds is None:
            raise NotFound(f"no datastream {ds_id} in {obj.pid}")
        version = resolve_version(ds, as_of)
        if version.inline_xml is not None:
            return ds.mime_type, version.inline_xml
        if ds.control_group is ControlGroup.REDIRECTED:
            return ds.mime_type, Redirect(version.url or "")
        if ds.control_group is ControlGroup.EXTERNAL:
            status, content_type, body = self.fetcher(version.url or "")
            if not 200 <= status < 300:
                raise UpstreamBadStatus(f"GET {version.url} returned {status}")
            return ds.mime_type or content_type, body
        assert version.internal_id is not None
        path = self._content_path(version.internal_id)
        if not path.exists():
            raise InvariantViolation(f"content store entry {version.internal_id} is missing")
        return ds.mime_type, path.read_bytes()

    def get_object_history(self, pid: Union[Pid, str]) -> list[datetime]:
        obj = self._get(pid)
        stamps = {v.created for ds in obj.datastreams.values() for v in ds.versions}
        stamps |= {v.created for diss in obj.disseminators.values() for v in diss.versions}
        stamps |= {record.date for record in obj.audit_trail}
        return sorted(stamps)

    def registry_search(
        self,
        filters: Iterable[tuple[str, str, str]] = (),
        limit: Optional[int] = None,
        offset: int = 0,
    ) -> list[dict[str, str]]:
        rows = []
        for pid_text in sorted(self.objects):
            obj = self.objects[pid_text]
            if all(_filter_matches(obj, spec) for spec in filters):
                rows.append(
                    {
                        "pid": pid_text,
                        "label": obj.properties.label,
                        "state": obj.properties.state.value,
                        "contentModel": obj.properties.content_model,
                        "createdDate": format_timestamp(obj.properties.created_date),
                        "lastModifiedDate": format_timestamp(derive_last_modified(obj)),
                    }
                )
        end = None if limit is None else offset + limit
        return rows[offset:end]

    # -- dissemination plumbing -------------------------------------------------

    def list_methods(self, pid: Union[Pid, str], as_of: Optional[datetime] = None):
        return dissemination.list_methods(self._get(pid), self._lookup, as_of)

    def get_object_profile(self, pid: Union[Pid, str], as_of: Optional[datetime] = None):
        return dissemination.get_object_profile(self._get(pid), self._lookup, as_of)

    def resolve_dissemination(
        self,
        pid: Union[Pid, str],
        bdef_text: str,
        method: str,
        params: dict[str, str],
        as_of: Optional[datetime] = None,
    ) -> dissemination.DispatchPlan:
        return dissemination.resolve_dissemination(
            self._get(pid), self._lookup, bdef_text, method, params, self.base_url, as_of
        )

    def get_dissemination(
        self,
        pid: Union[Pid, str],
        bdef_text: str,
        method: str,
        params: dict[str, str],
        as_of: Optional[datetime] = None,
    ) -> tuple[str, bytes]:
        plan = self.resolve_dissemination(pid, bdef_text, method, params, as_of)
        return dissemination.dispatch(plan, self.fetcher)

    # -- index maintenance -------------------------------------------------------

    def rebuild_index(self) -> RebuildStats:
        """Drop the index and rebuild it from the durable FOXML files."""
        stats = RebuildStats()
        parsed: dict[str, DigitalObject] = {}
        for path in sorted(self.objects_dir.glob("*.xml")):
            try:
                obj = parse_foxml(path.read_bytes())
            except RepositoryError as exc:
                stats.failures.append((path.name, f"{exc.code}: {exc.message}"))
                continue
            parsed[str(obj.pid)] = obj

        def lookup(pid_text: str) -> Optional[list[str]]:
            target = parsed.get(pid_text)
            return dissemination.contract_method_names(target) if target is not None else None

        triples = []
        for pid_text in sorted(parsed):
            try:
                triples.extend(extract_all(parsed[pid_text], lookup))
            except RepositoryError as exc:
                stats.failures.append((pid_text, f"{exc.code}: {exc.message}"))
        self.index.replace_all(triples)
        stats.objects = len(parsed)
        stats.triples = len(triples)
        return stats


def _check_fragment(data: bytes) -> None:
    try:
        ET.fromstring(b"<check>" + data + b"</check>")
    except ET.ParseError as exc:
        raise XmlSyntax(f"inline content is not a well-formed XML fragment: {exc}") from exc


def _synthesize_dc(obj: DigitalObject) -> Datastream:
    """Minimal Dublin Core for objects ingested without one."""
    content = (
        "\n        <oai_dc:dc"
        ' xmlns:oai_dc="http://www.openarchives.org/OAI/2.0/oai_dc/"'
        ' xmlns:dc="http://purl.org/dc/elements/1.1/">\n'
        f"          <dc:title>{escape(obj.properties.label)}</dc:title>\n"
        f"          <dc:identifier>{obj.pid}</dc:identifier>\n"
        "        </oai_dc:dc>\n      "
    ).encode("utf-8")
    return Datastream(
        id="DC",
        control_group=ControlGroup.INLINE_XML,
        mime_type="text/xml",
        state=State.ACTIVE,
        versionable=True,
        versions=(
            DatastreamVersion(
                version_id="DC.0",
                label="Dublin Core Record",
                created=obj.properties.created_date,
                inline_xml=content,
            ),
        ),
    )


def _filter_matches(obj: DigitalObject, spec: tuple[str, str, str]) -> bool:
    field_name, op, value = spec
    props = obj.properties
    if field_name == "pid":
        return fnmatch.fnmatchcase(str(obj.pid), value)
    if field_name == "label":
        if op == "~":
            return value.lower() in props.label.lower()
        return props.label == value
    if field_name == "state":
        return props.state.value == value
    if field_name == "contentModel":
        return props.content_model == value
    if field_name in ("createdDate", "lastModifiedDate"):
        try:
            bound = parse_timestamp(value)
        except ValueError as exc:
            raise QuerySyntax(f"bad timestamp {value!r}") from exc
        actual = props.created_date if field_name == "createdDate" else derive_last_modified(obj)
        if op == ">=":
            return actual >= bound
        if op == "<=":
            return actual <= bound
        raise QuerySyntax(f"bad operator {op!r} for {field_name}")
    raise QuerySyntax(f"unknown search field {field_name!r}")
