"""Virtual representations: behavior contracts, service bindings, dispatch.

A disseminator points at a behavior-definition object (the contract: method
names and user parameters, carried in its METHODMAP datastream) and a
behavior-mechanism object (the binding: a URL template per method, carried
in SERVICEBINDINGS). Resolution substitutes datastream references and user
parameters into the template; dispatch performs the HTTP GET.
"""

from __future__ import annotations

import re
import xml.etree.ElementTree as ET
from dataclasses import dataclass
from datetime import datetime
from typing import Callable, Optional
from urllib.parse import quote

from .errors import (
    InvalidServiceBinding,
    MissingDependency,
    MissingParameter,
    NotFound,
    NoVersionAtTime,
    RepositoryError,
    SchemaViolation,
    UnknownMethod,
    UpstreamBadStatus,
)
from .model import (
    ControlGroup,
    DigitalObject,
    Disseminator,
    Pid,
    State,
    derive_last_modified,
    format_timestamp,
    parse_pid,
    resolve_version,
)

# pid string -> object, None when absent (duck-typed registry view)
Lookup = Callable[[str], Optional[DigitalObject]]
# url -> (status, content type, body); raises UpstreamFetchFailed
Fetcher = Callable[[str], tuple[int, str, bytes]]

_PLACEHOLDER_RE = re.compile(r"\{([A-Za-z0-9_.-]+)\}")


@dataclass(frozen=True)
class ParamSpec:
    name: str
    required: bool
    default: Optional[str] = None


@dataclass(frozen=True)
class MethodSignature:
    name: str
    params: tuple[ParamSpec, ...]


@dataclass(frozen=True)
class BDefContract:
    pid: Pid
    methods: tuple[MethodSignature, ...]

    def method(self, name: str) -> Optional[MethodSignature]:
        for m in self.methods:
            if m.name == name:
                return m
        return None


@dataclass(frozen=True)
class ServiceBinding:
    method: str
    url_template: str
    mime_type: str
    input_keys: tuple[str, ...]


@dataclass(frozen=True)
class BMechBinding:
    pid: Pid
    implements_bdef: Pid
    bindings: tuple[ServiceBinding, ...]

    def binding(self, method: str) -> Optional[ServiceBinding]:
        for b in self.bindings:
            if b.method == method:
                return b
        return None


@dataclass(frozen=True)
class DispatchPlan:
    resolved_url: str
    mime_type: str
    as_of: Optional[datetime] = None


@dataclass(frozen=True)
class DatastreamView:
    id: str
    version_id: str
    label: str
    mime_type: str
    created: datetime


@dataclass(frozen=True)
class ObjectProfile:
    pid: Pid
    label: str
    state: str
    created: datetime
    modified: datetime
    datastreams: tuple[DatastreamView, ...]
    methods: tuple[tuple[str, str], ...]  # (bdef pid, method name)

    def representation_uris(self) -> list[str]:
        base = f"info:fedora/{self.pid}"
        uris = [f"{base}/{view.id}" for view in self.datastreams]
        uris.extend(f"{base}/{bdef}/{method}" for bdef, method in self.methods)
        return uris


def _local(tag: str) -> str:
    return tag.rsplit("}", 1)[-1]


def parse_method_map(data: bytes, pid: Pid) -> BDefContract:
    try:
        root = ET.fromstring(data)
    except ET.ParseError as exc:
        raise SchemaViolation(f"METHODMAP of {pid} is not well-formed: {exc}") from exc
    if _local(root.tag) != "methodMap":
        raise SchemaViolation(f"METHODMAP of {pid}: root must be methodMap, got {root.tag}")
    methods: list[MethodSignature] = []
    seen: set[str] = set()
    for element in root:
        if _local(element.tag) != "method":
            raise SchemaViolation(f"METHODMAP of {pid}: unexpected element {element.tag}")
        name = element.get("name")
        if not name:
            raise SchemaViolation(f"METHODMAP of {pid}: method lacks a name")
        if name in seen:
            raise SchemaViolation(f"METHODMAP of {pid}: duplicate method {name}")
        seen.add(name)
        params: list[ParamSpec] = []
        for child in element:
            if _local(child.tag) != "param":
                raise SchemaViolation(f"METHODMAP of {pid}: unexpected element {child.tag}")
            pname = child.get("name")
            if not pname:
                raise SchemaViolation(f"METHODMAP of {pid}: param lacks a name")
            params.append(
                ParamSpec(
                    name=pname,
                    required=child.get("required", "false") == "true",
                    default=child.get("default"),
                )
            )
        methods.append(MethodSignature(name=name, params=tuple(params)))
    return BDefContract(pid=pid, methods=tuple(methods))


def parse_service_bindings(data: bytes, pid: Pid) -> BMechBinding:
    try:
        root = ET.fromstring(data)
    except ET.ParseError as exc:
        raise SchemaViolation(f"SERVICEBINDINGS of {pid} is not well-formed: {exc}") from exc
    if _local(root.tag) != "serviceBindings":
        raise SchemaViolation(f"SERVICEBINDINGS of {pid}: root must be serviceBindings")
    bdef_text = root.get("bdef")
    if not bdef_text:
        raise SchemaViolation(f"SERVICEBINDINGS of {pid}: missing bdef attribute")
    bindings: list[ServiceBinding] = []
    seen: set[str] = set()
    for element in root:
        if _local(element.tag) != "binding":
            raise SchemaViolation(f"SERVICEBINDINGS of {pid}: unexpected element {element.tag}")
        method = element.get("method")
        url = element.get("url")
        if not method or url is None:
            raise SchemaViolation(f"SERVICEBINDINGS of {pid}: binding needs method and url")
        if method in seen:
            raise SchemaViolation(f"SERVICEBINDINGS of {pid}: duplicate binding for {method}")
        seen.add(method)
        keys = []
        for child in element:
            if _local(child.tag) != "input":
                raise SchemaViolation(f"SERVICEBINDINGS of {pid}: unexpected element {child.tag}")
            key = child.get("key")
            if not key:
                raise SchemaViolation(f"SERVICEBINDINGS of {pid}: input lacks a key")
            keys.append(key)
        bindings.append(
            ServiceBinding(
                method=method,
                url_template=url,
                mime_type=element.get("mime", "application/octet-stream"),
                input_keys=tuple(keys),
            )
        )
    return BMechBinding(pid=pid, implements_bdef=parse_pid(bdef_text), bindings=tuple(bindings))


def _reserved_inline(obj: DigitalObject, ds_id: str) -> Optional[bytes]:
    ds = obj.datastreams.get(ds_id)
    if ds is None or ds.control_group is not ControlGroup.INLINE_XML:
        return None
    return ds.versions[-1].inline_xml


def contract_for(bdef_obj: DigitalObject) -> BDefContract:
    data = _reserved_inline(bdef_obj, "METHODMAP")
    if data is None:
        raise MissingDependency(f"{bdef_obj.pid} carries no METHODMAP datastream")
    return parse_method_map(data, bdef_obj.pid)


def bindings_for(bmech_obj: DigitalObject) -> BMechBinding:
    data = _reserved_inline(bmech_obj, "SERVICEBINDINGS")
    if data is None:
        raise MissingDependency(f"{bmech_obj.pid} carries no SERVICEBINDINGS datastream")
    try:
        return parse_service_bindings(data, bmech_obj.pid)
    except SchemaViolation as exc:
        raise InvalidServiceBinding(str(exc)) from exc


def contract_method_names(obj: DigitalObject) -> Optional[list[str]]:
    """Method names declared by a behavior-definition object, or None.

    Tolerant by design: indexing must not fail because some object merely
    resembles a BDef, so malformed method maps yield None here.
    """
    data = _reserved_inline(obj, "METHODMAP")
    if data is None:
        return None
    try:
        return [m.name for m in parse_method_map(data, obj.pid).methods]
    except RepositoryError:
        return None


def find_disseminator(obj: DigitalObject, bdef_text: str) -> Disseminator:
    """Disseminator whose contract pid matches, exact first then unique
    case-insensitive (API-A-LITE URLs are typed by hand)."""
    for diss in obj.disseminators.values():
        if str(diss.bdef_pid) == bdef_text:
            return diss
    folded = [d for d in obj.disseminators.values() if str(d.bdef_pid).lower() == bdef_text.lower()]
    if len(folded) == 1:
        return folded[0]
    raise NotFound(f"{obj.pid} has no disseminator for {bdef_text}")


def list_methods(
    obj: DigitalObject, lookup: Lookup, as_of: Optional[datetime] = None
) -> list[tuple[str, str, tuple[ParamSpec, ...]]]:
    """Union over active disseminators of their contract methods at as_of."""
    results: list[tuple[str, str, tuple[ParamSpec, ...]]] = []
    seen: set[tuple[str, str]] = set()
    for diss in obj.disseminators.values():
        if diss.state is not State.ACTIVE:
            continue
        try:
            resolve_version(diss, as_of)
        except NoVersionAtTime:
            continue
        bdef_obj = lookup(str(diss.bdef_pid))
        if bdef_obj is None:
            raise MissingDependency(f"behavior definition {diss.bdef_pid} is not in the repository")
        for method in contract_for(bdef_obj).methods:
            key = (str(diss.bdef_pid), method.name)
            if key not in seen:
                seen.add(key)
                results.append((key[0], key[1], method.params))
    return results


def get_object_profile(
    obj: DigitalObject, lookup: Lookup, as_of: Optional[datetime] = None
) -> ObjectProfile:
    views: list[DatastreamView] = []
    for ds in obj.datastreams.values():
        try:
            version = resolve_version(ds, as_of)
        except NoVersionAtTime:
            continue
        views.append(
            DatastreamView(
                id=ds.id,
                version_id=version.version_id,
                label=version.label,
                mime_type=ds.mime_type,
                created=version.created,
            )
        )
    methods: list[tuple[str, str]] = []
    for diss in obj.disseminators.values():
        if diss.state is not State.ACTIVE:
            continue
        try:
            resolve_version(diss, as_of)
        except NoVersionAtTime:
            continue
        bdef_obj = lookup(str(diss.bdef_pid))
        if bdef_obj is None:
            continue  # dangling contract: representation not offered
        names = contract_method_names(bdef_obj) or []
        methods.extend((str(diss.bdef_pid), name) for name in names)
    return ObjectProfile(
        pid=obj.pid,
        label=obj.properties.label,
        state=obj.properties.state.value,
        created=obj.properties.created_date,
        modified=derive_last_modified(obj),
        datastreams=tuple(views),
        methods=tuple(methods),
    )


def resolve_dissemination(
    obj: DigitalObject,
    lookup: Lookup,
    bdef_text: str,
    method: str,
    params: dict[str, str],
    base_url: str,
    as_of: Optional[datetime] = None,
) -> DispatchPlan:
    """Build the concrete service URL for one dissemination request."""
    diss = find_disseminator(obj, bdef_text)
    version = resolve_version(diss, as_of)

    bdef_obj = lookup(str(diss.bdef_pid))
    if bdef_obj is None:
        raise MissingDependency(f"behavior definition {diss.bdef_pid} is not in the repository")
    contract = contract_for(bdef_obj)
    signature = contract.method(method)
    if signature is None:
        raise UnknownMethod(f"{diss.bdef_pid} defines no method {method!r}")

    bmech_obj = lookup(str(version.bmech_pid))
    if bmech_obj is None:
        raise MissingDependency(f"behavior mechanism {version.bmech_pid} is not in the repository")
    binding = bindings_for(bmech_obj).binding(method)
    if binding is None:
        raise InvalidServiceBinding(f"{version.bmech_pid} has no binding for method {method!r}")

    values: dict[str, str] = {}
    for spec in signature.params:
        if spec.name in params:
            values[spec.name] = params[spec.name]
        elif spec.default is not None:
            values[spec.name] = spec.default
        elif spec.required:
            raise MissingParameter(f"method {method!r} requires parameter {spec.name!r}")

    binding_map = version.binding_map()
    suffix = f"?asOfDateTime={format_timestamp(as_of)}" if as_of else ""

    def substitute(match: re.Match[str]) -> str:
        name = match.group(1)
        if name in binding.input_keys:
            bound = binding_map.get(name)
            if bound is None:
                raise InvalidServiceBinding(f"binding key {name!r} is not mapped by {diss.id}")
            # input keys paste the datastream URL verbatim; only parameter
            # values are percent-encoded
            return f"{base_url}/get/{obj.pid}/{bound[0]}{suffix}"
        if name in values:
            return quote(values[name], safe="")
        raise InvalidServiceBinding(f"unexpanded placeholder {{{name}}} in binding for {method!r}")

    resolved = _PLACEHOLDER_RE.sub(substitute, binding.url_template)
    return DispatchPlan(resolved_url=resolved, mime_type=binding.mime_type, as_of=as_of)


def dispatch(plan: DispatchPlan, fetcher: Fetcher) -> tuple[str, bytes]:
    """Execute the plan; the result is shaped exactly like datastream content."""
    status, content_type, body = fetcher(plan.resolved_url)
    if not 200 <= status < 300:
        raise UpstreamBadStatus(f"service returned {status} for {plan.resolved_url}")
    return (plan.mime_type or content_type, body)
