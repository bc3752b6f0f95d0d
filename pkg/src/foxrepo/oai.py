"""OAI-PMH 2.0 data provider over the Resource Index.

Record sets are collection objects: membership of P in set S means the
index holds <P rel:isMemberOf S> (or the inverse hasMember). Record
payloads are Dublin Core disseminations: when the object offers a getDC
method through a disseminator the provider invokes it (metadata that "may
not statically exist"), otherwise it serves the DC datastream directly.

Protocol errors are returned as OAI <error> elements in a 200 response,
never as HTTP errors.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime
from typing import Optional
from xml.sax.saxutils import escape

from .dissemination import contract_method_names
from .index.terms import REL_NS, VIEW_NS, Resource
from .model import derive_last_modified, format_timestamp, parse_timestamp
from .storage import Repository

OAI_NS = "http://www.openarchives.org/OAI/2.0/"
OAI_SCHEMA = "http://www.openarchives.org/OAI/2.0/OAI-PMH.xsd"
GRANULARITY = "YYYY-MM-DDThh:mm:ssZ"

VERBS = ("Identify", "ListSets", "ListIdentifiers", "ListRecords", "GetRecord")

_VERB_ARGS = {
    "Identify": set(),
    "ListSets": {"resumptionToken"},
    "ListIdentifiers": {"metadataPrefix", "set", "from", "until", "resumptionToken"},
    "ListRecords": {"metadataPrefix", "set", "from", "until", "resumptionToken"},
    "GetRecord": {"identifier", "metadataPrefix"},
}


@dataclass(frozen=True)
class OaiSet:
    set_spec: str
    set_name: str
    collection_pid: str


@dataclass(frozen=True)
class OaiConfig:
    domain: str = "example.org"
    repository_name: str = "Digital Object Repository"
    admin_email: str = "admin@example.org"
    base_url: Optional[str] = None
    sets: tuple[OaiSet, ...] = ()
    page_size: int = 100


class _OaiError(Exception):
    def __init__(self, code: str, message: str) -> None:
        super().__init__(message)
        self.code = code
        self.message = message


def _envelope(repo: Repository, args: dict[str, str], body: str, error: Optional[_OaiError], config: OaiConfig) -> str:
    stamp = format_timestamp(repo.clock())
    request_attrs = ""
    if error is None or error.code not in ("badVerb", "badArgument"):
        request_attrs = "".join(
            f' {name}="{escape(value, {chr(34): "&quot;"})}"'
            for name, value in sorted(args.items())
            if value
        )
    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<OAI-PMH xmlns="{OAI_NS}"',
        '         xmlns:xsi="http://www.w3.org/2001/XMLSchema-instance"',
        f'         xsi:schemaLocation="{OAI_NS} {OAI_SCHEMA}">',
        f"  <responseDate>{stamp}</responseDate>",
        f"  <request{request_attrs}>{escape(config.base_url or '')}</request>",
    ]
    if error is not None:
        lines.append(f'  <error code="{error.code}">{escape(error.message)}</error>')
    else:
        lines.append(body)
    lines.append("</OAI-PMH>")
    return "\n".join(lines) + "\n"


def _set_members(repo: Repository, collection_pid: str) -> set[str]:
    snapshot = repo.index.snapshot()
    collection = snapshot.terms.lookup(Resource(f"info:fedora/{collection_pid}"))
    if collection is None:
        return set()
    members: set[str] = set()
    is_member_of = snapshot.terms.lookup(Resource(REL_NS + "isMemberOf"))
    if is_member_of is not None:
        for s, _p, _o in snapshot.match(None, is_member_of, collection):
            term = snapshot.terms.term(s)
            uri = getattr(term, "uri", "")
            if uri.startswith("info:fedora/"):
                members.add(uri[len("info:fedora/") :])
    has_member = snapshot.terms.lookup(Resource(REL_NS + "hasMember"))
    if has_member is not None:
        for _s, _p, o in snapshot.match(collection, has_member, None):
            term = snapshot.terms.term(o)
            uri = getattr(term, "uri", "")
            if uri.startswith("info:fedora/"):
                members.add(uri[len("info:fedora/") :])
    return members


def _datestamp(repo: Repository, pid_text: str) -> str:
    """Record datestamp: the DC representation's lastModifiedDate triple."""
    snapshot = repo.index.snapshot()
    subject = snapshot.terms.lookup(Resource(f"info:fedora/{pid_text}/DC"))
    predicate = snapshot.terms.lookup(Resource(VIEW_NS + "lastModifiedDate"))
    if subject is not None and predicate is not None:
        for _s, _p, o in snapshot.match(subject, predicate, None):
            term = snapshot.terms.term(o)
            value = getattr(term, "value", None)
            if value:
                return value
    return format_timestamp(derive_last_modified(repo.get_object(pid_text)))


def _dc_payload(repo: Repository, pid_text: str) -> str:
    """oai_dc fragment for one record, dissemination-first."""
    obj = repo.get_object(pid_text)
    for diss in obj.disseminators.values():
        bdef_obj = repo.objects.get(str(diss.bdef_pid))
        if bdef_obj is None:
            continue
        methods = contract_method_names(bdef_obj) or []
        if "getDC" in methods:
            _mime, body = repo.get_dissemination(pid_text, str(diss.bdef_pid), "getDC", {})
            return body.decode("utf-8").strip()
    _mime, payload = repo.get_datastream_content(pid_text, "DC")
    assert isinstance(payload, bytes)
    return payload.decode("utf-8").strip()


def _parse_utc(value: str, name: str) -> datetime:
    try:
        return parse_timestamp(value)
    except ValueError as exc:
        raise _OaiError("badArgument", f"{name} is not a UTC timestamp: {value!r}") from exc


@dataclass
class _ListState:
    set_spec: str
    from_arg: str
    until_arg: str
    offset: int

    def token(self) -> str:
        return f"{self.set_spec}|{self.from_arg}|{self.until_arg}|{self.offset}"

    @classmethod
    def parse(cls, token: str) -> "_ListState":
        parts = token.split("|")
        if len(parts) != 4 or not parts[3].isdigit():
            raise _OaiError("badArgument", f"bad resumptionToken: {token!r}")
        return cls(parts[0], parts[1], parts[2], int(parts[3]))


def _check_args(verb: str, args: dict[str, str]) -> None:
    allowed = _VERB_ARGS[verb]
    unknown = sorted(set(args) - allowed - {"verb"})
    if unknown:
        raise _OaiError("badArgument", f"illegal arguments for {verb}: {', '.join(unknown)}")


def _require_oai_dc(args: dict[str, str]) -> None:
    prefix = args.get("metadataPrefix")
    if prefix is None:
        raise _OaiError("badArgument", "metadataPrefix is required")
    if prefix != "oai_dc":
        raise _OaiError("cannotDisseminateFormat", f"unsupported metadataPrefix {prefix!r}")


def _selected_records(
    repo: Repository, config: OaiConfig, state: _ListState
) -> tuple[list[tuple[str, str]], Optional[str]]:
    """(pid, datestamp) pairs for one page, plus the next resumption token."""
    if state.set_spec:
        matching = [s for s in config.sets if s.set_spec == state.set_spec]
        if not matching:
            raise _OaiError("badArgument", f"unknown set {state.set_spec!r}")
        pids = sorted(_set_members(repo, matching[0].collection_pid) & set(repo.objects))
    else:
        pids = sorted(repo.objects)

    lower = _parse_utc(state.from_arg, "from") if state.from_arg else None
    upper = _parse_utc(state.until_arg, "until") if state.until_arg else None
    records = []
    for pid_text in pids:
        stamp = _datestamp(repo, pid_text)
        when = parse_timestamp(stamp)
        if lower is not None and when < lower:
            continue
        if upper is not None and when > upper:
            continue
        records.append((pid_text, stamp))
    if not records:
        raise _OaiError("noRecordsMatch", "no records match the request")

    page = records[state.offset : state.offset + config.page_size]
    if not page:
        raise _OaiError("badArgument", "resumptionToken is past the end of the list")
    next_token: Optional[str] = None
    if state.offset + config.page_size < len(records):
        following = _ListState(state.set_spec, state.from_arg, state.until_arg, state.offset + config.page_size)
        next_token = following.token()
    return page, next_token


def _record_header(config: OaiConfig, pid_text: str, stamp: str, set_spec: str) -> list[str]:
    lines = [
        "      <header>",
        f"        <identifier>oai:{escape(config.domain)}:{escape(pid_text)}</identifier>",
        f"        <datestamp>{escape(stamp)}</datestamp>",
    ]
    if set_spec:
        lines.append(f"        <setSpec>{escape(set_spec)}</setSpec>")
    lines.append("      </header>")
    return lines


def _list_state_from_args(args: dict[str, str]) -> _ListState:
    token = args.get("resumptionToken")
    if token is not None:
        exclusive = set(args) & {"metadataPrefix", "set", "from", "until"}
        if exclusive:
            raise _OaiError("badArgument", "resumptionToken is an exclusive argument")
        return _ListState.parse(token)
    _require_oai_dc(args)
    return _ListState(args.get("set", ""), args.get("from", ""), args.get("until", ""), 0)


def handle_oai(repo: Repository, args: dict[str, str], config: OaiConfig) -> str:
    """Answer one OAI-PMH request; always returns a complete response document."""
    try:
        verb = args.get("verb")
        if verb not in VERBS:
            raise _OaiError("badVerb", f"unknown verb {verb!r}")
        _check_args(verb, args)
        if verb == "Identify":
            body = _identify(repo, config)
        elif verb == "ListSets":
            body = _list_sets(config)
        elif verb == "ListIdentifiers":
            body = _list_records(repo, config, args, headers_only=True)
        elif verb == "ListRecords":
            body = _list_records(repo, config, args, headers_only=False)
        else:
            body = _get_record(repo, config, args)
        return _envelope(repo, args, body, None, config)
    except _OaiError as err:
        return _envelope(repo, args, "", err, config)


def _identify(repo: Repository, config: OaiConfig) -> str:
    earliest = "1970-01-01T00:00:00Z"
    stamps = sorted(_datestamp(repo, pid_text) for pid_text in repo.objects)
    if stamps:
        earliest = stamps[0]
    return "\n".join(
        [
            "  <Identify>",
            f"    <repositoryName>{escape(config.repository_name)}</repositoryName>",
            f"    <baseURL>{escape(config.base_url or '')}</baseURL>",
            "    <protocolVersion>2.0</protocolVersion>",
            f"    <adminEmail>{escape(config.admin_email)}</adminEmail>",
            f"    <earliestDatestamp>{escape(earliest)}</earliestDatestamp>",
            "    <deletedRecord>no</deletedRecord>",
            f"    <granularity>{GRANULARITY}</granularity>",
            "  </Identify>",
        ]
    )


def _list_sets(config: OaiConfig) -> str:
    lines = ["  <ListSets>"]
    for oai_set in config.sets:
        lines.append("    <set>")
        lines.append(f"      <setSpec>{escape(oai_set.set_spec)}</setSpec>")
        lines.append(f"      <setName>{escape(oai_set.set_name)}</setName>")
        lines.append("    </set>")
    lines.append("  </ListSets>")
    return "\n".join(lines)


def _list_records(repo: Repository, config: OaiConfig, args: dict[str, str], headers_only: bool) -> str:
    state = _list_state_from_args(args)
    page, next_token = _selected_records(repo, config, state)
    tag = "ListIdentifiers" if headers_only else "ListRecords"
    lines = [f"  <{tag}>"]
    for pid_text, stamp in page:
        if headers_only:
            lines.extend(line[4:] for line in _record_header(config, pid_text, stamp, state.set_spec))
        else:
            lines.append("    <record>")
            lines.extend(_record_header(config, pid_text, stamp, state.set_spec))
            lines.append("      <metadata>")
            lines.append(f"        {_dc_payload(repo, pid_text)}")
            lines.append("      </metadata>")
            lines.append("    </record>")
    if next_token is not None:
        lines.append(f"    <resumptionToken>{escape(next_token)}</resumptionToken>")
    lines.append(f"  </{tag}>")
    return "\n".join(lines)


def _get_record(repo: Repository, config: OaiConfig, args: dict[str, str]) -> str:
    identifier = args.get("identifier")
    if identifier is None:
        raise _OaiError("badArgument", "identifier is required")
    _require_oai_dc(args)
    prefix = f"oai:{config.domain}:"
    if not identifier.startswith(prefix):
        raise _OaiError("idDoesNotExist", f"identifier {identifier!r} is not in this repository")
    pid_text = identifier[len(prefix) :]
    if pid_text not in repo.objects:
        raise _OaiError("idDoesNotExist", f"no record for {identifier!r}")
    stamp = _datestamp(repo, pid_text)
    lines = ["  <GetRecord>", "    <record>"]
    lines.extend(_record_header(config, pid_text, stamp, ""))
    lines.append("      <metadata>")
    lines.append(f"        {_dc_payload(repo, pid_text)}")
    lines.append("      </metadata>")
    lines.append("    </record>")
    lines.append("  </GetRecord>")
    return "\n".join(lines)
