"""REST surface: access (API-A-LITE), management, index search, OAI.

All handlers are thin delegations into storage/dissemination/oai. Blocking
work runs on the threadpool (sync-def routes, or run_in_threadpool from
async ones), so a dissemination that loops back into this same server
cannot deadlock the event loop.

Errors are returned as `<error code="...">message</error>` envelopes whose
code is the taxonomy name of the raised error; the HTTP status comes from
STATUS_BY_CODE.
"""

from __future__ import annotations

from dataclasses import replace as dc_replace
from datetime import datetime
from typing import Optional
from xml.sax.saxutils import escape

from fastapi import FastAPI, Query, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import Response
from starlette.concurrency import run_in_threadpool
from starlette.exceptions import HTTPException as StarletteHTTPException

from .errors import MissingParameter, QuerySyntax, RepositoryError, UpstreamBadStatus
from .index.query import DEFAULT_ROW_LIMIT, execute_query
from .model import State, format_timestamp, parse_timestamp
from .oai import OaiConfig, OaiSet, handle_oai
from .storage import ChangeResult, Redirect, Repository

STATUS_BY_CODE = {
    "NotFound": 404,
    "NoVersionAtTime": 404,
    "UnknownMethod": 404,
    "MissingDependency": 404,
    "MalformedPid": 400,
    "MalformedPath": 400,
    "QuerySyntax": 400,
    "MissingParameter": 400,
    "SchemaViolation": 400,
    "XmlSyntax": 400,
    "InvariantViolation": 400,
    "ImmutableProperty": 400,
    "ReservedId": 400,
    "WrongControlGroup": 400,
    "RdfSyntax": 400,
    "SubjectRestriction": 400,
    "ReservedPredicate": 400,
    "DuplicatePid": 409,
    "DuplicateComponent": 409,
    "BoundDatastream": 409,
    "UpstreamFetchFailed": 502,
    "UpstreamBadStatus": 502,
    "InvalidServiceBinding": 500,
}

DEFAULT_OAI_SETS = (OaiSet(set_spec="demo:10", set_name="Demo collection", collection_pid="demo:10"),)


def _error_response(code: str, message: str) -> Response:
    body = f'<error code="{code}">{escape(message)}</error>\n'
    return Response(content=body, status_code=STATUS_BY_CODE.get(code, 500), media_type="application/xml")


def _as_of(value: Optional[str]) -> Optional[datetime]:
    if value is None or value == "":
        return None
    try:
        return parse_timestamp(value)
    except ValueError:
        raise QuerySyntax(f"asOfDateTime must be an ISO-8601 UTC timestamp, got {value!r}") from None


def _principal(request: Request) -> str:
    principal = request.headers.get("X-Principal")
    if not principal:
        raise MissingParameter("mutating requests need an X-Principal header")
    return principal


def _parse_flag(value: str, name: str) -> bool:
    if value == "true":
        return True
    if value == "false":
        return False
    raise QuerySyntax(f"{name} must be 'true' or 'false', got {value!r}")


def _change_xml(result: ChangeResult) -> str:
    new_version = f' newVersionId="{escape(result.new_version_id)}"' if result.new_version_id else ""
    component = f' component="{escape(result.component_id)}"' if result.component_id else ""
    return (
        f'<changeResult pid="{escape(str(result.pid))}"{component}{new_version} '
        f'auditRecordId="{escape(result.audit_record_id)}" '
        f'timestamp="{format_timestamp(result.timestamp)}"/>\n'
    )


def _change_response(result: ChangeResult, status_code: int = 200) -> Response:
    return Response(content=_change_xml(result), status_code=status_code, media_type="application/xml")


def _parse_bindings(values: list[str]) -> list[tuple[str, str, str]]:
    bindings = []
    for value in values:
        parts = value.split(":")
        if len(parts) == 2:
            bindings.append((parts[0], parts[1], ""))
        elif len(parts) == 3:
            bindings.append((parts[0], parts[1], parts[2]))
        else:
            raise QuerySyntax(f"binding must be KEY:DSID or KEY:DSID:LABEL, got {value!r}")
    return bindings


def _parse_search_conditions(text: str) -> list[tuple[str, str, str]]:
    filters: list[tuple[str, str, str]] = []
    for token in text.split():
        for op in (">=", "<=", "~", "="):
            idx = token.find(op)
            if idx > 0:
                filters.append((token[:idx], op, token[idx + len(op) :]))
                break
        else:
            raise QuerySyntax(f"search conditions look like field=value, field~value, or date>=ts; got {token!r}")
    return filters


def _profile_xml(profile) -> str:
    lines = [f'<objectProfile pid="{escape(str(profile.pid))}">']
    lines.append(f"  <label>{escape(profile.label)}</label>")
    lines.append(f"  <state>{escape(profile.state)}</state>")
    lines.append(f"  <createdDate>{format_timestamp(profile.created)}</createdDate>")
    lines.append(f"  <lastModifiedDate>{format_timestamp(profile.modified)}</lastModifiedDate>")
    lines.append("  <datastreams>")
    for view in profile.datastreams:
        lines.append(
            f'    <datastream id="{escape(view.id)}" versionId="{escape(view.version_id)}" '
            f'label="{escape(view.label, {chr(34): "&quot;"})}" mimeType="{escape(view.mime_type)}" '
            f'created="{format_timestamp(view.created)}"/>'
        )
    lines.append("  </datastreams>")
    lines.append("  <methods>")
    for bdef, method in profile.methods:
        lines.append(f'    <method bdef="{escape(bdef)}" name="{escape(method)}"/>')
    lines.append("  </methods>")
    lines.append("  <representations>")
    for uri in profile.representation_uris():
        lines.append(f"    <uri>{escape(uri)}</uri>")
    lines.append("  </representations>")
    lines.append("</objectProfile>")
    return "\n".join(lines) + "\n"


def _profile_html(profile) -> str:
    rows = "".join(
        f"<tr><td>{escape(view.id)}</td><td>{escape(view.version_id)}</td>"
        f"<td>{escape(view.mime_type)}</td><td>{escape(view.label)}</td></tr>"
        for view in profile.datastreams
    )
    methods = "".join(
        f"<li>{escape(bdef)}/{escape(method)}</li>" for bdef, method in profile.methods
    )
    return (
        "<!DOCTYPE html><html><head>"
        f"<title>{escape(str(profile.pid))}</title></head><body>"
        f"<h1>{escape(str(profile.pid))}</h1>"
        f"<p>{escape(profile.label)} (state {escape(profile.state)})</p>"
        f"<table border='1'><tr><th>Datastream</th><th>Version</th><th>MIME</th><th>Label</th></tr>{rows}</table>"
        f"<h2>Methods</h2><ul>{methods}</ul>"
        "</body></html>"
    )


def create_app(repo: Repository, oai_config: Optional[OaiConfig] = None) -> FastAPI:
    app = FastAPI(title="foxrepo", docs_url=None, redoc_url=None)
    config = oai_config or OaiConfig(sets=DEFAULT_OAI_SETS)

    @app.exception_handler(RepositoryError)
    async def repository_error(_request: Request, exc: RepositoryError) -> Response:
        return _error_response(exc.code, exc.message)

    @app.exception_handler(RequestValidationError)
    async def validation_error(_request: Request, exc: RequestValidationError) -> Response:
        missing = "; ".join(
            ".".join(str(part) for part in error.get("loc", ())) for error in exc.errors()
        )
        return _error_response("MissingParameter", f"invalid or missing request parameters: {missing}")

    @app.exception_handler(StarletteHTTPException)
    async def route_error(_request: Request, exc: StarletteHTTPException) -> Response:
        # unknown paths and wrong methods still carry a taxonomy code
        body = f'<error code="MalformedPath">{escape(str(exc.detail))}</error>\n'
        return Response(content=body, status_code=exc.status_code, media_type="application/xml")

    # -- access (API-A-LITE) -------------------------------------------------

    @app.get("/fedora/get/{pid}")
    def get_profile(pid: str, asOfDateTime: Optional[str] = None, format: Optional[str] = None):
        profile = repo.get_object_profile(pid, _as_of(asOfDateTime))
        if format == "html":
            return Response(content=_profile_html(profile), media_type="text/html; charset=utf-8")
        return Response(content=_profile_xml(profile), media_type="application/xml")

    @app.get("/fedora/get/{pid}/{ds_id}")
    def get_datastream(pid: str, ds_id: str, asOfDateTime: Optional[str] = None):
        mime, payload = repo.get_datastream_content(pid, ds_id, _as_of(asOfDateTime))
        if isinstance(payload, Redirect):
            return Response(status_code=302, headers={"Location": payload.url})
        return Response(content=payload, media_type=mime or "application/octet-stream")

    @app.get("/fedora/get/{pid}/{bdef_pid}/{method}")
    def get_dissemination(request: Request, pid: str, bdef_pid: str, method: str):
        params = {k: v for k, v in request.query_params.items() if k != "asOfDateTime"}
        as_of = _as_of(request.query_params.get("asOfDateTime"))
        mime, body = repo.get_dissemination(pid, bdef_pid, method, params, as_of)
        return Response(content=body, media_type=mime or "application/octet-stream")

    # -- management ------------------------------------------------------------

    @app.post("/fedora/manage/ingest")
    async def ingest(request: Request):
        principal = _principal(request)
        data = await request.body()
        pid = await run_in_threadpool(repo.ingest, data, principal)
        body = f'<ingestResult pid="{escape(str(pid))}"/>\n'
        return Response(content=body, status_code=201, media_type="application/xml")

    @app.get("/fedora/manage/export/{pid}")
    def export(pid: str):
        return Response(content=repo.export(pid), media_type="application/xml")

    @app.delete("/fedora/manage/object/{pid}")
    def purge_object(request: Request, pid: str):
        principal = _principal(request)
        repo.purge_object(pid, principal)
        return Response(content=f'<purgeResult pid="{escape(pid)}"/>\n', media_type="application/xml")

    @app.post("/fedora/manage/object/{pid}/datastream")
    async def add_datastream(
        request: Request,
        pid: str,
        dsId: str,
        controlGroup: str,
        mimeType: str = "",
        label: str = "",
        versionable: str = "true",
        state: str = "A",
        url: Optional[str] = None,
        formatUri: Optional[str] = None,
        justification: str = "",
    ):
        principal = _principal(request)
        data = await request.body()
        try:
            state_value = State.from_code(state)
        except ValueError as exc:
            raise QuerySyntax(str(exc)) from None
        result = await run_in_threadpool(
            lambda: repo.add_datastream(
                pid,
                dsId,
                controlGroup,
                mimeType,
                principal,
                content=data or None,
                url=url,
                label=label,
                versionable=_parse_flag(versionable, "versionable"),
                state=state_value,
                format_uri=formatUri,
                justification=justification,
            )
        )
        return _change_response(result, status_code=201)

    @app.put("/fedora/manage/object/{pid}/datastream/{ds_id}")
    async def modify_datastream(
        request: Request,
        pid: str,
        ds_id: str,
        label: Optional[str] = None,
        url: Optional[str] = None,
        justification: str = "",
    ):
        principal = _principal(request)
        data = await request.body()
        result = await run_in_threadpool(
            lambda: repo.modify_datastream(
                pid,
                ds_id,
                principal,
                content=data or None,
                url=url,
                label=label,
                justification=justification,
            )
        )
        return _change_response(result)

    @app.delete("/fedora/manage/object/{pid}/datastream/{ds_id}")
    def purge_datastream(request: Request, pid: str, ds_id: str, justification: str = ""):
        principal = _principal(request)
        return _change_response(repo.purge_datastream(pid, ds_id, principal, justification))

    @app.post("/fedora/manage/object/{pid}/disseminator")
    def add_disseminator(
        request: Request,
        pid: str,
        dissId: str,
        bdef: str,
        bmech: str,
        binding: list[str] = Query(default=[]),
        label: str = "",
        justification: str = "",
    ):
        principal = _principal(request)
        result = repo.add_disseminator(
            pid,
            dissId,
            bdef,
            bmech,
            _parse_bindings(binding),
            principal,
            label=label,
            justification=justification,
        )
        return _change_response(result, status_code=201)

    @app.put("/fedora/manage/object/{pid}/disseminator/{diss_id}")
    def modify_disseminator(
        request: Request,
        pid: str,
        diss_id: str,
        bmech: Optional[str] = None,
        binding: list[str] = Query(default=[]),
        label: Optional[str] = None,
        justification: str = "",
    ):
        principal = _principal(request)
        result = repo.modify_disseminator(
            pid,
            diss_id,
            principal,
            bmech_pid=bmech,
            bindings=_parse_bindings(binding) if binding else None,
            label=label,
            justification=justification,
        )
        return _change_response(result)

    @app.delete("/fedora/manage/object/{pid}/disseminator/{diss_id}")
    def purge_disseminator(request: Request, pid: str, diss_id: str, justification: str = ""):
        principal = _principal(request)
        return _change_response(repo.purge_disseminator(pid, diss_id, principal, justification))

    @app.put("/fedora/manage/object/{pid}/property/{name}")
    def set_property(request: Request, pid: str, name: str, value: str, justification: str = ""):
        principal = _principal(request)
        return _change_response(repo.set_object_property(pid, name, value, principal, justification))

    @app.get("/fedora/manage/object/{pid}/property/{name}")
    def get_property(pid: str, name: str):
        return Response(content=repo.get_object_property(pid, name), media_type="text/plain; charset=utf-8")

    # -- index query and registry search ------------------------------------------

    def _risearch(
        lang: str, query_text: Optional[str], query_ref: Optional[str], fmt: Optional[str], limit: int
    ) -> Response:
        if query_text is None and query_ref:
            status, _content_type, body = repo.fetcher(query_ref)
            if not 200 <= status < 300:
                raise UpstreamBadStatus(f"queryRef {query_ref} returned {status}")
            query_text = body.decode("utf-8")
        if query_text is None:
            raise QuerySyntax("either query or queryRef is required")
        content_type, payload = execute_query(repo.index.snapshot(), lang, query_text, fmt, limit)
        return Response(content=payload, media_type=content_type)

    @app.get("/fedora/risearch")
    def risearch_get(
        lang: str = "itql",
        query: Optional[str] = None,
        queryRef: Optional[str] = None,
        format: Optional[str] = None,
        limit: int = DEFAULT_ROW_LIMIT,
    ):
        return _risearch(lang, query, queryRef, format, limit)

    @app.post("/fedora/risearch")
    async def risearch_post(
        request: Request,
        lang: str = "itql",
        query: Optional[str] = None,
        queryRef: Optional[str] = None,
        format: Optional[str] = None,
        limit: int = DEFAULT_ROW_LIMIT,
    ):
        if query is None:
            body = await request.body()
            if body:
                query = body.decode("utf-8")
        return await run_in_threadpool(_risearch, lang, query, queryRef, format, limit)

    @app.get("/fedora/search")
    def search(query: str = "", maxResults: Optional[int] = None, offset: int = 0):
        filters = _parse_search_conditions(query)
        rows = repo.registry_search(filters, limit=maxResults, offset=offset)
        lines = ["<searchResults>"]
        for row in rows:
            lines.append("  <row>")
            for key in ("pid", "label", "state", "contentModel", "createdDate", "lastModifiedDate"):
                lines.append(f"    <{key}>{escape(row[key])}</{key}>")
            lines.append("  </row>")
        lines.append("</searchResults>")
        return Response(content="\n".join(lines) + "\n", media_type="application/xml")

    # -- OAI-PMH --------------------------------------------------------------------

    @app.get("/fedora/oai")
    def oai(request: Request):
        effective = config
        if effective.base_url is None:
            effective = dc_replace(effective, base_url=repo.base_url + "/oai")
        body = handle_oai(repo, dict(request.query_params), effective)
        return Response(content=body, media_type="text/xml; charset=utf-8")

    return app
