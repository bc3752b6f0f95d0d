"""Administration command line.

Commands map 1:1 onto repository operations. Flags can be defaulted
through environment variables with the FOXREPO_ prefix (FOXREPO_ROOT,
FOXREPO_BIND, FOXREPO_BASE_URL, FOXREPO_PRINCIPAL, FOXREPO_TIMEOUT,
FOXREPO_SERVICE_BASE). Exit status: 0 on success, 1 with the error code
on stderr when an operation fails, 2 on usage errors.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path
from typing import Optional

from .errors import RepositoryError
from .fixtures import DEFAULT_SERVICE_BASE, FIXTURE_PIDS, load_fixtures
from .index.query import DEFAULT_ROW_LIMIT, execute_query
from .storage import Repository


def _env(name: str, fallback: Optional[str] = None) -> Optional[str]:
    return os.environ.get(f"FOXREPO_{name}", fallback)


def _parse_bind(value: str) -> tuple[str, int]:
    host, _, port = value.rpartition(":")
    if not host or not port.isdigit():
        raise argparse.ArgumentTypeError(f"bind address must be HOST:PORT, got {value!r}")
    return host, int(port)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="foxrepo", description="Digital object repository administration.")
    parser.add_argument("--root", default=_env("ROOT", "./foxrepo-data"), help="repository data directory")
    parser.add_argument("--base-url", default=_env("BASE_URL"), help="public base URL (default derives from --bind)")
    parser.add_argument("--principal", default=_env("PRINCIPAL", "fedoraAdmin"), help="principal recorded in audit records")
    parser.add_argument("--timeout", type=float, default=float(_env("TIMEOUT", "10") or "10"), help="outbound HTTP timeout in seconds")
    sub = parser.add_subparsers(dest="command", required=True)

    serve = sub.add_parser("serve", help="run the repository server")
    serve.add_argument("--bind", type=_parse_bind, default=_env("BIND", "127.0.0.1:8080"), help="HOST:PORT to listen on")

    ingest = sub.add_parser("ingest", help="ingest a FOXML file")
    ingest.add_argument("file", help="path to the FOXML document")

    export = sub.add_parser("export", help="export an object as FOXML to stdout")
    export.add_argument("pid")

    purge = sub.add_parser("purge", help="permanently remove an object")
    purge.add_argument("pid")

    query = sub.add_parser("query", help="run an index query (text argument, or @file)")
    query.add_argument("--lang", default="itql", choices=("itql", "spo"), help="query language")
    query.add_argument("--format", dest="fmt", default=None, help="output format (tsv or xml for itql; ntriples or xml for spo)")
    query.add_argument("--limit", type=int, default=DEFAULT_ROW_LIMIT, help="maximum result rows")
    query.add_argument("text", help="query text, or @FILE to read it from a file")

    sub.add_parser("rebuild-index", help="rebuild the index from stored FOXML")

    fixtures = sub.add_parser("load-fixtures", help="ingest the bundled demonstration objects")
    fixtures.add_argument("--service-base", default=_env("SERVICE_BASE", DEFAULT_SERVICE_BASE), help="base URL of the external image service")

    return parser


def _open_repo(args: argparse.Namespace, base_url: Optional[str] = None) -> Repository:
    return Repository(
        Path(args.root),
        base_url=base_url or args.base_url or "http://localhost:8080/fedora",
        fetch_timeout=args.timeout,
    )


def _cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .api import create_app

    bind = args.bind if isinstance(args.bind, tuple) else _parse_bind(args.bind)
    host, port = bind
    base_url = args.base_url or f"http://{host}:{port}/fedora"
    repo = _open_repo(args, base_url=base_url)
    uvicorn.run(create_app(repo), host=host, port=port, log_level="info")
    return 0


def _cmd_ingest(args: argparse.Namespace) -> int:
    repo = _open_repo(args)
    pid = repo.ingest(Path(args.file).read_bytes(), args.principal)
    print(pid)
    return 0


def _cmd_export(args: argparse.Namespace) -> int:
    repo = _open_repo(args)
    sys.stdout.buffer.write(repo.export(args.pid))
    return 0


def _cmd_purge(args: argparse.Namespace) -> int:
    repo = _open_repo(args)
    repo.purge_object(args.pid, args.principal)
    print(f"purged {args.pid}")
    return 0


def _cmd_query(args: argparse.Namespace) -> int:
    text = args.text
    if text.startswith("@"):
        text = Path(text[1:]).read_text(encoding="utf-8")
    repo = _open_repo(args)
    _content_type, payload = execute_query(repo.index.snapshot(), args.lang, text, args.fmt, args.limit)
    sys.stdout.buffer.write(payload)
    return 0


def _cmd_rebuild_index(args: argparse.Namespace) -> int:
    repo = _open_repo(args)
    stats = repo.rebuild_index()
    print(f"rebuilt: {stats.objects} objects, {stats.triples} triples")
    for name, message in stats.failures:
        print(f"failed: {name}: {message}", file=sys.stderr)
    return 1 if stats.failures else 0


def _cmd_load_fixtures(args: argparse.Namespace) -> int:
    repo = _open_repo(args)
    before = set(repo.objects)
    loaded = load_fixtures(repo, service_base=args.service_base, principal=args.principal)
    for pid in loaded:
        print(f"ingested {pid}")
    for pid in FIXTURE_PIDS:
        if pid in before:
            print(f"{pid} already present")
    return 0


_COMMANDS = {
    "serve": _cmd_serve,
    "ingest": _cmd_ingest,
    "export": _cmd_export,
    "purge": _cmd_purge,
    "query": _cmd_query,
    "rebuild-index": _cmd_rebuild_index,
    "load-fixtures": _cmd_load_fixtures,
}


def main(argv: Optional[list[str]] = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except RepositoryError as exc:
        print(f"{exc.code}: {exc.message}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"IoError: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
