"""Shared fixtures: stub HTTP service, live server runner, loaded repositories."""

from __future__ import annotations

import threading
import time
from contextlib import contextmanager
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import parse_qsl, urlsplit

import pytest
import uvicorn
from fastapi.testclient import TestClient

from foxrepo.api import create_app
from foxrepo.fixtures import load_fixtures
from foxrepo.storage import Repository

DATA_DIR = Path(__file__).parent / "data"

# criterion number -> (status, title); printed by pytest_terminal_summary
ACCEPTANCE_RESULTS: dict[int, tuple[str, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_RESULTS):
        status, title = ACCEPTANCE_RESULTS[number]
        terminalreporter.write_line(f"CRITERION {number:2d} {status} - {title}")


@pytest.fixture
def criterion():
    @contextmanager
    def _criterion(number: int, title: str):
        try:
            yield
        except BaseException:
            ACCEPTANCE_RESULTS[number] = ("FAIL", title)
            raise
        ACCEPTANCE_RESULTS[number] = ("PASS", title)

    return _criterion


class _StubHandler(BaseHTTPRequestHandler):
    """Stand-in for every external HTTP dependency the fixtures point at."""

    def log_message(self, *args):
        pass

    def _reply(self, status: int, content_type: str, body: bytes) -> None:
        self.send_response(status)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def do_GET(self):
        split = urlsplit(self.path)
        if split.path == "/zpan":
            params = sorted(parse_qsl(split.query, keep_blank_values=True))
            body = "zpan\n" + "\n".join(f"{k}={v}" for k, v in params) + "\n"
            self._reply(200, "text/html; charset=utf-8", body.encode())
        elif split.path.startswith("/images/"):
            self._reply(200, "image/jpeg", b"image bytes for " + split.path.encode())
        elif split.path.startswith("/content/"):
            self._reply(200, "application/octet-stream", b"external content " + split.path.encode())
        elif split.path == "/status/500":
            self._reply(500, "text/plain", b"boom")
        else:
            self._reply(404, "text/plain", b"no such path")


@pytest.fixture(scope="session")
def stub_service():
    server = ThreadingHTTPServer(("127.0.0.1", 0), _StubHandler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{server.server_port}"
    server.shutdown()


@pytest.fixture(scope="session")
def server_runner():
    """Context manager that serves an ASGI app on a real local port."""

    @contextmanager
    def run(app):
        config = uvicorn.Config(app, host="127.0.0.1", port=0, log_level="warning")
        server = uvicorn.Server(config)
        thread = threading.Thread(target=server.run, daemon=True)
        thread.start()
        deadline = time.monotonic() + 15
        while not server.started:
            if time.monotonic() > deadline:
                raise RuntimeError("server did not start")
            time.sleep(0.02)
        port = server.servers[0].sockets[0].getsockname()[1]
        try:
            yield f"http://127.0.0.1:{port}"
        finally:
            server.should_exit = True
            thread.join(timeout=10)

    return run


@pytest.fixture
def repo(tmp_path):
    return Repository(tmp_path / "data")


@pytest.fixture
def fixture_repo(tmp_path, stub_service):
    repo = Repository(tmp_path / "data", base_url="http://testserver/fedora")
    load_fixtures(repo, service_base=stub_service)
    return repo


def wire_loopback(repo: Repository, client: TestClient) -> None:
    """Route the repo's outbound fetches for its own base URL through the
    in-process client; everything else goes out over real HTTP."""
    outer = repo.fetcher

    def fetch(url: str):
        if url.startswith("http://testserver/"):
            response = client.get(url)
            return response.status_code, response.headers.get("content-type", ""), response.content
        return outer(url)

    repo.fetcher = fetch


@pytest.fixture
def client(fixture_repo):
    test_client = TestClient(create_app(fixture_repo), follow_redirects=False)
    wire_loopback(fixture_repo, test_client)
    return test_client


@pytest.fixture(scope="session")
def demo_11_doc() -> bytes:
    return (DATA_DIR / "demo_11.xml").read_bytes()


@pytest.fixture(scope="session")
def membership_query() -> str:
    return (DATA_DIR / "membership.itql").read_text(encoding="utf-8")
