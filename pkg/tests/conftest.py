"""Shared fixtures: a configurable local stub HTTP server and common documents."""

from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest

from framekit.datamodel import Frame, IEDocument, Relation


class StubServer:
    """Local HTTP server that answers every POST with a canned (status, body).

    Records each request's path, headers, and parsed JSON body so tests can
    assert on the wire shape.
    """

    def __init__(self):
        self.status = 200
        self.body: dict | str = {}
        self.requests: list[dict] = []
        self._lock = threading.Lock()

        stub = self

        class Handler(BaseHTTPRequestHandler):
            def do_POST(self):
                length = int(self.headers.get("Content-Length", 0))
                raw = self.rfile.read(length)
                try:
                    parsed = json.loads(raw)
                except ValueError:
                    parsed = raw.decode("utf-8", "replace")
                with stub._lock:
                    stub.requests.append({
                        "path": self.path,
                        "headers": dict(self.headers),
                        "body": parsed,
                    })
                    status, body = stub.status, stub.body
                payload = body if isinstance(body, str) else json.dumps(body)
                data = payload.encode("utf-8")
                self.send_response(status)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(data)))
                self.end_headers()
                self.wfile.write(data)

            def log_message(self, *args):
                pass

        self._server = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)
        self._thread.start()

    @property
    def base_url(self) -> str:
        host, port = self._server.server_address
        return f"http://{host}:{port}"

    def respond(self, body: dict | str, status: int = 200) -> None:
        with self._lock:
            self.status = status
            self.body = body

    def close(self) -> None:
        self._server.shutdown()
        self._server.server_close()


@pytest.fixture
def stub_server():
    server = StubServer()
    yield server
    server.close()


@pytest.fixture
def sample_doc():
    doc = IEDocument("sample", "Aspirin 81 mg daily. Stopped due to nausea.")
    doc.add_frame(Frame("0001", "Aspirin", 0, 7, {"Type": "Drug"}))
    doc.add_frame(Frame("0002", "nausea", 36, 42, {"Type": "ADE"}))
    doc.add_relation(Relation("0001", "0002", "ADE-Drug"))
    return doc
