"""Expose any backend over the wire protocol with the stdlib HTTP server.

Meant for local testing of remote adapters and as a live fixture for
protocol conformance suites; not a production server.
"""

from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from ..errors import BackendError
from .base import (
    eval_request_from_wire,
    generation_request_from_wire,
    generation_result_to_wire,
)


def _make_handler(backend):
    class Handler(BaseHTTPRequestHandler):
        def log_message(self, *args):  # tests stay quiet
            pass

        def _send(self, code, payload):
            body = json.dumps(payload).encode("utf-8")
            self.send_response(code)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)

        def do_GET(self):
            if self.path != "/health":
                self._send(404, {"error": "not found", "retryable": False})
                return
            status = backend.health()
            self._send(200, {
                "status": status.status,
                "feature_dim": status.feature_dim,
                "backend_tag": status.backend_tag,
            })

        def do_POST(self):
            length = int(self.headers.get("Content-Length", 0))
            try:
                payload = json.loads(self.rfile.read(length) or b"{}")
            except ValueError:
                self._send(400, {"error": "body is not JSON", "retryable": False})
                return
            try:
                if self.path == "/generate":
                    result = backend.generate(generation_request_from_wire(payload))
                    self._send(200, generation_result_to_wire(result))
                elif self.path == "/evaluate":
                    response = backend.evaluate(eval_request_from_wire(payload))
                    self._send(200, {"answer": response.answer})
                else:
                    self._send(404, {"error": "not found", "retryable": False})
            except BackendError as exc:
                self._send(502 if exc.retryable else 400,
                           {"error": str(exc), "retryable": exc.retryable})
            except Exception as exc:
                self._send(500, {"error": str(exc), "retryable": True})

    return Handler


class BackendServer:
    """Context manager running a backend on an ephemeral local port."""

    def __init__(self, backend, host: str = "127.0.0.1", port: int = 0):
        self._server = ThreadingHTTPServer((host, port), _make_handler(backend))
        self._thread = threading.Thread(
            target=self._server.serve_forever, daemon=True
        )

    @property
    def url(self) -> str:
        host, port = self._server.server_address[:2]
        return f"http://{host}:{port}"

    def __enter__(self):
        self._thread.start()
        return self

    def __exit__(self, *exc_info):
        self._server.shutdown()
        self._server.server_close()
        self._thread.join(timeout=5)
        return False
