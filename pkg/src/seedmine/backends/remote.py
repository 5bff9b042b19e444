"""HTTP adapter for a generation/evaluation server.

Wire contract:
    POST /generate   snake_case GenerationRequest -> GenerationResult
                     (image_ref, or image_b64 for inline payloads)
    POST /evaluate   {image_ref, question, history: [{q, a}]} -> {answer}
    GET  /health     {status, feature_dim, backend_tag}

Non-2xx responses carry {error, retryable}. Retryable faults (and transport
errors) are retried with bounded exponential backoff; schema mismatches are
fatal immediately.
"""

from __future__ import annotations

import os
import time

import requests

from ..errors import BackendError, ProtocolError
from .base import (
    EvalRequest,
    EvalResponse,
    GenerationRequest,
    GenerationResult,
    HealthStatus,
    eval_request_to_wire,
    generation_request_to_wire,
    generation_result_from_wire,
    request_key,
)

AUTH_TOKEN_ENV = "SEEDMINE_AUTH_TOKEN"


class RemoteBackend:
    backend_tag = "remote"
    max_concurrency = 8

    def __init__(
        self, base_url: str, timeout: float = 60.0, max_attempts: int = 4,
        backoff: float = 0.5, backoff_cap: float = 8.0, session=None,
        auth_token: str | None = None,
    ):
        if max_attempts < 1:
            raise BackendError("max_attempts must be >= 1")
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        self.max_attempts = max_attempts
        self.backoff = backoff
        self.backoff_cap = backoff_cap
        self.session = session or requests.Session()
        self.auth_token = auth_token or os.environ.get(AUTH_TOKEN_ENV)

    def _headers(self, idempotency_key: str | None = None) -> dict:
        headers = {}
        if self.auth_token:
            headers["Authorization"] = f"Bearer {self.auth_token}"
        if idempotency_key:
            headers["Idempotency-Key"] = idempotency_key
        return headers

    def _post(self, path: str, payload: dict, idempotency_key=None) -> dict:
        url = f"{self.base_url}{path}"
        last_error = None
        for attempt in range(self.max_attempts):
            if attempt:
                time.sleep(min(self.backoff * 2 ** (attempt - 1), self.backoff_cap))
            try:
                resp = self.session.post(
                    url, json=payload, timeout=self.timeout,
                    headers=self._headers(idempotency_key),
                )
            except requests.RequestException as exc:
                last_error = BackendError(f"{url}: {exc}", retryable=True)
                continue
            if resp.ok:
                try:
                    return resp.json()
                except ValueError as exc:
                    raise ProtocolError(f"{url}: response is not JSON: {exc}")
            retryable, message = self._error_fields(resp)
            last_error = BackendError(f"{url}: {message}", retryable=retryable)
            if not retryable:
                raise last_error
        raise last_error

    @staticmethod
    def _error_fields(resp) -> tuple[bool, str]:
        try:
            body = resp.json()
            message = body.get("error", resp.text)
            retryable = bool(body.get("retryable", resp.status_code >= 500))
        except ValueError:
            message = resp.text or f"HTTP {resp.status_code}"
            retryable = resp.status_code >= 500
        return retryable, f"HTTP {resp.status_code}: {message}"

    def generate(self, req: GenerationRequest) -> GenerationResult:
        payload = generation_request_to_wire(req)
        body = self._post("/generate", payload, idempotency_key=request_key(req))
        return generation_result_from_wire(body)

    def evaluate(self, req: EvalRequest) -> EvalResponse:
        body = self._post("/evaluate", eval_request_to_wire(req))
        if not isinstance(body, dict) or "answer" not in body:
            raise ProtocolError("evaluate response lacks an answer field")
        return EvalResponse(str(body["answer"]))

    def health(self) -> HealthStatus:
        url = f"{self.base_url}/health"
        try:
            resp = self.session.get(url, timeout=self.timeout,
                                    headers=self._headers())
        except requests.RequestException as exc:
            raise BackendError(f"{url}: {exc}", retryable=True)
        if not resp.ok:
            retryable, message = self._error_fields(resp)
            raise BackendError(f"{url}: {message}", retryable=retryable)
        try:
            body = resp.json()
            return HealthStatus(
                status=str(body["status"]),
                feature_dim=int(body["feature_dim"]),
                backend_tag=str(body["backend_tag"]),
            )
        except (ValueError, KeyError, TypeError) as exc:
            raise ProtocolError(f"{url}: bad health payload: {exc}")
