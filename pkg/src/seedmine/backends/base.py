"""Backend-neutral request/result types and the wire encoding.

Every image producer (local simulator, remote diffusion server) and every
answerer speaks these shapes. Batch helpers preserve request order and
isolate per-item failures so one bad request cannot poison a mining run.
"""

from __future__ import annotations

import base64
import hashlib
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..errors import BackendError, ProtocolError

# Generation profiles: (width, height).
PROFILE_768 = (768, 768)
PROFILE_512 = (512, 512)


@dataclass(frozen=True)
class GenerationRequest:
    prompt_text: str
    seed: int
    width: int = 768
    height: int = 768
    steps: int = 50
    guidance: float = 7.5
    want_attention: bool = False
    want_features: bool = False

    def __post_init__(self):
        if not self.prompt_text:
            raise BackendError("prompt text is empty")
        if self.seed < 0:
            raise BackendError(f"seed {self.seed} must be non-negative")
        if self.width <= 0 or self.height <= 0:
            raise BackendError("dimensions must be positive")


@dataclass
class GenerationResult:
    image_ref: str
    backend_tag: str
    features: np.ndarray | None = None
    attention_map: np.ndarray | None = None
    aesthetic: float | None = None


@dataclass(frozen=True)
class EvalRequest:
    image_ref: str
    question: str
    history: tuple = ()

    def __post_init__(self):
        if len(self.history) > 2:
            raise BackendError("history holds at most two question/answer turns")


@dataclass(frozen=True)
class EvalResponse:
    answer: str


@dataclass(frozen=True)
class HealthStatus:
    status: str
    feature_dim: int
    backend_tag: str


def request_key(req: GenerationRequest) -> str:
    """Stable idempotency key: same prompt/seed/dimensions, same key."""
    payload = json.dumps(
        [req.prompt_text, req.seed, req.width, req.height],
        ensure_ascii=False, separators=(",", ":"),
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]


# --- wire encoding ---------------------------------------------------------


def generation_request_to_wire(req: GenerationRequest) -> dict:
    return {
        "prompt_text": req.prompt_text,
        "seed": req.seed,
        "width": req.width,
        "height": req.height,
        "steps": req.steps,
        "guidance": req.guidance,
        "want_attention": req.want_attention,
        "want_features": req.want_features,
    }


def generation_request_from_wire(payload: dict) -> GenerationRequest:
    try:
        return GenerationRequest(
            prompt_text=payload["prompt_text"],
            seed=int(payload["seed"]),
            width=int(payload.get("width", 768)),
            height=int(payload.get("height", 768)),
            steps=int(payload.get("steps", 50)),
            guidance=float(payload.get("guidance", 7.5)),
            want_attention=bool(payload.get("want_attention", False)),
            want_features=bool(payload.get("want_features", False)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ProtocolError(f"bad generation request: {exc}") from exc


def generation_result_to_wire(result: GenerationResult) -> dict:
    payload = {
        "image_ref": result.image_ref,
        "backend_tag": result.backend_tag,
        "features": None,
        "attention_map": None,
        "aesthetic": result.aesthetic,
    }
    if result.features is not None:
        payload["features"] = [float(v) for v in np.asarray(result.features)]
    if result.attention_map is not None:
        payload["attention_map"] = [
            [float(v) for v in row] for row in np.asarray(result.attention_map)
        ]
    return payload


def generation_result_from_wire(payload: dict) -> GenerationResult:
    if "image_ref" not in payload and "image_b64" not in payload:
        raise ProtocolError("result carries neither image_ref nor image_b64")
    ref = payload.get("image_ref")
    if ref is None:
        # Inline images are re-referenced by content hash so downstream code
        # only ever handles refs.
        blob = base64.b64decode(payload["image_b64"])
        ref = "b64:" + hashlib.sha256(blob).hexdigest()[:24]
    features = payload.get("features")
    attention = payload.get("attention_map")
    aesthetic = payload.get("aesthetic")
    try:
        return GenerationResult(
            image_ref=str(ref),
            backend_tag=str(payload.get("backend_tag", "unknown")),
            features=None if features is None else np.asarray(features, dtype=float),
            attention_map=None if attention is None
            else np.asarray(attention, dtype=float),
            aesthetic=None if aesthetic is None else float(aesthetic),
        )
    except (TypeError, ValueError) as exc:
        raise ProtocolError(f"bad generation result: {exc}") from exc


def eval_request_to_wire(req: EvalRequest) -> dict:
    return {
        "image_ref": req.image_ref,
        "question": req.question,
        "history": [{"q": q, "a": a} for q, a in req.history],
    }


def eval_request_from_wire(payload: dict) -> EvalRequest:
    try:
        history = tuple(
            (turn["q"], turn["a"]) for turn in payload.get("history", [])
        )
        return EvalRequest(
            image_ref=payload["image_ref"],
            question=payload["question"],
            history=history,
        )
    except (KeyError, TypeError) as exc:
        raise ProtocolError(f"bad eval request: {exc}") from exc


# --- batch helpers ---------------------------------------------------------


def _effective_parallelism(backend, parallelism: int) -> int:
    if parallelism < 1:
        raise BackendError("parallelism must be >= 1")
    limit = getattr(backend, "max_concurrency", None)
    if limit:
        parallelism = min(parallelism, limit)
    return parallelism


def batch_generate(backend, requests, parallelism: int = 1) -> list:
    """Run generate over a batch; slot i holds the result or the error for
    requests[i], never a reordering."""
    parallelism = _effective_parallelism(backend, parallelism)

    def one(req):
        try:
            return backend.generate(req)
        except BackendError as exc:
            return exc
        except Exception as exc:
            return BackendError(str(exc), retryable=False)

    if parallelism == 1:
        return [one(r) for r in requests]
    with ThreadPoolExecutor(max_workers=parallelism) as pool:
        return list(pool.map(one, requests))


def batch_evaluate(backend, requests, parallelism: int = 1) -> list:
    parallelism = _effective_parallelism(backend, parallelism)

    def one(req):
        try:
            return backend.evaluate(req)
        except BackendError as exc:
            return exc
        except Exception as exc:
            return BackendError(str(exc), retryable=False)

    if parallelism == 1:
        return [one(r) for r in requests]
    with ThreadPoolExecutor(max_workers=parallelism) as pool:
        return list(pool.map(one, requests))
