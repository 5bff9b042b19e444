"""The wire fixtures in protocol/golden.json pin the transport contract.
Any client or server, in any language, must agree with them exactly."""

import json
from pathlib import Path

import numpy as np
import pytest

from seedmine.backends.base import (
    EvalRequest,
    GenerationRequest,
    eval_request_from_wire,
    eval_request_to_wire,
    generation_request_from_wire,
    generation_request_to_wire,
    generation_result_from_wire,
    generation_result_to_wire,
    request_key,
)

GOLDEN = json.loads(
    (Path(__file__).resolve().parent.parent / "protocol" / "golden.json")
    .read_text(encoding="utf-8")
)


def test_request_key_fixture():
    prompt, seed, width, height = GOLDEN["request_key"]["input"]
    req = GenerationRequest(prompt, seed=seed, width=width, height=height)
    assert request_key(req) == GOLDEN["request_key"]["key"]


def test_generate_request_fixture():
    wire = GOLDEN["generate"]["request"]
    req = generation_request_from_wire(wire)
    assert generation_request_to_wire(req) == wire
    assert request_key(req) == GOLDEN["generate"]["headers"]["Idempotency-Key"]


def test_generate_response_fixture():
    wire = GOLDEN["generate"]["response"]
    result = generation_result_from_wire(wire)
    assert result.image_ref == "ref:example-0042"
    assert result.backend_tag == "example"
    assert np.allclose(result.features, wire["features"])
    assert np.allclose(result.attention_map, wire["attention_map"])
    assert result.aesthetic == pytest.approx(5.25)
    assert generation_result_to_wire(result) == wire


def test_evaluate_fixture():
    wire = GOLDEN["evaluate"]["request"]
    req = eval_request_from_wire(wire)
    assert req.image_ref == "ref:example-0042"
    assert len(req.history) == 1
    assert eval_request_to_wire(req) == wire


def test_error_shapes():
    for section in ("error", "fatal_error"):
        body = GOLDEN[section]["response"]
        assert set(body) == {"error", "retryable"}
        assert isinstance(body["retryable"], bool)
    assert GOLDEN["error"]["response"]["retryable"] is True
    assert GOLDEN["fatal_error"]["response"]["retryable"] is False


def test_health_shape():
    body = GOLDEN["health"]["response"]
    assert set(body) == {"status", "feature_dim", "backend_tag"}
