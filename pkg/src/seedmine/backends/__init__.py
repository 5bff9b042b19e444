from .base import (
    PROFILE_512,
    PROFILE_768,
    EvalRequest,
    EvalResponse,
    GenerationRequest,
    GenerationResult,
    HealthStatus,
    batch_evaluate,
    batch_generate,
    request_key,
)
from .remote import RemoteBackend
from .server import BackendServer
from .simulator import SimulatorBackend, SimulatorWorld, WorldConfig, simulate_world

__all__ = [
    "PROFILE_512",
    "PROFILE_768",
    "EvalRequest",
    "EvalResponse",
    "GenerationRequest",
    "GenerationResult",
    "HealthStatus",
    "BackendServer",
    "RemoteBackend",
    "SimulatorBackend",
    "SimulatorWorld",
    "WorldConfig",
    "batch_evaluate",
    "batch_generate",
    "request_key",
    "simulate_world",
]
