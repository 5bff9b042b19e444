"""Deterministic stand-in for a diffusion model plus a judging model.

The world is a small planted-structure universe: every seed hashes to one of
A latent arrangements, and each (arrangement, task) pair has a fixed success
probability. One candidate seed (the hero) is wired to a reserved arrangement
with a visibly higher success rate, so the strongest seed is unique and
mining has a well-defined recovery target. Everything an image "contains" is
recomputable from its reference string, so generation and evaluation are
pure functions of (world_seed, request) and re-running any stage is
idempotent.
"""

from __future__ import annotations

import base64
import hashlib
import json
import re
from dataclasses import dataclass

import numpy as np

from .. import corpus as corpus_mod
from ..catalog import Catalog, default_catalog
from ..corpus import PHRASE_TO_RELATION, RELATION_PHRASES, RELATIONS
from ..errors import BackendError
from ..words import value_to_word
from .base import (
    EvalRequest,
    EvalResponse,
    GenerationRequest,
    GenerationResult,
    HealthStatus,
)

TASKS = tuple(
    [("numerical", q) for q in range(2, 9)]
    + [("spatial", r) for r in RELATIONS]
)


def _digest(*parts) -> bytes:
    joined = "\x1f".join(str(p) for p in parts)
    return hashlib.sha256(joined.encode("utf-8")).digest()


def _hash01(*parts) -> float:
    return int.from_bytes(_digest(*parts)[:8], "big") / 2**64


def _hash_int(*parts, mod: int) -> int:
    return int.from_bytes(_digest(*parts)[:8], "big") % mod


@dataclass(frozen=True)
class WorldConfig:
    world_seed: int = 0
    arrangement_count: int = 12
    candidate_seeds: tuple = tuple(range(100))
    hero_success: float = 0.6
    good_success: float = 0.40
    bulk_low: float = 0.15
    bulk_high: float = 0.30
    noise_scale: float = 0.25
    feature_dim: int = 16
    attention_shape: tuple = (16, 16)
    plant_hero: bool = True
    flat_success: float | None = None


class SimulatorWorld:
    def __init__(self, config: WorldConfig):
        a = config.arrangement_count
        if a < 1:
            raise BackendError("arrangement_count must be >= 1")
        if config.plant_hero and a < 2:
            raise BackendError("planting a hero needs at least 2 arrangements")
        if not 0 <= config.noise_scale < 0.5:
            raise BackendError("noise_scale must lie in [0, 0.5)")
        self.config = config
        self.arrangement_count = a
        self.noise_scale = config.noise_scale
        self.feature_dim = config.feature_dim

        rng = np.random.default_rng(config.world_seed)
        self.success_table: dict = {}
        for task in TASKS:
            if config.flat_success is not None:
                probs = np.full(a, config.flat_success)
            else:
                probs = rng.uniform(config.bulk_low, config.bulk_high, size=a)
                if a > 1:
                    good = int(rng.integers(0, a - 1))
                    probs[good] = config.good_success
                if config.plant_hero:
                    probs[a - 1] = config.hero_success
            self.success_table[task] = probs

        if config.plant_hero and config.candidate_seeds:
            self.hero_seed = int(
                rng.choice(np.asarray(config.candidate_seeds))
            )
        else:
            self.hero_seed = None

        self.prototype_masks = self._build_prototypes(rng)
        self.feature_centers = rng.normal(0.0, 1.0, size=(a, config.feature_dim))

    def _build_prototypes(self, rng) -> np.ndarray:
        h, w = self.config.attention_shape
        masks = np.zeros((self.arrangement_count, h, w), dtype=np.uint8)
        seen = set()
        for arr in range(self.arrangement_count):
            while True:
                mask = np.zeros((h, w), dtype=np.uint8)
                for _ in range(1 + arr % 4):
                    top = int(rng.integers(0, h - 2))
                    left = int(rng.integers(0, w - 2))
                    hh = int(rng.integers(2, max(3, h // 2)))
                    ww = int(rng.integers(2, max(3, w // 2)))
                    mask[top:min(top + hh, h), left:min(left + ww, w)] = 1
                if mask.any() and not mask.all() and mask.tobytes() not in seen:
                    break
            seen.add(mask.tobytes())
            masks[arr] = mask
        return masks

    # -- planted structure ---------------------------------------------------

    def arrangement_of(self, seed: int) -> int:
        a = self.arrangement_count
        if a == 1:
            return 0
        if self.hero_seed is not None:
            if seed == self.hero_seed:
                return a - 1
            return _hash_int(self.config.world_seed, "arr", seed, mod=a - 1)
        return _hash_int(self.config.world_seed, "arr", seed, mod=a)

    def expected_accuracy(self, task, seed: int) -> float:
        return float(self.success_table[task][self.arrangement_of(seed)])

    def random_seed_expected_accuracy(self, task) -> float:
        """Mean success for a seed drawn uniformly from the 63-bit space:
        such seeds land on the base arrangements, never the reserved one."""
        probs = self.success_table[task]
        if self.hero_seed is not None and self.arrangement_count > 1:
            return float(probs[: self.arrangement_count - 1].mean())
        return float(probs.mean())


def simulate_world(config: WorldConfig | None = None, **overrides) -> SimulatorWorld:
    if config is None:
        config = WorldConfig(**overrides)
    elif overrides:
        raise BackendError("pass either a config or keyword overrides, not both")
    return SimulatorWorld(config)


# ---------------------------------------------------------------------------


class SimulatorBackend:
    """Image generator and question answerer backed by a SimulatorWorld."""

    backend_tag = "simulator"
    max_concurrency = None

    def __init__(self, world: SimulatorWorld, catalog: Catalog | None = None):
        self.world = world
        self.catalog = catalog or default_catalog()
        self._parse_cache: dict = {}

    # -- prompt understanding -------------------------------------------------

    def _fields(self, prompt_text: str) -> dict:
        fields = self._parse_cache.get(prompt_text)
        if fields is None:
            fields = corpus_mod.parse_prompt(prompt_text, self.catalog)
            self._parse_cache[prompt_text] = fields
        return fields

    def _task(self, fields) -> tuple:
        if fields["kind"] == "spatial":
            return ("spatial", fields["relation"])
        if fields["kind"] == "multi_category":
            x, y = fields["quantity_pair"]
            return ("numerical", x + y)
        return ("numerical", fields["quantity"])

    # -- planted ground truth --------------------------------------------------

    def _truth(self, prompt_text: str, seed: int) -> dict:
        fields = self._fields(prompt_text)
        task = self._task(fields)
        ws = self.world.config.world_seed
        success = bool(
            _hash01(ws, "success", prompt_text, seed)
            < self.world.success_table[task][self.world.arrangement_of(seed)]
        )

        def wrong_count(target, tag):
            mode = _hash01(ws, "miss-mode", prompt_text, seed, tag)
            if mode < 0.08:
                return 23 + _hash_int(ws, "miss-big", prompt_text, seed, tag, mod=8)
            if mode < 0.16:
                return 0
            delta = (-2, -1, 1, 2)[
                _hash_int(ws, "miss-delta", prompt_text, seed, tag, mod=4)
            ]
            return max(0, target + delta) or target + 2

        if fields["kind"] in ("numerical", "out_of_scope"):
            target = fields["quantity"]
            count = target if success else wrong_count(target, "n")
            return {
                "kind": "numerical",
                "success": success,
                "counts": {fields["categories"][0]: count},
            }
        if fields["kind"] == "multi_category":
            x, y = fields["quantity_pair"]
            a, b = fields["categories"]
            if success:
                counts = {a: x, b: y}
            else:
                which = _hash_int(ws, "miss-which", prompt_text, seed, mod=3)
                counts = {
                    a: x if which == 1 else wrong_count(x, "a"),
                    b: y if which == 0 else wrong_count(y, "b"),
                }
            return {"kind": "multi_category", "success": success, "counts": counts}
        # spatial: on failure the image realizes some other relation
        target = fields["relation"]
        if success:
            realized = target
        else:
            others = [r for r in RELATIONS if r != target]
            realized = others[
                _hash_int(ws, "miss-rel", prompt_text, seed, mod=len(others))
            ]
        subject, obj = fields["categories"]
        return {
            "kind": "spatial",
            "success": success,
            "subject": subject,
            "object": obj,
            "relation": realized,
            "target_relation": target,
        }

    # -- backend interface -----------------------------------------------------

    def generate(self, req: GenerationRequest) -> GenerationResult:
        try:
            self._fields(req.prompt_text)  # reject prompts off the grammar early
        except Exception as exc:
            raise BackendError(f"cannot stage prompt: {exc}") from exc
        ws = self.world.config.world_seed
        payload = json.dumps(
            {"p": req.prompt_text, "s": req.seed, "w": req.width,
             "h": req.height, "ws": ws},
            ensure_ascii=False, separators=(",", ":"),
        )
        ref = "sim:" + base64.urlsafe_b64encode(payload.encode()).decode()
        arr = self.world.arrangement_of(req.seed)

        attention = None
        if req.want_attention:
            proto = self.world.prototype_masks[arr].astype(float)
            ns = self.world.noise_scale
            rng = np.random.default_rng(
                int.from_bytes(_digest(ws, "attn", req.prompt_text, req.seed)[:8], "big")
            )
            attention = proto * (1.0 - ns) + rng.random(proto.shape) * ns

        features = None
        if req.want_features:
            rng = np.random.default_rng(
                int.from_bytes(_digest(ws, "feat", req.prompt_text, req.seed)[:8], "big")
            )
            features = (
                self.world.feature_centers[arr]
                + 0.1 * rng.standard_normal(self.world.feature_dim)
            )

        aesthetic = 4.5 + _hash01(ws, "aes", req.prompt_text, req.seed)
        return GenerationResult(
            image_ref=ref,
            backend_tag=self.backend_tag,
            features=features,
            attention_map=attention,
            aesthetic=aesthetic,
        )

    def _decode_ref(self, image_ref: str) -> tuple[str, int]:
        if not image_ref.startswith("sim:"):
            raise BackendError(f"unknown image ref {image_ref!r}")
        try:
            payload = json.loads(base64.urlsafe_b64decode(image_ref[4:]))
            prompt_text, seed = payload["p"], int(payload["s"])
            ws = payload["ws"]
        except Exception as exc:
            raise BackendError(f"unknown image ref {image_ref!r}") from exc
        if ws != self.world.config.world_seed:
            raise BackendError(f"image ref {image_ref!r} belongs to another world")
        return prompt_text, seed

    def ground_truth(self, image_ref: str) -> dict:
        """Out-of-band access to what the simulated image really contains."""
        prompt_text, seed = self._decode_ref(image_ref)
        return self._truth(prompt_text, seed)

    def evaluate(self, req: EvalRequest) -> EvalResponse:
        prompt_text, seed = self._decode_ref(req.image_ref)
        truth = self._truth(prompt_text, seed)
        ws = self.world.config.world_seed

        def pick(variants, *tags):
            return variants[
                _hash_int(ws, "tmpl", req.image_ref, req.question, *tags,
                          mod=len(variants))
            ]

        q = req.question

        count_m = _COUNT_Q_RE.search(q)
        if count_m:
            asked = count_m.group(1)
            entry = self.catalog.category_by_plural(asked)
            name = entry.name if entry else asked
            count = truth.get("counts", {}).get(name, 0)
            return EvalResponse(self._count_answer(count, name, asked, pick))

        if truth["kind"] == "spatial":
            yn_m = _YESNO_Q_RE.search(q)
            if yn_m:
                sub_q, phrase_q, obj_q = yn_m.group(1), yn_m.group(2), yn_m.group(3)
                match = (
                    sub_q == truth["subject"]
                    and obj_q == truth["object"]
                    and PHRASE_TO_RELATION[phrase_q] == truth["relation"]
                )
                return EvalResponse(self._yes_no_answer(match, truth, phrase_q, pick))
            if q.startswith("Describe the positions") or "spatial relation" in q:
                return EvalResponse(self._description_answer(truth, pick))

        return EvalResponse("I cannot tell from this image.")

    def _count_answer(self, count, name, plural, pick) -> str:
        if count > 19:
            return "There are too many to count."
        if count == 0:
            return pick(
                (f"There are no {plural} in the image.",
                 f"No {plural} are visible in this scene."),
                "zero",
            )
        if count == 1:
            return pick(
                (f"There is one {name} in the image.",
                 f"Just one {name} appears in the picture."),
                "one",
            )
        word = value_to_word(count)
        return pick(
            (f"There are {word} {plural} in the image.",
             f"The image shows {word} {plural}.",
             f"I can see {word} {plural} in this picture."),
            "count",
        )

    def _description_answer(self, truth, pick) -> str:
        subject = self.catalog.category(truth["subject"])
        obj = self.catalog.category(truth["object"])
        phrase = RELATION_PHRASES[truth["relation"]]
        return pick(
            (f"{subject.article.capitalize()} {subject.name} is {phrase} "
             f"{obj.article} {obj.name}.",
             f"The image shows {subject.article} {subject.name} {phrase} "
             f"{obj.article} {obj.name}."),
            "desc",
        )

    def _yes_no_answer(self, match, truth, asked_phrase, pick) -> str:
        subject, obj = truth["subject"], truth["object"]
        realized = RELATION_PHRASES[truth["relation"]]
        if match:
            return pick(
                (f"Yes, the {subject} is {realized} the {obj}.",
                 "Yes, that is correct.",
                 "Yes."),
                "yes",
            )
        return pick(
            (f"No, the {subject} is not {asked_phrase} the {obj}.",
             f"No, the {subject} appears {realized} the {obj} instead.",
             "No."),
            "no",
        )

    def health(self) -> HealthStatus:
        return HealthStatus("ok", self.world.feature_dim, self.backend_tag)


_COUNT_Q_RE = re.compile(r"How many (\w+) are in this image")
_YESNO_Q_RE = re.compile(
    r"Is there an? (\w+) (?:positioned )?"
    r"(on the top of|on the left of|on the right of|under) an? (\w+) "
    r"in th(?:e|is) image"
)
