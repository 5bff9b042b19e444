"""Build fine-tuning manifests from self-generated images.

Every training prompt yields exactly one manifest entry. Seeds come either
from the mined top list for the prompt's task (cycled round-robin in prompt
order) or uniformly from the full 63-bit space. Rectified modes rewrite the
training text to describe what the image actually shows; entries that are
wrong and cannot be rewritten stay in the manifest with included=false so
downstream counts remain honest.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass

from .backends.base import GenerationRequest
from .corpus import task_of
from .errors import BackendError, CurationError, RectificationError
from .judging import judge_image, rectified_text
from .mining import task_to_str

MODES = ("reliable", "random", "reliable+rectified", "random+rectified")

RANDOM_SEED_SPACE = 2**63


@dataclass
class CurationEntry:
    prompt_id: str
    prompt_text: str
    task: str
    mode: str
    assigned_seed: int
    image_ref: str | None
    status: str
    correct: bool | None
    word: str | None = None
    value: int | None = None
    affirmed: bool | None = None
    description: str | None = None
    rectified_text: str | None = None
    included: bool = True
    reason: str | None = None

    @property
    def train_text(self) -> str:
        return self.rectified_text if self.rectified_text is not None else self.prompt_text


def curate(
    prompts, mode: str, gen_backend, eval_backend=None,
    top_seeds_by_task: dict | None = None, rng_seed: int = 0,
    filter_correct: bool = False, width: int = 768, height: int = 768,
) -> list[CurationEntry]:
    if mode not in MODES:
        raise CurationError(f"unknown mode {mode!r}; expected one of {MODES}")
    if eval_backend is None:
        eval_backend = gen_backend
    reliable = mode.startswith("reliable")
    rectify = mode.endswith("rectified")
    if reliable and not top_seeds_by_task:
        raise CurationError("reliable modes need mined top seeds per task")
    rng = random.Random(rng_seed)
    task_counters: dict = {}

    entries = []
    for prompt in prompts:
        task = task_of(prompt)
        if reliable:
            try:
                seeds = top_seeds_by_task[task]
            except KeyError:
                raise CurationError(
                    f"no mined seeds for task {task_to_str(task)}"
                ) from None
            if not seeds:
                raise CurationError(f"empty seed list for task {task_to_str(task)}")
            index = task_counters.get(task, 0)
            task_counters[task] = index + 1
            seed = int(seeds[index % len(seeds)])
        else:
            seed = rng.randrange(RANDOM_SEED_SPACE)

        entry = CurationEntry(
            prompt_id=prompt.id,
            prompt_text=prompt.text,
            task=task_to_str(task),
            mode=mode,
            assigned_seed=seed,
            image_ref=None,
            status="error",
            correct=None,
        )
        try:
            result = gen_backend.generate(
                GenerationRequest(prompt.text, seed, width, height)
            )
            judgment = judge_image(eval_backend, prompt, result.image_ref, "mining")
        except BackendError as exc:
            entry.included = False
            entry.reason = f"backend: {exc}"
            entries.append(entry)
            continue
        entry.image_ref = result.image_ref
        entry.status = judgment.status
        entry.correct = judgment.correct
        if judgment.verdicts:
            entry.word = judgment.verdicts[0].word
            entry.value = judgment.verdicts[0].value
        entry.affirmed = judgment.affirmed
        entry.description = judgment.description

        if rectify:
            try:
                entry.rectified_text = rectified_text(prompt, judgment)
            except RectificationError as exc:
                entry.included = False
                entry.reason = str(exc)
        if filter_correct and entry.correct is not True and entry.included:
            entry.included = False
            entry.reason = "filter-correct"
        entries.append(entry)
    return entries


_FIELDS = (
    "prompt_id", "prompt_text", "task", "mode", "assigned_seed", "image_ref",
    "status", "correct", "word", "value", "affirmed", "description",
    "rectified_text", "included", "reason",
)


def write_manifest(entries, path):
    with open(path, "w", encoding="utf-8") as fh:
        for entry in entries:
            record = {name: getattr(entry, name) for name in _FIELDS}
            fh.write(json.dumps(record, ensure_ascii=False,
                                separators=(",", ":")) + "\n")


def load_manifest(path) -> list[CurationEntry]:
    entries = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except ValueError as exc:
                raise CurationError(f"not JSON: {exc}", line=lineno) from exc
            missing = [name for name in _FIELDS if name not in record]
            if missing:
                raise CurationError(f"missing fields {missing}", line=lineno)
            entry = CurationEntry(**{name: record[name] for name in _FIELDS})
            if entry.mode not in MODES:
                raise CurationError(f"unknown mode {entry.mode!r}", line=lineno)
            if entry.rectified_text is not None and not entry.mode.endswith("rectified"):
                raise CurationError(
                    "rectified_text present outside a rectified mode", line=lineno
                )
            if not entry.included and not entry.reason:
                raise CurationError(
                    "excluded entry carries no reason", line=lineno
                )
            entries.append(entry)
    return entries


def manifest_stats(entries) -> dict:
    total = len(entries)
    included = sum(1 for e in entries if e.included)
    correct = sum(1 for e in entries if e.correct is True)
    rewritten = sum(
        1 for e in entries
        if e.rectified_text is not None and e.rectified_text != e.prompt_text
    )
    per_task: dict = {}
    for entry in entries:
        bucket = per_task.setdefault(entry.task, {"total": 0, "correct": 0})
        bucket["total"] += 1
        if entry.correct is True:
            bucket["correct"] += 1
    return {
        "total": total,
        "included": included,
        "excluded": total - included,
        "correct": correct,
        "correct_fraction": correct / total if total else 0.0,
        "rectified_changed": rewritten,
        "per_task": dict(sorted(per_task.items())),
    }


# ---------------------------------------------------------------------------
# Fine-tuning hyperparameters per model family.

MODEL_FAMILIES = ("unet-sd21", "transformer-pixart")


@dataclass(frozen=True)
class FinetuneConfig:
    model_family: str
    trainable_selector: dict
    iterations: int
    learning_rate: float
    per_device_batch: int
    devices: int
    grad_accum: int
    grad_clip: float | None = None
    base_learning_rate: float | None = None

    @property
    def effective_batch(self) -> int:
        return self.per_device_batch * self.devices * self.grad_accum

    def to_payload(self) -> dict:
        return {
            "model_family": self.model_family,
            "trainable_selector": self.trainable_selector,
            "iterations": self.iterations,
            "learning_rate": self.learning_rate,
            "per_device_batch": self.per_device_batch,
            "devices": self.devices,
            "grad_accum": self.grad_accum,
            "effective_batch": self.effective_batch,
            "grad_clip": self.grad_clip,
            "base_learning_rate": self.base_learning_rate,
        }


def finetune_config(model_family: str) -> FinetuneConfig:
    """Training recipe for each supported backbone. The attention selector
    is structural: query/key projections only, and for the unet the first
    down-sampling block and the last up-sampling block stay frozen."""
    if model_family == "unet-sd21":
        base = 1e-6
        devices, batch, accum = 2, 16, 4
        return FinetuneConfig(
            model_family=model_family,
            trainable_selector={
                "projections": ["q", "k"],
                "exclude_blocks": ["first_down", "last_up"],
            },
            iterations=5000,
            learning_rate=base * devices * batch * accum,
            per_device_batch=batch,
            devices=devices,
            grad_accum=accum,
            base_learning_rate=base,
        )
    if model_family == "transformer-pixart":
        return FinetuneConfig(
            model_family=model_family,
            trainable_selector={
                "projections": ["q", "k"],
                "exclude_blocks": [],
            },
            iterations=2000,
            learning_rate=2e-5,
            per_device_batch=64,
            devices=1,
            grad_accum=1,
            grad_clip=0.01,
        )
    raise CurationError(
        f"unknown model family {model_family!r}; expected one of {MODEL_FAMILIES}"
    )
