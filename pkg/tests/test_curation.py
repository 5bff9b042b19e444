import json

import pytest

from seedmine.corpus import build_corpus
from seedmine.curation import (
    MODEL_FAMILIES,
    MODES,
    RANDOM_SEED_SPACE,
    curate,
    finetune_config,
    load_manifest,
    manifest_stats,
    write_manifest,
)
from seedmine.errors import CurationError


@pytest.fixture(scope="module")
def train_prompts(catalog):
    corpus = build_corpus(catalog)
    return [p for p in corpus["numerical"] if p.split == "train"][:120]


@pytest.fixture(scope="module")
def spatial_prompts(catalog):
    corpus = build_corpus(catalog)
    return [p for p in corpus["spatial"] if p.split == "train"][:80]


@pytest.fixture()
def top_seeds(world):
    from seedmine.corpus import RELATIONS
    seeds = {("numerical", q): [world.hero_seed, 1, 2] for q in range(2, 7)}
    seeds.update({("spatial", r): [world.hero_seed, 1, 2] for r in RELATIONS})
    return seeds


def test_one_entry_per_prompt(train_prompts, backend, top_seeds):
    entries = curate(train_prompts, "reliable", backend,
                     top_seeds_by_task=top_seeds)
    assert len(entries) == len(train_prompts)
    assert [e.prompt_id for e in entries] == [p.id for p in train_prompts]


def test_reliable_round_robin(train_prompts, backend, top_seeds):
    entries = curate(train_prompts, "reliable", backend,
                     top_seeds_by_task=top_seeds)
    by_task = {}
    for entry in entries:
        by_task.setdefault(entry.task, []).append(entry.assigned_seed)
    for task, seeds in by_task.items():
        expected = [top_seeds[("numerical", int(task.split(":")[1]))][i % 3]
                    for i in range(len(seeds))]
        assert seeds == expected


def test_random_seed_assignment_deterministic(train_prompts, backend):
    a = curate(train_prompts, "random", backend, rng_seed=5)
    b = curate(train_prompts, "random", backend, rng_seed=5)
    assert [e.assigned_seed for e in a] == [e.assigned_seed for e in b]
    c = curate(train_prompts, "random", backend, rng_seed=6)
    assert [e.assigned_seed for e in a] != [e.assigned_seed for e in c]
    assert all(0 <= e.assigned_seed < RANDOM_SEED_SPACE for e in a)


def test_random_seeds_span_wide_space(train_prompts, backend):
    entries = curate(train_prompts, "random", backend, rng_seed=0)
    seeds = [e.assigned_seed for e in entries]
    assert len(set(seeds)) == len(seeds)  # 63-bit space, collisions absurd
    assert max(seeds) > 100  # far outside the candidate pool


def test_reliable_needs_seed_table(train_prompts, backend):
    with pytest.raises(CurationError):
        curate(train_prompts, "reliable", backend)


def test_unknown_mode_rejected(train_prompts, backend):
    with pytest.raises(CurationError):
        curate(train_prompts, "excellent", backend)


def test_rectified_mode_rewrites_failures(train_prompts, backend, top_seeds):
    entries = curate(train_prompts, "reliable+rectified", backend,
                     top_seeds_by_task=top_seeds)
    changed = [e for e in entries if e.rectified_text is not None
               and e.rectified_text != e.prompt_text]
    assert changed  # bulk probabilities guarantee some failures
    for entry in changed:
        assert entry.correct is not True
        assert entry.train_text == entry.rectified_text
    kept = [e for e in entries if e.correct is True]
    for entry in kept:
        assert entry.train_text == entry.prompt_text


def test_plain_mode_never_rectifies(train_prompts, backend, top_seeds):
    entries = curate(train_prompts, "reliable", backend,
                     top_seeds_by_task=top_seeds)
    assert all(e.rectified_text is None for e in entries)


def test_spatial_rectification_uses_description(spatial_prompts, backend,
                                                top_seeds):
    entries = curate(spatial_prompts, "random+rectified", backend, rng_seed=3)
    rewritten = [e for e in entries
                 if e.rectified_text and e.rectified_text != e.prompt_text]
    assert rewritten
    for entry in rewritten:
        assert entry.rectified_text == entry.description


def test_filter_correct_drops_failures(train_prompts, backend, top_seeds):
    entries = curate(train_prompts, "reliable", backend,
                     top_seeds_by_task=top_seeds, filter_correct=True)
    assert len(entries) == len(train_prompts)
    for entry in entries:
        if entry.correct is not True:
            assert entry.included is False
            assert entry.reason


def test_backend_failure_excludes_entry(train_prompts, backend, top_seeds):
    class Flaky:
        backend_tag = "flaky"

        def __init__(self, inner):
            self.inner = inner
            self.n = 0

        def generate(self, request):
            self.n += 1
            if self.n % 7 == 0:
                from seedmine.errors import BackendError
                raise BackendError("synthetic outage", retryable=True)
            return self.inner.generate(request)

        def evaluate(self, request):
            return self.inner.evaluate(request)

    flaky = Flaky(backend)
    entries = curate(train_prompts[:30], "random", flaky, rng_seed=1)
    assert len(entries) == 30
    failed = [e for e in entries if e.status == "error"]
    assert failed
    for entry in failed:
        assert entry.included is False
        assert "backend" in entry.reason


def test_manifest_roundtrip(tmp_path, train_prompts, backend, top_seeds):
    entries = curate(train_prompts, "reliable+rectified", backend,
                     top_seeds_by_task=top_seeds)
    path = tmp_path / "manifest.jsonl"
    write_manifest(entries, path)
    assert load_manifest(path) == entries


def test_manifest_bytes_deterministic(tmp_path, train_prompts, backend,
                                      top_seeds):
    a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    write_manifest(curate(train_prompts, "reliable", backend,
                          top_seeds_by_task=top_seeds), a)
    write_manifest(curate(train_prompts, "reliable", backend,
                          top_seeds_by_task=top_seeds), b)
    assert a.read_bytes() == b.read_bytes()


def test_load_manifest_reports_bad_line(tmp_path, train_prompts, backend):
    entries = curate(train_prompts[:5], "random", backend)
    path = tmp_path / "manifest.jsonl"
    write_manifest(entries, path)
    lines = path.read_text().splitlines()
    lines[2] = "{broken json"
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(CurationError) as err:
        load_manifest(path)
    assert "line 3" in str(err.value)


def test_load_manifest_rejects_unknown_mode(tmp_path, train_prompts, backend):
    entries = curate(train_prompts[:3], "random", backend)
    path = tmp_path / "manifest.jsonl"
    write_manifest(entries, path)
    records = [json.loads(l) for l in path.read_text().splitlines()]
    records[0]["mode"] = "bogus"
    path.write_text("\n".join(json.dumps(r) for r in records) + "\n")
    with pytest.raises(CurationError):
        load_manifest(path)


def test_load_manifest_rejects_rectified_in_plain_mode(tmp_path, train_prompts,
                                                       backend):
    entries = curate(train_prompts[:3], "random", backend)
    path = tmp_path / "manifest.jsonl"
    write_manifest(entries, path)
    records = [json.loads(l) for l in path.read_text().splitlines()]
    records[1]["rectified_text"] = "Five apples, somewhere"
    path.write_text("\n".join(json.dumps(r) for r in records) + "\n")
    with pytest.raises(CurationError):
        load_manifest(path)


def test_manifest_stats(train_prompts, backend, top_seeds):
    entries = curate(train_prompts, "reliable", backend,
                     top_seeds_by_task=top_seeds)
    stats = manifest_stats(entries)
    assert stats["total"] == len(train_prompts)
    assert stats["included"] + stats["excluded"] == stats["total"]
    assert 0.0 <= stats["correct_fraction"] <= 1.0
    assert sum(t["total"] for t in stats["per_task"].values()) == stats["total"]


def test_modes_constant():
    assert MODES == ("reliable", "random", "reliable+rectified",
                     "random+rectified")


def test_finetune_config_attention_projections():
    config = finetune_config("unet-sd21")
    assert config.trainable_selector["projections"] == ["q", "k"]
    assert config.trainable_selector["exclude_blocks"] == [
        "first_down", "last_up"
    ]
    assert config.iterations == 5000
    assert config.per_device_batch == 16
    assert config.devices == 2
    assert config.grad_accum == 4
    assert config.effective_batch == 128


def test_finetune_lr_scales_with_batch():
    config = finetune_config("unet-sd21")
    assert config.learning_rate == pytest.approx(
        config.base_learning_rate * config.effective_batch
    )
    assert config.learning_rate == pytest.approx(1.28e-4)


def test_finetune_config_transformer():
    config = finetune_config("transformer-pixart")
    assert config.iterations == 2000
    assert config.learning_rate == pytest.approx(2e-5)
    assert config.grad_clip == pytest.approx(0.01)
    assert config.effective_batch == 64
    assert config.trainable_selector["exclude_blocks"] == []


def test_finetune_config_unknown_family():
    with pytest.raises(CurationError):
        finetune_config("mystery-model")
    assert set(MODEL_FAMILIES) == {"unet-sd21", "transformer-pixart"}


def test_finetune_payload_shape():
    payload = finetune_config("unet-sd21").to_payload()
    assert payload["model_family"] == "unet-sd21"
    assert payload["learning_rate"] == pytest.approx(1.28e-4)
    assert json.dumps(payload)  # serializable as-is
