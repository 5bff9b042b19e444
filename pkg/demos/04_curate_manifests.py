"""
Curating fine-tuning manifests
==============================

Four curation modes build training manifests from the same prompt sheet:
random seeds, mined reliable seeds, and either of those with rectification,
where a prompt whose image came out wrong is rewritten to describe what the
image actually shows. The manifest ships with the exact fine-tuning recipe
for the target model family.
"""

import json
from pathlib import Path
from tempfile import TemporaryDirectory

from seedmine import mining
from seedmine.backends.simulator import SimulatorBackend, simulate_world
from seedmine.catalog import default_catalog
from seedmine.corpus import build_corpus
from seedmine.curation import curate, finetune_config, manifest_stats, write_manifest

catalog = default_catalog()
world = simulate_world(world_seed=11)
backend = SimulatorBackend(world)

# a small mined seed table (desk budget) for the reliable modes
top = {}
for quantity in (2, 3, 4, 5, 6):
    plan = mining.build_mining_plan(
        catalog, ("numerical", quantity), seeds=tuple(range(30)), budget=20,
    )
    top[("numerical", quantity)] = mining.run_mining(plan, backend).top_seeds(3)

prompts = [p for p in build_corpus(catalog)["numerical"] if p.split == "train"]
prompts = prompts[:300]  # keep the demo quick

for mode in ("random", "reliable", "reliable+rectified"):
    entries = curate(
        prompts, mode, backend,
        top_seeds_by_task=top if mode.startswith("reliable") else None,
        rng_seed=0,
    )
    stats = manifest_stats(entries)
    print(f"{mode:20s} correct {stats['correct']:3d}/{stats['total']} "
          f"rectified {stats['rectified_changed']:3d}")

# rectification in the flesh: find an entry whose text was rewritten
rectified = curate(prompts, "reliable+rectified", backend,
                   top_seeds_by_task=top, rng_seed=0)
changed = next(e for e in rectified
               if e.rectified_text and e.rectified_text != e.prompt_text)
print(f"\nprompt:    {changed.prompt_text}")
print(f"rectified: {changed.rectified_text}")
print(f"(the image really contained {changed.word} of them)")

# manifests persist as one JSON object per line next to the recipe
with TemporaryDirectory() as tmp:
    path = Path(tmp) / "reliable_rectified.jsonl"
    write_manifest(rectified, path)
    first = json.loads(path.read_text().splitlines()[0])
    print(f"\nmanifest row keys: {sorted(first)}")

for family in ("unet-sd21", "transformer-pixart"):
    config = finetune_config(family)
    print(f"\n{family}: {config.iterations} iters, "
          f"lr {config.learning_rate:g}, batch {config.effective_batch}")
    print(f"  trainable projections: {config.trainable_selector['projections']}")
    print(f"  frozen blocks:         {config.trainable_selector['exclude_blocks']}")
