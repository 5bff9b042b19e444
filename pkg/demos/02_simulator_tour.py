"""
A tour of the planted-structure simulator
=========================================

The simulator stands in for a diffusion model plus a judging model. Every
seed hashes to one of twelve latent object arrangements; each (arrangement,
task) pair has a fixed success probability, and exactly one candidate seed
(the hero) is wired to a reserved arrangement with a visibly higher rate.
Mining therefore has a unique, known recovery target, and because everything
is a pure function of (world_seed, request), any stage can be re-run and
must reproduce itself byte for byte.
"""

from collections import Counter

from seedmine.backends.base import EvalRequest, GenerationRequest
from seedmine.backends.simulator import SimulatorBackend, simulate_world
from seedmine.vlm import numerical_query, parse_quantity

world = simulate_world(world_seed=7)
backend = SimulatorBackend(world)

print(f"hero seed: {world.hero_seed} "
      f"(arrangement {world.arrangement_of(world.hero_seed)} "
      f"of {world.arrangement_count})")

# seeds bucket into the base arrangements; only the hero gets the last one
buckets = Counter(world.arrangement_of(s) for s in range(100))
print("arrangement occupancy over seeds 0..99:",
      dict(sorted(buckets.items())))

# per-task success rates for three representative seeds
task = ("numerical", 4)
for seed in (world.hero_seed, 0, 1):
    print(f"  seed {seed:3d}: expected accuracy "
          f"{world.expected_accuracy(task, seed):.2f} on {task}")

# generate, then interrogate the image like a judging model would
prompt = "Four apples, in an old European town"
result = backend.generate(GenerationRequest(prompt, seed=world.hero_seed))
print(f"\nimage ref: {result.image_ref[:48]}...")
print(f"aesthetic score: {result.aesthetic:.2f}")

question = numerical_query("apples")
answer = backend.evaluate(EvalRequest(result.image_ref, question)).answer
verdict = parse_quantity(answer, "apples")
print(f"Q: {question}")
print(f"A: {answer}")
print(f"parsed: word={verdict.word!r} value={verdict.value}")

# ground truth is available out of band, so tests never have to trust the
# question-answer path they are checking
truth = backend.ground_truth(result.image_ref)
print(f"planted truth: {truth['counts']} (success={truth['success']})")

# the same request on a different world is a different universe
other = SimulatorBackend(simulate_world(world_seed=8))
other_ref = other.generate(GenerationRequest(prompt, seed=world.hero_seed)).image_ref
print(f"\nsame request, world 8: refs differ -> {other_ref != result.image_ref}")
