"""
Mining reliable seeds
=====================

Score every candidate seed on a fixed per-task prompt sheet, rank by
accuracy, and ask whether accuracy depends on the seed at all (chi-squared
over the top ranks). Desk-scale budgets here; pass nothing and the library
defaults to the full 60-images-per-seed protocol.
"""

import time

from seedmine import mining
from seedmine.backends.simulator import SimulatorBackend, simulate_world
from seedmine.catalog import default_catalog

catalog = default_catalog()
world = simulate_world(world_seed=424)
backend = SimulatorBackend(world)

plan = mining.build_mining_plan(
    catalog, ("numerical", 4),
    seeds=tuple(range(100)), budget=60,
)
print(f"plan: task={plan.task} seeds={len(plan.seeds)} "
      f"budget={plan.budget} images/seed "
      f"({len(plan.seeds) * plan.budget} generations)")

t0 = time.perf_counter()
report = mining.run_mining(plan, backend)
print(f"mined in {time.perf_counter() - t0:.2f}s\n")

print("rank  seed  accuracy   (planted)")
for rank, sc in enumerate(report.scorecards[:8], start=1):
    planted = world.expected_accuracy(plan.task, sc.seed)
    marker = "  <- hero" if sc.seed == world.hero_seed else ""
    print(f"{rank:4d}  {sc.seed:4d}  {sc.accuracy:8.3f}   ({planted:.2f}){marker}")

print(f"\ntop 3 seeds: {report.top_seeds(3)}")
print(f"seed-vs-accuracy dependence: chi2={report.chi_squared_stat:.2f} "
      f"dof={report.dof} p={report.p_value:.2e}")

# do the mined winners hold up on categories mining never saw?
stragglers = [sc.seed for sc in report.scorecards[-3:]]
probe = mining.generalization_probe(
    catalog,
    report.top_seeds(3) + stragglers,
    backend,
    quantity=4,
    categories=[c.name for c in catalog.categories_for("train")[15:25]],
    budget=40,
)
print("\nheld-out category probe (top 3 vs bottom 3):")
for sc in probe:
    print(f"  seed {sc.seed:4d}: {sc.accuracy:.3f}")
