"""Seed scoring: generate with every candidate seed, judge every image, rank.

A mining task is one (kind, selector) pair: counting tasks per quantity,
spatial tasks per relation. At paper scale a numerical task covers 100
candidate seeds x 60 images (15 train categories x 4 train settings), i.e.
30,000 images across the five in-scope quantities; spatial tasks use 80
images per seed (20 gated scenes x 4 settings).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

from .backends.base import GenerationRequest, request_key
from .catalog import Catalog
from .corpus import (
    RELATIONS,
    PromptSpec,
    build_spatial_scenes,
    compose_spatial,
    heuristic_gate,
    prompt_from_record,
    prompt_to_record,
    _make_prompt,
)
from .errors import BackendError, MetricsError, PlanError, RunInvalidError
from .judging import judge_image
from .runs import RecordStore, RunDir, read_json, write_json
from .stats import chi_squared_independence
from .words import quantity_word

log = logging.getLogger(__name__)

DEFAULT_SEEDS = tuple(range(100))
DEFAULT_TOP_K = 3
TOP_K_ABLATION = (1, 3, 10, 20, 30, 50)
NUMERICAL_BUDGET = 60
SPATIAL_BUDGET = 80
PROBE_BUDGET = 120
MINING_CATEGORY_COUNT = 15
MINING_SETTING_COUNT = 4
UNEVALUATED_CAP = 0.02


def task_to_str(task) -> str:
    return f"{task[0]}:{task[1]}"


def parse_task(text: str):
    kind, _, sel = text.partition(":")
    if kind == "numerical":
        try:
            return ("numerical", int(sel))
        except ValueError:
            raise PlanError(f"bad numerical task {text!r}") from None
    if kind == "spatial":
        if sel not in RELATIONS:
            raise PlanError(f"unknown relation {sel!r}")
        return ("spatial", sel)
    raise PlanError(f"unknown task {text!r}")


@dataclass(frozen=True)
class SeedScorecard:
    seed: int
    correct: int
    evaluated: int
    unevaluated: int = 0

    @property
    def accuracy(self) -> float:
        return self.correct / self.evaluated if self.evaluated else 0.0


@dataclass
class MiningPlan:
    task: tuple
    seeds: tuple
    budget: int
    prompts: list
    width: int = 768
    height: int = 768

    @property
    def total_requests(self) -> int:
        return len(self.seeds) * self.budget

    def to_payload(self) -> dict:
        return {
            "task": task_to_str(self.task),
            "seeds": list(self.seeds),
            "budget": self.budget,
            "width": self.width,
            "height": self.height,
            "prompts": [prompt_to_record(p) for p in self.prompts],
        }

    @classmethod
    def from_payload(cls, payload: dict, catalog: Catalog) -> "MiningPlan":
        return cls(
            task=parse_task(payload["task"]),
            seeds=tuple(payload["seeds"]),
            budget=payload["budget"],
            prompts=[prompt_from_record(r, catalog) for r in payload["prompts"]],
            width=payload.get("width", 768),
            height=payload.get("height", 768),
        )


def _cycle_to_budget(prompts, budget: int):
    if not prompts:
        raise PlanError("no prompts available for this task")
    return [prompts[i % len(prompts)] for i in range(budget)]


def mining_prompts(catalog: Catalog, task, rng_seed: int = 0) -> list[PromptSpec]:
    """Base prompt set for one task: the first 15 train categories crossed
    with the first 4 train settings (counting), or the first 20 gated scenes
    crossed with the same settings (spatial)."""
    settings = catalog.settings_for("train")[:MINING_SETTING_COUNT]
    kind, selector = task
    if kind == "numerical":
        if not 2 <= selector <= 8:
            raise PlanError(f"quantity {selector} outside 2..8")
        prompts = []
        for category in catalog.categories_for("train")[:MINING_CATEGORY_COUNT]:
            for setting in settings:
                text = (
                    f"{quantity_word(selector)} {category.plural}, "
                    f"{setting.render()}"
                )
                prompt_kind = "numerical" if selector <= 6 else "out_of_scope"
                prompts.append(
                    _make_prompt(prompt_kind, "train", text, setting,
                                 (category,), quantity=selector)
                )
        return prompts
    if kind == "spatial":
        rel_index = RELATIONS.index(selector)
        scenes = build_spatial_scenes(
            catalog, selector, 20, heuristic_gate, "train",
            rng_seed=rng_seed * 1000 + rel_index,
        )
        return compose_spatial(scenes, settings, 20)
    raise PlanError(f"unknown task kind {kind!r}")


def build_mining_plan(
    catalog: Catalog, task, seeds=DEFAULT_SEEDS, budget: int | None = None,
    rng_seed: int = 0, width: int = 768, height: int = 768,
) -> MiningPlan:
    seeds = tuple(seeds)
    if not seeds:
        raise PlanError("candidate seed list is empty")
    if len(set(seeds)) != len(seeds):
        raise PlanError("candidate seeds must be distinct")
    if budget is None:
        budget = NUMERICAL_BUDGET if task[0] == "numerical" else SPATIAL_BUDGET
    if budget < 1:
        raise PlanError(f"budget {budget} must be >= 1")
    base = mining_prompts(catalog, task, rng_seed)
    return MiningPlan(task, seeds, budget, _cycle_to_budget(base, budget),
                      width, height)


# ---------------------------------------------------------------------------


def _execute_one(gen_backend, eval_backend, prompt, seed, width, height, key):
    record = {
        "key": key,
        "seed": seed,
        "prompt_id": prompt.id,
        "prompt_text": prompt.text,
        "target": prompt.quantity if prompt.kind != "spatial" else prompt.relation,
        "status": "error",
        "correct": None,
        "word": None,
        "value": None,
        "affirmed": None,
        "description": None,
        "answers": [],
        "error": None,
    }
    try:
        result = gen_backend.generate(
            GenerationRequest(prompt.text, seed, width, height)
        )
        judgment = judge_image(eval_backend, prompt, result.image_ref, "mining")
    except BackendError as exc:
        record["error"] = str(exc)
        return record
    record["status"] = judgment.status
    record["correct"] = judgment.correct
    record["answers"] = judgment.answers
    if judgment.verdicts:
        record["word"] = judgment.verdicts[0].word
        record["value"] = judgment.verdicts[0].value
    record["affirmed"] = judgment.affirmed
    record["description"] = judgment.description
    return record


def _score_seeds(
    prompts, seeds, gen_backend, eval_backend, width, height, budget,
    store: RecordStore | None = None, task=None,
    unevaluated_cap: float = UNEVALUATED_CAP,
) -> tuple[list[SeedScorecard], int]:
    scorecards = []
    unevaluated_total = 0
    task_tag = task_to_str(task) if task else None
    for seed in seeds:
        correct = evaluated = unevaluated = 0
        for prompt in prompts:
            key = request_key(
                GenerationRequest(prompt.text, seed, width, height)
            )
            record = store.get(key) if store else None
            if record is None:
                record = _execute_one(
                    gen_backend, eval_backend, prompt, seed, width, height, key
                )
                if task_tag:
                    record["task"] = task_tag
                if store is not None:
                    store.append(record)
            if record["status"] == "ok":
                evaluated += 1
                if record["correct"]:
                    correct += 1
            else:
                unevaluated += 1
        if unevaluated > unevaluated_cap * budget:
            raise RunInvalidError(
                f"seed {seed}: {unevaluated} of {budget} items unevaluated, "
                f"above the {unevaluated_cap:.0%} cap"
            )
        unevaluated_total += unevaluated
        scorecards.append(SeedScorecard(seed, correct, evaluated, unevaluated))
        if store is not None:
            store.flush()
    return scorecards, unevaluated_total


def rank_seeds(scorecards) -> list[SeedScorecard]:
    """Accuracy descending, seed id ascending on ties. Total and stable."""
    return sorted(scorecards, key=lambda sc: (-sc.accuracy, sc.seed))


def select_top_k(ranked, k: int = DEFAULT_TOP_K) -> list[int]:
    if not 1 <= k <= len(ranked):
        raise PlanError(f"k={k} outside 1..{len(ranked)}")
    return [sc.seed for sc in ranked[:k]]


@dataclass
class MiningReport:
    task: tuple
    budget: int
    scorecards: list  # ranked
    chi_squared_stat: float | None
    dof: int | None
    p_value: float | None
    unevaluated_total: int
    backend_tag: str

    def top_seeds(self, k: int = DEFAULT_TOP_K) -> list[int]:
        return select_top_k(self.scorecards, k)

    def to_payload(self) -> dict:
        return {
            "schema_version": 1,
            "task": task_to_str(self.task),
            "budget": self.budget,
            "scorecards": [
                {
                    "seed": sc.seed,
                    "correct": sc.correct,
                    "evaluated": sc.evaluated,
                    "unevaluated": sc.unevaluated,
                    "accuracy": sc.accuracy,
                }
                for sc in self.scorecards
            ],
            "chi_squared_stat": self.chi_squared_stat,
            "dof": self.dof,
            "p_value": self.p_value,
            "unevaluated_total": self.unevaluated_total,
            "backend_tag": self.backend_tag,
        }

    @classmethod
    def from_payload(cls, payload: dict) -> "MiningReport":
        return cls(
            task=parse_task(payload["task"]),
            budget=payload["budget"],
            scorecards=[
                SeedScorecard(r["seed"], r["correct"], r["evaluated"],
                              r.get("unevaluated", 0))
                for r in payload["scorecards"]
            ],
            chi_squared_stat=payload.get("chi_squared_stat"),
            dof=payload.get("dof"),
            p_value=payload.get("p_value"),
            unevaluated_total=payload.get("unevaluated_total", 0),
            backend_tag=payload.get("backend_tag", "unknown"),
        )


def run_mining(
    plan: MiningPlan, gen_backend, eval_backend=None,
    run_dir: RunDir | None = None, unevaluated_cap: float = UNEVALUATED_CAP,
) -> MiningReport:
    """Score every candidate seed under the plan. With a run directory the
    loop is resumable: records already on disk are reused, never re-requested.
    """
    if eval_backend is None:
        eval_backend = gen_backend
    store = None
    if run_dir is not None:
        if not isinstance(run_dir, RunDir):
            run_dir = RunDir(run_dir)
        payload = plan.to_payload()
        if run_dir.plan_path.exists():
            if read_json(run_dir.plan_path) != payload:
                raise PlanError(
                    f"{run_dir.plan_path} holds a different plan; refusing to mix runs"
                )
        else:
            write_json(run_dir.plan_path, payload)
        store = RecordStore(run_dir.records_path)
    try:
        scorecards, unevaluated_total = _score_seeds(
            plan.prompts, plan.seeds, gen_backend, eval_backend,
            plan.width, plan.height, plan.budget, store=store, task=plan.task,
            unevaluated_cap=unevaluated_cap,
        )
    finally:
        if store is not None:
            store.close()
    ranked = rank_seeds(scorecards)
    contingency = [[sc.correct, sc.evaluated - sc.correct] for sc in ranked]
    try:
        stat, dof, p_value = chi_squared_independence(contingency)
    except MetricsError as exc:
        log.warning("independence test skipped: %s", exc)
        stat = dof = p_value = None
    report = MiningReport(
        task=plan.task,
        budget=plan.budget,
        scorecards=ranked,
        chi_squared_stat=stat,
        dof=dof,
        p_value=p_value,
        unevaluated_total=unevaluated_total,
        backend_tag=getattr(gen_backend, "backend_tag", "unknown"),
    )
    if run_dir is not None:
        write_json(run_dir.report_path, report.to_payload())
    return report


def recount_from_records(records) -> dict[int, tuple[int, int]]:
    """Brute-force (correct, evaluated) per seed straight from raw records;
    the oracle the ranked scorecards must agree with."""
    tallies: dict[int, list[int]] = {}
    for record in records:
        correct, evaluated = tallies.setdefault(record["seed"], [0, 0])
        if record["status"] == "ok":
            evaluated += 1
            if record["correct"]:
                correct += 1
        tallies[record["seed"]] = [correct, evaluated]
    return {seed: (c, e) for seed, (c, e) in tallies.items()}


def generalization_probe(
    catalog: Catalog, seeds, gen_backend, eval_backend=None,
    quantity: int = 4, categories=None, settings=None,
    budget: int = PROBE_BUDGET, width: int = 768, height: int = 768,
) -> list[SeedScorecard]:
    """Score already-mined seeds on categories mining never saw, to check
    that seed quality is not tied to the mining categories. Returns ranked
    scorecards over the probe set."""
    if eval_backend is None:
        eval_backend = gen_backend
    mining_names = {
        c.name for c in catalog.categories_for("train")[:MINING_CATEGORY_COUNT]
    }
    if categories is None:
        categories = catalog.categories_for("train")[
            MINING_CATEGORY_COUNT:MINING_CATEGORY_COUNT + 30
        ]
    else:
        categories = [
            catalog.category(c) if isinstance(c, str) else c
            for c in categories
        ]
    overlap = sorted(c.name for c in categories if c.name in mining_names)
    if overlap:
        raise PlanError(f"probe categories overlap mining set: {overlap}")
    if settings is None:
        settings = catalog.settings_for("train")[:MINING_SETTING_COUNT]
    base = []
    for category in categories:
        for setting in settings:
            text = f"{quantity_word(quantity)} {category.plural}, {setting.render()}"
            base.append(
                _make_prompt("numerical", category.split, text, setting,
                             (category,), quantity=quantity)
            )
    prompts = _cycle_to_budget(base, budget)
    scorecards, _ = _score_seeds(
        prompts, tuple(seeds), gen_backend, eval_backend, width, height, budget
    )
    return rank_seeds(scorecards)


def seeds_for_quantity_pair(
    x: int, y: int, ranked_by_quantity: dict, k: int = DEFAULT_TOP_K,
) -> list[int]:
    """Seeds for a two-category prompt come from the combined count x+y.
    Combined counts outside the mined range fall back to the nearest mined
    quantity (logged, lower wins ties)."""
    if x < 1 or y < 1:
        raise PlanError(f"quantities ({x},{y}) must be >= 1 each")
    if not ranked_by_quantity:
        raise PlanError("no mined quantities supplied")
    combined = x + y
    if combined in ranked_by_quantity:
        chosen = combined
    else:
        chosen = min(ranked_by_quantity, key=lambda q: (abs(q - combined), q))
        log.warning(
            "combined quantity %d not mined; falling back to %d", combined, chosen
        )
    ranked = ranked_by_quantity[chosen]
    if ranked and hasattr(ranked[0], "seed"):
        return select_top_k(ranked, k)
    if not 1 <= k <= len(ranked):
        raise PlanError(f"k={k} outside 1..{len(ranked)}")
    return list(ranked[:k])
