"""Command-line pipeline: build-prompts, mine, sample, curate, evaluate,
report, and an end-to-end simulate that chains the stages on the built-in
simulator at desk scale.

Stages are idempotent on their run directories; every command honors --json
for machine-readable output, reads defaults from an optional key=value
config file (flags win), and exits with a stage-specific code on failure:
corpus 3, backend 4, mining 5, curation 6, evaluation 7, reporting 8.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import curation as curation_mod
from . import metrics as metrics_mod
from . import mining as mining_mod
from . import reporting
from .backends import RemoteBackend, SimulatorBackend, simulate_world
from .catalog import default_catalog
from .corpus import (
    KINDS,
    RELATIONS,
    build_corpus,
    load_prompts,
    write_prompts,
)
from .errors import (
    BackendError,
    CatalogError,
    CorpusError,
    CurationError,
    MetricsError,
    ParseError,
    PlanError,
    RectificationError,
    RunInvalidError,
    SeedmineError,
)
from .judging import judge_image
from .runs import RunDir, read_json, write_json
from .vlm import eval_quantity_clamp

EXIT_CORPUS = 3
EXIT_BACKEND = 4
EXIT_MINING = 5
EXIT_CURATION = 6
EXIT_EVALUATION = 7
EXIT_REPORT = 8

_STAGE_CODES = (
    ((CatalogError, CorpusError, ParseError), EXIT_CORPUS),
    ((PlanError, RunInvalidError), EXIT_MINING),
    ((CurationError, RectificationError), EXIT_CURATION),
    ((BackendError,), EXIT_BACKEND),
    ((MetricsError,), EXIT_EVALUATION),
)


def _exit_code(exc: SeedmineError) -> int:
    for types, code in _STAGE_CODES:
        if isinstance(exc, types):
            return code
    return EXIT_REPORT


def _emit(args, payload: dict, text: str | None = None):
    if getattr(args, "json", False):
        print(json.dumps(payload, ensure_ascii=False, indent=2))
    elif text:
        print(text)


def _backends(args):
    if getattr(args, "backend_url", None):
        backend = RemoteBackend(args.backend_url)
        backend.health()  # fail fast instead of burning per-item retries
        return backend, backend
    world = simulate_world(world_seed=getattr(args, "world_seed", 0))
    backend = SimulatorBackend(world)
    return backend, backend


# --- build-prompts ----------------------------------------------------------


def cmd_build_prompts(args) -> int:
    catalog = default_catalog()
    corpus = build_corpus(
        catalog, rng_seed=args.rng_seed,
        out_of_scope_target=args.out_of_scope_target,
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    planned = {}
    for kind, prompts in corpus.items():
        for split in ("train", "test"):
            subset = [p for p in prompts if p.split == split]
            if subset:
                planned[out / f"{kind}_{split}.jsonl"] = subset

    existing = [p for p in planned if p.exists()]
    if existing and not args.force:
        import io
        unchanged = True
        for path, prompts in planned.items():
            buffer = io.StringIO()
            for prompt in prompts:
                from .corpus import prompt_to_record
                buffer.write(json.dumps(prompt_to_record(prompt),
                                        ensure_ascii=False,
                                        separators=(",", ":")) + "\n")
            if not path.exists() or path.read_text(encoding="utf-8") != buffer.getvalue():
                unchanged = False
                break
        if unchanged:
            counts = {str(p.name): len(v) for p, v in planned.items()}
            _emit(args, {"status": "unchanged", "counts": counts},
                  "corpus already built; nothing to do")
            return 0
        raise CorpusError(
            f"{out} already holds a different corpus; pass --force to overwrite"
        )

    counts = {}
    for path, prompts in planned.items():
        write_prompts(prompts, path)
        counts[path.name] = len(prompts)
    write_json(out / "corpus_summary.json", {
        "schema_version": 1,
        "rng_seed": args.rng_seed,
        "out_of_scope_target": args.out_of_scope_target,
        "counts": dict(sorted(counts.items())),
    })
    lines = [f"{name}: {n}" for name, n in sorted(counts.items())]
    _emit(args, {"status": "built", "counts": counts}, "\n".join(lines))
    return 0


# --- mine -------------------------------------------------------------------


def _mine_tasks(task_arg: str):
    if task_arg == "numerical":
        return [("numerical", q) for q in (2, 3, 4, 5, 6)]
    if task_arg == "spatial":
        return [("spatial", r) for r in RELATIONS]
    return [mining_mod.parse_task(task_arg)]


def _task_dirname(task) -> str:
    return f"{task[0]}-{task[1]}"


def cmd_mine(args) -> int:
    catalog = default_catalog()
    gen, ev = _backends(args)
    seeds = _parse_seed_list(args.seeds)
    tasks = _mine_tasks(args.task)
    run = RunDir(args.out)

    reports = {}
    for task in tasks:
        task_dir = run if len(tasks) == 1 else RunDir(run.path / "tasks" / _task_dirname(task))
        plan = mining_mod.build_mining_plan(
            catalog, task, seeds=seeds, budget=args.budget,
        )
        if task_dir.completed and not args.resume:
            if read_json(task_dir.plan_path) != plan.to_payload():
                raise PlanError(
                    f"{task_dir.path} was mined with different settings; "
                    "use a fresh --out or --resume"
                )
            reports[mining_mod.task_to_str(task)] = read_json(task_dir.report_path)
            continue
        report = mining_mod.run_mining(plan, gen, ev, run_dir=task_dir)
        reports[mining_mod.task_to_str(task)] = report.to_payload()

    if len(tasks) > 1:
        write_json(run.report_path, {
            "schema_version": 1,
            "tasks": reports,
        })
    summary_lines = []
    payload_tasks = {}
    for task_str, report_payload in reports.items():
        top = [sc["seed"] for sc in report_payload["scorecards"][:args.k]]
        payload_tasks[task_str] = {
            "top_seeds": top,
            "best_accuracy": report_payload["scorecards"][0]["accuracy"],
            "chi_squared_stat": report_payload["chi_squared_stat"],
            "p_value": report_payload["p_value"],
        }
        summary_lines.append(
            f"{task_str}: top{args.k}={top} "
            f"best={report_payload['scorecards'][0]['accuracy']:.3f} "
            f"p={report_payload['p_value']}"
        )
    _emit(args, {"status": "mined", "run": str(run.path), "tasks": payload_tasks},
          "\n".join(summary_lines))
    return 0


def _parse_seed_list(text: str):
    if "-" in text and "," not in text:
        lo, _, hi = text.partition("-")
        return tuple(range(int(lo), int(hi) + 1))
    return tuple(int(tok) for tok in text.split(",") if tok.strip())


def _load_top_seeds(seeds_from: str, k: int) -> dict:
    """Read one mining run directory into {task: [seed, ...]}."""
    run = RunDir(seeds_from)
    if not run.report_path.exists():
        raise PlanError(f"{run.report_path} not found; mine first")
    payload = read_json(run.report_path)
    ranked = {}
    if "tasks" in payload:
        items = payload["tasks"].items()
    else:
        items = [(payload["task"], payload)]
    for task_str, report_payload in items:
        report = mining_mod.MiningReport.from_payload(report_payload)
        ranked[report.task] = report.top_seeds(k)
    return ranked


# --- sample -----------------------------------------------------------------


def _corpus_path(corpus_dir: str, kind: str, split: str) -> Path:
    path = Path(corpus_dir) / f"{kind}_{split}.jsonl"
    if not path.exists():
        raise CorpusError(f"{path} not found; run build-prompts first")
    return path


def cmd_sample(args) -> int:
    catalog = default_catalog()
    gen, ev = _backends(args)
    if args.kind not in KINDS:
        raise CorpusError(f"unknown prompt kind {args.kind!r}")
    prompts = load_prompts(_corpus_path(args.corpus, args.kind, "test"), catalog)
    if args.limit:
        prompts = prompts[: args.limit]

    if args.seeds:
        explicit = _parse_seed_list(args.seeds)
        seeds_of = lambda prompt, index: explicit[index % len(explicit)]
    else:
        ranked = _load_top_seeds(args.seeds_from, args.k)
        by_quantity = {
            task[1]: seeds for task, seeds in ranked.items()
            if task[0] == "numerical"
        }
        counters: dict = {}

        def seeds_of(prompt, index):
            from .corpus import task_of
            task = task_of(prompt)
            if prompt.kind == "multi_category":
                x, y = prompt.quantity_pair
                seeds = mining_mod.seeds_for_quantity_pair(x, y, by_quantity, args.k)
            elif task in ranked:
                seeds = ranked[task]
            else:
                raise PlanError(f"no mined seeds for task {task}")
            i = counters.get(task, 0)
            counters[task] = i + 1
            return seeds[i % len(seeds)]

    run = RunDir(args.out)
    if run.completed and not args.force:
        _emit(args, {"status": "unchanged", "run": str(run.path)},
              "sample already complete; nothing to do")
        return 0
    from .backends.base import GenerationRequest

    records = []
    for index, prompt in enumerate(prompts):
        seed = seeds_of(prompt, index)
        record = {
            "key": None, "prompt_id": prompt.id, "prompt_text": prompt.text,
            "kind": prompt.kind, "seed": int(seed),
            "target": prompt.quantity if prompt.kind != "spatial" else prompt.relation,
            "quantity_pair": list(prompt.quantity_pair) if prompt.quantity_pair else None,
            "status": "error", "correct": None, "word": None, "value": None,
            "affirmed": None, "aesthetic": None, "error": None,
        }
        try:
            result = gen.generate(GenerationRequest(prompt.text, seed))
            record["aesthetic"] = result.aesthetic
            judgment = judge_image(ev, prompt, result.image_ref, "eval")
            record["status"] = judgment.status
            record["correct"] = judgment.correct
            if judgment.verdicts:
                record["word"] = judgment.verdicts[0].word
                record["value"] = judgment.verdicts[0].value
            record["affirmed"] = judgment.affirmed
        except BackendError as exc:
            record["error"] = str(exc)
        records.append(record)

    with open(run.records_path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record, ensure_ascii=False,
                                separators=(",", ":")) + "\n")
    write_json(run.report_path, {
        "schema_version": 1,
        "stage": "sample",
        "kind": args.kind,
        "prompts": len(records),
        "ok": sum(1 for r in records if r["status"] == "ok"),
    })
    _emit(args, {"status": "sampled", "run": str(run.path), "prompts": len(records)},
          f"sampled {len(records)} prompts into {run.path}")
    return 0


# --- curate -----------------------------------------------------------------


def cmd_curate(args) -> int:
    catalog = default_catalog()
    gen, ev = _backends(args)
    if args.kind not in ("numerical", "spatial"):
        raise CurationError("curation covers the numerical or spatial training sets")
    prompts = load_prompts(_corpus_path(args.corpus, args.kind, "train"), catalog)
    top_seeds = None
    if args.mode.startswith("reliable"):
        if not args.seeds_from:
            raise CurationError("reliable modes need --seeds-from <mining run>")
        top_seeds = _load_top_seeds(args.seeds_from, args.k)
    entries = curation_mod.curate(
        prompts, args.mode, gen, ev,
        top_seeds_by_task=top_seeds, rng_seed=args.rng_seed,
        filter_correct=args.filter_correct,
    )
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    curation_mod.write_manifest(entries, out)
    config = curation_mod.finetune_config(args.model_family)
    write_json(out.with_suffix(".finetune.json"), config.to_payload())
    stats = curation_mod.manifest_stats(entries)
    _emit(args, {"status": "curated", "manifest": str(out), "stats": stats},
          f"wrote {stats['total']} entries ({stats['included']} included, "
          f"correct fraction {stats['correct_fraction']:.3f}) to {out}")
    return 0


# --- evaluate ----------------------------------------------------------------


def _records_to_summaries(records) -> dict:
    payload = {}
    numerical = [
        (r["target"], _clamped_value(r))
        for r in records if r["kind"] in ("numerical", "out_of_scope")
    ]
    if numerical:
        payload["numerical"] = metrics_mod.accuracy_mae(numerical)
    spatial = [
        (r["target"], r["affirmed"])
        for r in records if r["kind"] == "spatial"
    ]
    if spatial:
        payload["spatial"] = metrics_mod.spatial_accuracy(spatial)
    multi = [r for r in records if r["kind"] == "multi_category"]
    if multi:
        payload["multi_category"] = {
            "total": len(multi),
            "correct": sum(1 for r in multi if r["correct"] is True),
            "accuracy": sum(1 for r in multi if r["correct"] is True) / len(multi),
        }
    return payload


def _clamped_value(record) -> int | None:
    if record["status"] != "ok":
        return None
    from .vlm import NumericVerdict
    verdict = NumericVerdict(record["word"], record["value"])
    try:
        return eval_quantity_clamp(verdict)
    except ValueError:
        return None


def cmd_evaluate(args) -> int:
    run = RunDir(args.run)
    if not run.records_path.exists():
        raise MetricsError(f"{run.records_path} not found; sample first")
    records = []
    with open(run.records_path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                records.append(json.loads(line))
    summaries = _records_to_summaries(records)
    aesthetics = [r["aesthetic"] for r in records if r.get("aesthetic") is not None]
    mean, count = metrics_mod.aggregate_aesthetic(aesthetics)

    payload = {"schema_version": 1}
    text_lines = []
    for kind, summary in summaries.items():
        if hasattr(summary, "to_payload"):
            payload[kind] = summary.to_payload()
            acc = summary.unweighted_mean_accuracy * 100.0
            text_lines.append(f"{kind}: all={reporting.fmt_pct(acc)}"
                              + (f" mae={reporting.fmt_mae(summary.mae)}"
                                 if summary.mae is not None else ""))
        else:
            payload[kind] = summary
            text_lines.append(f"{kind}: accuracy={summary['accuracy']:.3f}")
    if mean is not None:
        payload["aesthetic"] = {"mean": mean, "count": count}
        text_lines.append(f"aesthetic: {reporting.fmt_aesthetic(mean)} over {count}")
    write_json(run.eval_dir / "summary.json", payload)
    _emit(args, payload, "\n".join(text_lines))
    return 0


# --- report ------------------------------------------------------------------


def cmd_report(args) -> int:
    rows_numerical = []
    rows_spatial = []
    for run_path in args.runs.split(","):
        run = RunDir(run_path.strip())
        summary_path = run.eval_dir / "summary.json"
        if not summary_path.exists():
            raise MetricsError(f"{summary_path} not found; evaluate first")
        payload = read_json(summary_path)
        name = run.path.name
        if "numerical" in payload:
            buckets = {
                int(k): v["accuracy"] * 100.0
                for k, v in payload["numerical"]["buckets"].items()
            }
            rows_numerical.append((name, buckets, payload["numerical"]["mae"]))
        if "spatial" in payload:
            buckets = {
                k: v["accuracy"] * 100.0
                for k, v in payload["spatial"]["buckets"].items()
            }
            rows_spatial.append((name, buckets))
    tables = []
    if rows_numerical:
        tables.append(reporting.format_numerical_table(rows_numerical))
    if rows_spatial:
        tables.append(reporting.format_spatial_table(rows_spatial))
    if not tables:
        raise MetricsError("no evaluation summaries to report")
    text = "\n\n".join(tables)
    if args.out:
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text + "\n", encoding="utf-8")
    _emit(args, {"tables": text}, text)
    return 0


# --- simulate (end-to-end chain) ---------------------------------------------


def cmd_simulate(args) -> int:
    catalog = default_catalog()
    world = simulate_world(world_seed=args.world_seed)
    backend = SimulatorBackend(world)
    run = RunDir(args.out)

    if args.full_budget:
        seeds = mining_mod.DEFAULT_SEEDS
        budget = mining_mod.NUMERICAL_BUDGET
    else:
        seeds = tuple(range(20))
        budget = 20

    quantities = (2, 3, 4, 5, 6)
    top_by_task = {}
    for q in quantities:
        task = ("numerical", q)
        task_dir = RunDir(run.path / "tasks" / _task_dirname(task))
        if task_dir.completed:
            report = mining_mod.MiningReport.from_payload(
                read_json(task_dir.report_path)
            )
        else:
            plan = mining_mod.build_mining_plan(
                catalog, task, seeds=seeds, budget=budget
            )
            report = mining_mod.run_mining(plan, backend, run_dir=task_dir)
        top_by_task[task] = report.top_seeds(min(args.k, len(seeds)))

    prompts = [
        p for p in build_corpus(catalog)["numerical"] if p.split == "train"
    ]
    manifests = {}
    for mode in ("reliable+rectified", "random"):
        entries = curation_mod.curate(
            prompts, mode, backend,
            top_seeds_by_task=top_by_task if mode.startswith("reliable") else None,
            rng_seed=args.rng_seed,
        )
        path = run.path / "curation" / f"{mode.replace('+', '_')}.jsonl"
        path.parent.mkdir(parents=True, exist_ok=True)
        curation_mod.write_manifest(entries, path)
        manifests[mode] = entries

    def summary_of(entries):
        records = []
        for entry in entries:
            quantity = int(entry.task.split(":")[1])
            if entry.status != "ok":
                records.append((quantity, None))
            elif entry.value is None:
                records.append((quantity, 19))
            else:
                records.append((quantity, min(entry.value, 19)))
        return metrics_mod.accuracy_mae(records)

    named = [
        ("reliable+rectified", summary_of(manifests["reliable+rectified"])),
        ("random", summary_of(manifests["random"])),
    ]
    payload = reporting.comparison_report(named, out_dir=run.eval_dir)
    gain = payload["delta_all"]
    text = payload.pop("table")
    _emit(args, {"status": "ok", "run": str(run.path), "gain_all": gain,
                 "report": payload},
          text + f"\n\nreliable-over-random gain (All): {gain:+.1f}")
    return 0


# --- parser -------------------------------------------------------------------


def _load_config(argv):
    probe = argparse.ArgumentParser(add_help=False)
    probe.add_argument("--config")
    known, _ = probe.parse_known_args(argv)
    if not known.config:
        return {}
    defaults = {}
    with open(known.config, encoding="utf-8") as fh:
        for raw in fh:
            line = raw.strip()
            if not line or line.startswith("#") or "=" not in line:
                continue
            key, _, value = line.partition("=")
            key = key.strip().replace("-", "_")
            value = value.strip()
            if value.lower() in ("true", "false"):
                defaults[key] = value.lower() == "true"
                continue
            try:
                defaults[key] = int(value)
            except ValueError:
                defaults[key] = value
    return defaults


def build_parser(defaults: dict | None = None) -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true",
                        help="print machine-readable output")
    common.add_argument("--config", help="key=value defaults file (flags win)")

    backend = argparse.ArgumentParser(add_help=False)
    group = backend.add_mutually_exclusive_group()
    group.add_argument("--backend-url", help="remote generation/eval server")
    group.add_argument("--simulator", action="store_true",
                       help="use the built-in simulator (default)")
    backend.add_argument("--world-seed", type=int, default=0,
                         help="simulator world seed")

    parser = argparse.ArgumentParser(
        prog="seedmine",
        description="Mine reliable seeds, curate data, evaluate compositional accuracy.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build-prompts", parents=[common],
                       help="write the prompt corpus as JSON lines")
    p.add_argument("--out", default="corpus")
    p.add_argument("--rng-seed", type=int, default=0)
    p.add_argument("--out-of-scope-target", type=int, default=240)
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_build_prompts)

    p = sub.add_parser("mine", parents=[common, backend],
                       help="score candidate seeds for a task")
    p.add_argument("--task", required=True,
                   help="numerical:<q>, spatial:<relation>, numerical, or spatial")
    p.add_argument("--seeds", default="0-99", help="candidate seeds (csv or lo-hi)")
    p.add_argument("--budget", type=int, default=None)
    p.add_argument("--k", type=int, default=mining_mod.DEFAULT_TOP_K)
    p.add_argument("--out", required=True, help="run directory")
    p.add_argument("--resume", action="store_true",
                   help="continue an interrupted run in place")
    p.set_defaults(func=cmd_mine)

    p = sub.add_parser("sample", parents=[common, backend],
                       help="generate and judge test prompts with chosen seeds")
    p.add_argument("--corpus", default="corpus")
    p.add_argument("--kind", default="numerical", help="prompt family to sample")
    p.add_argument("--seeds", help="explicit seeds (csv or lo-hi)")
    p.add_argument("--seeds-from", help="mining run directory")
    p.add_argument("--k", type=int, default=mining_mod.DEFAULT_TOP_K)
    p.add_argument("--limit", type=int, default=0, help="cap prompt count (0 = all)")
    p.add_argument("--out", required=True, help="run directory")
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("curate", parents=[common, backend],
                       help="build a fine-tuning manifest from training prompts")
    p.add_argument("--mode", required=True, choices=curation_mod.MODES)
    p.add_argument("--kind", default="numerical", choices=("numerical", "spatial"))
    p.add_argument("--corpus", default="corpus")
    p.add_argument("--seeds-from", help="mining run directory (reliable modes)")
    p.add_argument("--k", type=int, default=mining_mod.DEFAULT_TOP_K)
    p.add_argument("--out", required=True, help="manifest path (.jsonl)")
    p.add_argument("--rng-seed", type=int, default=0)
    p.add_argument("--filter-correct", action="store_true",
                   help="drop entries whose image was judged incorrect")
    p.add_argument("--model-family", default="unet-sd21",
                   choices=curation_mod.MODEL_FAMILIES)
    p.set_defaults(func=cmd_curate)

    p = sub.add_parser("evaluate", parents=[common],
                       help="score a sampled run directory")
    p.add_argument("--run", required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("report", parents=[common],
                       help="format evaluation summaries as tables")
    p.add_argument("--runs", required=True, help="comma-separated run directories")
    p.add_argument("--out", help="write the table here as well")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("simulate", parents=[common],
                       help="end-to-end chain on the simulator")
    p.add_argument("--out", default="runs/simulate")
    p.add_argument("--world-seed", type=int, default=0)
    p.add_argument("--rng-seed", type=int, default=0)
    p.add_argument("--k", type=int, default=mining_mod.DEFAULT_TOP_K)
    p.add_argument("--full-budget", action="store_true",
                   help="paper-scale seeds and budgets instead of the desk profile")
    p.set_defaults(func=cmd_simulate)

    if defaults:
        # subparsers reapply their own defaults over the main namespace, so
        # config values have to land on every subparser too
        for action in sub.choices.values():
            action.set_defaults(**defaults)
        parser.set_defaults(**defaults)
    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser(_load_config(argv))
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SeedmineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _exit_code(exc)


if __name__ == "__main__":
    sys.exit(main())
