import json

import pytest

from seedmine.cli import main

pytestmark = pytest.mark.usefixtures("in_tmp_dir")


@pytest.fixture()
def in_tmp_dir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    return tmp_path


def test_build_prompts_writes_and_is_idempotent(capsys):
    assert main(["build-prompts", "--out", "corpus"]) == 0
    out = capsys.readouterr().out
    assert "numerical_train.jsonl: 2400" in out
    assert main(["build-prompts", "--out", "corpus"]) == 0
    assert "nothing to do" in capsys.readouterr().out


def test_build_prompts_refuses_mismatched_corpus(tmp_path, capsys):
    assert main(["build-prompts", "--out", "corpus"]) == 0
    capsys.readouterr()
    assert main(["build-prompts", "--out", "corpus", "--rng-seed", "9"]) == 3
    assert "--force" in capsys.readouterr().err
    assert main(["build-prompts", "--out", "corpus", "--rng-seed", "9",
                 "--force"]) == 0


def test_build_prompts_json_output(capsys):
    assert main(["build-prompts", "--out", "corpus", "--json"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["status"] == "built"
    assert payload["counts"]["spatial_train.jsonl"] == 2560


def test_mine_single_task(tmp_path, capsys):
    code = main(["mine", "--task", "numerical:4", "--seeds", "0-14",
                 "--budget", "8", "--out", "runs/m", "--world-seed", "3",
                 "--json"])
    assert code == 0
    payload = json.loads(capsys.readouterr().out)
    assert "numerical:4" in payload["tasks"]
    assert len(payload["tasks"]["numerical:4"]["top_seeds"]) == 3
    assert (tmp_path / "runs/m/report.json").exists()


def test_mine_rerun_is_noop_and_mismatch_fails(capsys):
    args = ["mine", "--task", "numerical:4", "--seeds", "0-9",
            "--budget", "6", "--out", "runs/m", "--world-seed", "3"]
    assert main(args) == 0
    first = capsys.readouterr().out
    assert main(args) == 0
    assert capsys.readouterr().out == first
    bad = ["mine", "--task", "numerical:4", "--seeds", "0-11",
           "--budget", "6", "--out", "runs/m", "--world-seed", "3"]
    assert main(bad) == 5
    assert "different settings" in capsys.readouterr().err


def test_mine_task_group_layout(tmp_path, capsys):
    code = main(["mine", "--task", "spatial", "--seeds", "0-7",
                 "--budget", "4", "--out", "runs/spa", "--world-seed", "3"])
    assert code == 0
    report = json.loads((tmp_path / "runs/spa/report.json").read_text())
    assert set(report["tasks"]) == {"spatial:top", "spatial:left",
                                    "spatial:right", "spatial:under"}
    for name in ("spatial-top", "spatial-under"):
        assert (tmp_path / "runs/spa/tasks" / name / "records.jsonl").exists()


def test_full_pipeline_sample_evaluate_report(tmp_path, capsys):
    assert main(["build-prompts", "--out", "corpus"]) == 0
    assert main(["mine", "--task", "numerical", "--seeds", "0-9",
                 "--budget", "5", "--out", "runs/mine",
                 "--world-seed", "3"]) == 0
    assert main(["sample", "--corpus", "corpus", "--kind", "numerical",
                 "--seeds-from", "runs/mine", "--out", "runs/sample",
                 "--world-seed", "3", "--limit", "60"]) == 0
    assert main(["evaluate", "--run", "runs/sample"]) == 0
    payload = json.loads(
        (tmp_path / "runs/sample/eval/summary.json").read_text())
    assert "numerical" in payload
    assert payload["numerical"]["total"] == 60
    assert main(["report", "--runs", "runs/sample", "--out",
                 "runs/tables.txt"]) == 0
    text = (tmp_path / "runs/tables.txt").read_text()
    assert text.splitlines()[0].split()[0] == "Method"


def test_sample_with_explicit_seeds_roundrobin(tmp_path):
    assert main(["build-prompts", "--out", "corpus"]) == 0
    assert main(["sample", "--corpus", "corpus", "--kind", "numerical",
                 "--seeds", "5,6", "--out", "runs/s", "--world-seed", "3",
                 "--limit", "10"]) == 0
    records = [
        json.loads(line)
        for line in (tmp_path / "runs/s/records.jsonl").read_text().splitlines()
    ]
    assert [r["seed"] for r in records] == [5, 6] * 5


def test_sample_multi_category_uses_quantity_pairs(tmp_path):
    assert main(["build-prompts", "--out", "corpus"]) == 0
    assert main(["mine", "--task", "numerical", "--seeds", "0-9",
                 "--budget", "5", "--out", "runs/mine",
                 "--world-seed", "3"]) == 0
    assert main(["sample", "--corpus", "corpus", "--kind", "multi_category",
                 "--seeds-from", "runs/mine", "--out", "runs/multi",
                 "--world-seed", "3", "--limit", "30"]) == 0
    records = [
        json.loads(line)
        for line in (tmp_path / "runs/multi/records.jsonl").read_text()
        .splitlines()
    ]
    assert all(r["kind"] == "multi_category" for r in records)
    assert all(r["quantity_pair"] is not None for r in records)


def test_curate_reliable_and_random(tmp_path, capsys):
    assert main(["build-prompts", "--out", "corpus"]) == 0
    assert main(["mine", "--task", "numerical", "--seeds", "0-9",
                 "--budget", "5", "--out", "runs/mine",
                 "--world-seed", "3"]) == 0
    capsys.readouterr()
    assert main(["curate", "--mode", "reliable+rectified",
                 "--kind", "numerical", "--corpus", "corpus",
                 "--seeds-from", "runs/mine", "--out", "runs/rel.jsonl",
                 "--world-seed", "3", "--json"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["stats"]["total"] == 2400
    assert (tmp_path / "runs/rel.jsonl").exists()
    assert (tmp_path / "runs/rel.finetune.json").exists()
    config = json.loads((tmp_path / "runs/rel.finetune.json").read_text())
    assert config["learning_rate"] == pytest.approx(1.28e-4)
    assert main(["curate", "--mode", "random", "--kind", "numerical",
                 "--corpus", "corpus", "--out", "runs/rnd.jsonl",
                 "--world-seed", "3"]) == 0


def test_curate_reliable_without_seeds_fails(capsys):
    assert main(["build-prompts", "--out", "corpus"]) == 0
    capsys.readouterr()
    code = main(["curate", "--mode", "reliable", "--kind", "numerical",
                 "--corpus", "corpus", "--out", "runs/x.jsonl"])
    assert code == 6
    assert "--seeds-from" in capsys.readouterr().err


def test_exit_code_corpus_missing(capsys):
    code = main(["sample", "--corpus", "nowhere", "--kind", "numerical",
                 "--seeds", "1", "--out", "runs/x"])
    assert code == 3


def test_exit_code_backend_unreachable(capsys):
    code = main(["mine", "--task", "numerical:4", "--seeds", "0-3",
                 "--budget", "2", "--out", "runs/x",
                 "--backend-url", "http://127.0.0.1:1"])
    assert code == 4


def test_exit_code_report_without_eval(capsys):
    code = main(["report", "--runs", "runs/never-ran"])
    assert code == 7


def test_simulate_end_to_end(tmp_path, capsys):
    code = main(["simulate", "--out", "runs/sim", "--world-seed", "3",
                 "--json"])
    assert code == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["status"] == "ok"
    assert payload["gain_all"] > 0  # mined seeds beat random draws
    assert (tmp_path / "runs/sim/eval/report.json").exists()
    assert (tmp_path / "runs/sim/curation").is_dir()
    # rerun reuses the mining directories without error
    assert main(["simulate", "--out", "runs/sim", "--world-seed", "3"]) == 0


def test_config_file_defaults_and_flag_priority(tmp_path, capsys):
    (tmp_path / "mine.cfg").write_text("world_seed=3\nbudget=6\n")
    assert main(["mine", "--task", "numerical:2", "--seeds", "0-7",
                 "--out", "runs/a", "--config", "mine.cfg", "--json"]) == 0
    payload = json.loads(capsys.readouterr().out)
    plan = json.loads((tmp_path / "runs/a/plan.json").read_text())
    assert plan["budget"] == 6
    assert main(["mine", "--task", "numerical:2", "--seeds", "0-7",
                 "--budget", "4", "--out", "runs/b", "--config",
                 "mine.cfg"]) == 0
    plan = json.loads((tmp_path / "runs/b/plan.json").read_text())
    assert plan["budget"] == 4
