"""Run directory layout and the append-only record store.

A run lives under runs/<id>/ with plan.json, records.jsonl, and report.json;
evaluation artifacts go to runs/<id>/eval/. Records are keyed by the request
idempotency key, so interrupted runs resume without repeating backend calls.
Artifacts carry no timestamps: identical inputs produce identical bytes.
"""

from __future__ import annotations

import json
import os
from pathlib import Path


def write_json(path, payload):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, ensure_ascii=False, indent=2)
        fh.write("\n")


def read_json(path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


class RunDir:
    def __init__(self, path):
        self.path = Path(path)
        self.path.mkdir(parents=True, exist_ok=True)

    @property
    def plan_path(self) -> Path:
        return self.path / "plan.json"

    @property
    def records_path(self) -> Path:
        return self.path / "records.jsonl"

    @property
    def report_path(self) -> Path:
        return self.path / "report.json"

    @property
    def eval_dir(self) -> Path:
        d = self.path / "eval"
        d.mkdir(parents=True, exist_ok=True)
        return d

    @property
    def completed(self) -> bool:
        return self.report_path.exists()


class RecordStore:
    """Append-only JSONL keyed by record["key"]; loads whatever is already
    on disk so callers can skip finished work."""

    def __init__(self, path):
        self.path = Path(path)
        self.records: dict[str, dict] = {}
        self._fh = None
        if self.path.exists():
            with open(self.path, encoding="utf-8") as fh:
                for line in fh:
                    line = line.strip()
                    if not line:
                        continue
                    record = json.loads(line)
                    self.records[record["key"]] = record

    def __contains__(self, key: str) -> bool:
        return key in self.records

    def get(self, key: str) -> dict | None:
        return self.records.get(key)

    def append(self, record: dict):
        if self._fh is None:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self._fh = open(self.path, "a", encoding="utf-8")
        self._fh.write(json.dumps(record, ensure_ascii=False,
                                  separators=(",", ":")) + "\n")
        self.records[record["key"]] = record

    def flush(self):
        if self._fh is not None:
            self._fh.flush()
            os.fsync(self._fh.fileno())

    def close(self):
        if self._fh is not None:
            self.flush()
            self._fh.close()
            self._fh = None

    def __enter__(self):
        return self

    def __exit__(self, *exc_info):
        self.close()
        return False
