"""Evaluation metrics: counting accuracy and absolute error, spatial
accuracy, set-coverage recall over feature vectors, aesthetic aggregation,
and attention-map summaries.

Conventions baked in here: predictions are already clamped to 0..19; an
unparseable answer counts against accuracy but is left out of the absolute
error; the headline "All" numbers reported elsewhere are unweighted means
over buckets, while overall_accuracy is the raw correct fraction (they agree
on equal-sized buckets, which is how the corpora are built).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .corpus import RELATIONS
from .errors import MetricsError
from .words import COUNT_CEILING


@dataclass
class BucketStat:
    total: int = 0
    correct: int = 0
    abs_error: int = 0
    mae_count: int = 0

    @property
    def accuracy(self) -> float:
        return self.correct / self.total if self.total else 0.0

    @property
    def mae(self) -> float | None:
        return self.abs_error / self.mae_count if self.mae_count else None


@dataclass
class EvalSummary:
    total: int
    correct: int
    excluded_unparseable: int
    buckets: dict

    @property
    def overall_accuracy(self) -> float:
        return self.correct / self.total

    @property
    def mae(self) -> float | None:
        abs_error = sum(b.abs_error for b in self.buckets.values())
        count = sum(b.mae_count for b in self.buckets.values())
        return abs_error / count if count else None

    @property
    def unweighted_mean_accuracy(self) -> float:
        accs = [b.accuracy for b in self.buckets.values()]
        return sum(accs) / len(accs)

    def to_payload(self) -> dict:
        return {
            "total": self.total,
            "correct": self.correct,
            "excluded_unparseable": self.excluded_unparseable,
            "overall_accuracy": self.overall_accuracy,
            "unweighted_mean_accuracy": self.unweighted_mean_accuracy,
            "mae": self.mae,
            "buckets": {
                # buckets are already in canonical order (quantities ascending,
                # relations in their fixed order); keep it
                str(key): {
                    "total": b.total,
                    "correct": b.correct,
                    "accuracy": b.accuracy,
                    "mae": b.mae,
                }
                for key, b in self.buckets.items()
            },
        }


def accuracy_mae(records) -> EvalSummary:
    """records: (target, prediction) pairs; prediction None means the answer
    could not be read (wrong for accuracy, skipped for error)."""
    records = list(records)
    if not records:
        raise MetricsError("no records to score")
    buckets: dict = {}
    correct = unparseable = 0
    for target, prediction in records:
        bucket = buckets.setdefault(target, BucketStat())
        bucket.total += 1
        if prediction is None:
            unparseable += 1
            continue
        if not 0 <= prediction <= COUNT_CEILING:
            raise MetricsError(
                f"prediction {prediction} outside 0..{COUNT_CEILING}; clamp first"
            )
        if prediction == target:
            bucket.correct += 1
            correct += 1
        bucket.abs_error += abs(prediction - target)
        bucket.mae_count += 1
    return EvalSummary(
        total=len(records),
        correct=correct,
        excluded_unparseable=unparseable,
        buckets=dict(sorted(buckets.items())),
    )


def spatial_accuracy(records) -> EvalSummary:
    """records: (relation, affirmed) pairs; affirmed None counts as wrong."""
    records = list(records)
    if not records:
        raise MetricsError("no records to score")
    buckets: dict = {}
    correct = unparseable = 0
    for relation, affirmed in records:
        if relation not in RELATIONS:
            raise MetricsError(f"unknown relation {relation!r}")
        bucket = buckets.setdefault(relation, BucketStat())
        bucket.total += 1
        if affirmed is None:
            unparseable += 1
            continue
        if affirmed:
            bucket.correct += 1
            correct += 1
    ordered = {r: buckets[r] for r in RELATIONS if r in buckets}
    return EvalSummary(
        total=len(records),
        correct=correct,
        excluded_unparseable=unparseable,
        buckets=ordered,
    )


# ---------------------------------------------------------------------------
# Coverage of a reference set by generated samples (k-NN ball recall).


def recall(reference, generated, k: int = 3) -> float:
    """Fraction of reference points falling inside the union of balls around
    generated points, each ball's radius being the distance to that point's
    k-th nearest neighbour within the generated set (self excluded).

    Exact O(n^2) distances; boundary points count as covered, so identical
    sets give recall 1.0 even with duplicates.
    """
    ref = np.asarray(reference, dtype=np.float64)
    gen = np.asarray(generated, dtype=np.float64)
    if ref.ndim != 2 or gen.ndim != 2:
        raise MetricsError("point sets must be 2-D arrays (n, dim)")
    if ref.shape[0] == 0 or gen.shape[0] == 0:
        raise MetricsError("point sets must be non-empty")
    if ref.shape[1] != gen.shape[1]:
        raise MetricsError(
            f"dimension mismatch: {ref.shape[1]} vs {gen.shape[1]}"
        )
    if not 1 <= k < gen.shape[0]:
        raise MetricsError(
            f"k={k} needs 1 <= k <= {gen.shape[0] - 1} generated neighbours"
        )
    gen_sq = (gen**2).sum(axis=1)
    d_gen = gen_sq[:, None] + gen_sq[None, :] - 2.0 * gen @ gen.T
    np.maximum(d_gen, 0.0, out=d_gen)
    d_gen = np.sqrt(d_gen)
    # Row-sorted distances include self at position 0, so index k is the
    # k-th neighbour with self excluded.
    radii = np.sort(d_gen, axis=1)[:, k]

    ref_sq = (ref**2).sum(axis=1)
    d_cross = ref_sq[:, None] + gen_sq[None, :] - 2.0 * ref @ gen.T
    np.maximum(d_cross, 0.0, out=d_cross)
    d_cross = np.sqrt(d_cross)
    covered = (d_cross <= radii[None, :]).any(axis=1)
    return float(covered.mean())


def aggregate_aesthetic(scores) -> tuple[float | None, int]:
    scores = list(scores)
    if not scores:
        return None, 0
    return sum(scores) / len(scores), len(scores)


# ---------------------------------------------------------------------------
# Attention-map summaries.


def binarize_map(attention, threshold: float = 0.5):
    """Min-max normalize one map, then cut at the threshold. A constant map
    has no contrast to binarize; it comes back all zeros and flagged."""
    arr = np.asarray(attention, dtype=np.float64)
    lo, hi = arr.min(), arr.max()
    if hi - lo == 0.0:
        return np.zeros_like(arr, dtype=np.uint8), True
    normalized = (arr - lo) / (hi - lo)
    return (normalized >= threshold).astype(np.uint8), False


def average_maps(masks) -> np.ndarray:
    masks = [np.asarray(m, dtype=np.float64) for m in masks]
    if not masks:
        raise MetricsError("no masks to average")
    shape = masks[0].shape
    if any(m.shape != shape for m in masks):
        raise MetricsError("masks disagree on shape")
    return np.mean(masks, axis=0)


@dataclass
class AttentionRecord:
    seed: int
    correct: bool | None
    attention_map: np.ndarray


@dataclass
class AttentionSummary:
    grouping: str
    maps: dict = field(default_factory=dict)
    sizes: dict = field(default_factory=dict)
    degenerate: int = 0


def group_attention(records, by: str = "by_seed") -> AttentionSummary:
    """Average binarized maps per seed or per correctness. Records with an
    unknown correctness are left out of correctness groups; empty groups
    simply do not appear."""
    if by not in ("by_seed", "by_correctness"):
        raise MetricsError(f"unknown grouping {by!r}")
    summary = AttentionSummary(grouping=by)
    grouped: dict = {}
    for record in records:
        if by == "by_seed":
            key = record.seed
        else:
            if record.correct is None:
                continue
            key = "correct" if record.correct else "incorrect"
        mask, degenerate = binarize_map(record.attention_map)
        if degenerate:
            summary.degenerate += 1
        grouped.setdefault(key, []).append(mask)
    for key, masks in sorted(grouped.items(), key=lambda kv: str(kv[0])):
        summary.maps[key] = average_maps(masks)
        summary.sizes[key] = len(masks)
    return summary


def export_vectors(records, path):
    """Flatten each record's map into one TSV row with a trailing numeric
    correctness label (1 correct, 0 not, -1 unknown), for projection tools."""
    records = list(records)
    if not records:
        raise MetricsError("no records to export")
    width = np.asarray(records[0].attention_map).size
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\t".join([f"v{i}" for i in range(width)] + ["label"]) + "\n")
        for record in records:
            flat = np.asarray(record.attention_map, dtype=np.float64).ravel()
            if flat.size != width:
                raise MetricsError("attention maps disagree on size")
            label = -1 if record.correct is None else int(bool(record.correct))
            fh.write(
                "\t".join(f"{v:.6f}" for v in flat) + f"\t{label}\n"
            )


def load_vectors(path):
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip().split("\t")
        rows, labels = [], []
        for line in fh:
            parts = line.strip().split("\t")
            rows.append([float(v) for v in parts[:-1]])
            labels.append(int(parts[-1]))
    if any(len(row) != len(header) - 1 for row in rows):
        raise MetricsError("vector rows disagree with header width")
    return np.asarray(rows), np.asarray(labels)
