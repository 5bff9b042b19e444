"""Human-readable tables and machine-readable report files.

Percentages print with one decimal, absolute errors with two, aesthetic
means with two. The "All" column is the unweighted mean over the visible
buckets (quantities two through six for counting, the four relations for
spatial placement).
"""

from __future__ import annotations

from .corpus import RELATIONS
from .errors import MetricsError
from .runs import write_json

NUMERICAL_BUCKETS = (2, 3, 4, 5, 6)
RELATION_LABELS = {"top": "Top", "left": "Left", "right": "Right", "under": "Under"}


def fmt_pct(value: float) -> str:
    return f"{value:.1f}"


def fmt_mae(value: float) -> str:
    return f"{value:.2f}"


def fmt_aesthetic(value: float) -> str:
    return f"{value:.2f}"


def unweighted_all(bucket_values) -> float:
    if isinstance(bucket_values, dict):
        bucket_values = bucket_values.values()
    values = list(bucket_values)
    if not values:
        raise MetricsError("no buckets to average")
    return sum(values) / len(values)


def _render_table(header, rows) -> str:
    widths = [
        max(len(str(header[i])), *(len(str(row[i])) for row in rows))
        for i in range(len(header))
    ]
    def line(cells):
        return "  ".join(str(c).ljust(w) for c, w in zip(cells, widths)).rstrip()
    out = [line(header), line(["-" * w for w in widths])]
    out.extend(line(row) for row in rows)
    return "\n".join(out)


def format_numerical_table(rows) -> str:
    """rows: (name, {quantity: accuracy_percent}, mae or None)."""
    header = ["Method", "All"] + [str(q) for q in NUMERICAL_BUCKETS] + ["MAE"]
    body = []
    for name, by_quantity, mae in rows:
        cells = [name, fmt_pct(unweighted_all(by_quantity.values()))]
        for q in NUMERICAL_BUCKETS:
            cells.append(fmt_pct(by_quantity[q]) if q in by_quantity else "-")
        cells.append(fmt_mae(mae) if mae is not None else "-")
        body.append(cells)
    return _render_table(header, body)


def format_spatial_table(rows) -> str:
    """rows: (name, {relation: accuracy_percent})."""
    header = ["Method", "All"] + [RELATION_LABELS[r] for r in RELATIONS]
    body = []
    for name, by_relation in rows:
        cells = [name, fmt_pct(unweighted_all(by_relation.values()))]
        for r in RELATIONS:
            cells.append(fmt_pct(by_relation[r]) if r in by_relation else "-")
        body.append(cells)
    return _render_table(header, body)


def summary_row(name: str, summary) -> tuple:
    """Turn an EvalSummary into a table row with percent buckets."""
    buckets = {
        key: bucket.accuracy * 100.0 for key, bucket in summary.buckets.items()
    }
    if all(key in RELATIONS for key in buckets):
        return name, buckets
    return name, buckets, summary.mae


def comparison_report(named_summaries, out_dir=None, kind: str = "numerical") -> dict:
    """Build the side-by-side report for several variants of one task and
    optionally persist it (report.json + report.txt, no timestamps)."""
    rows_payload = []
    table_rows = []
    for name, summary in named_summaries:
        buckets = {
            str(key): bucket.accuracy * 100.0
            for key, bucket in summary.buckets.items()
        }
        rows_payload.append({
            "name": name,
            "all": unweighted_all(buckets.values()),
            "overall_accuracy": summary.overall_accuracy * 100.0,
            "buckets": buckets,
            "mae": summary.mae,
            "excluded_unparseable": summary.excluded_unparseable,
        })
        if kind == "numerical":
            table_rows.append(
                (name,
                 {int(k): v for k, v in buckets.items()},
                 summary.mae)
            )
        else:
            table_rows.append((name, buckets))
    if kind == "numerical":
        table = format_numerical_table(table_rows)
    else:
        table = format_spatial_table(table_rows)
    payload = {"schema_version": 1, "kind": kind, "rows": rows_payload}
    if len(rows_payload) >= 2:
        payload["delta_all"] = rows_payload[0]["all"] - rows_payload[1]["all"]
    if out_dir is not None:
        write_json(f"{out_dir}/report.json", payload)
        with open(f"{out_dir}/report.txt", "w", encoding="utf-8") as fh:
            fh.write(table + "\n")
    payload["table"] = table
    return payload
