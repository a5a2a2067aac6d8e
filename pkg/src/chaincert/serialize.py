"""Canonical report output: JSON with sorted keys, or flattened CSV.

Reruns with identical arguments must produce byte-identical files, so the
JSON writer sorts keys, payloads carry no timestamps, and CSV columns are
sorted by header name.
"""
from __future__ import annotations

import csv
import io
import json
import sys


def canonical_json(payload: dict) -> str:
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def _flatten(value, prefix: str, out: dict) -> None:
    if isinstance(value, dict):
        for k, v in value.items():
            _flatten(v, f"{prefix}.{k}" if prefix else str(k), out)
    elif isinstance(value, (list, tuple)):
        for i, v in enumerate(value):
            _flatten(v, f"{prefix}[{i}]", out)
    else:
        out[prefix] = value


def flatten_record(record: dict) -> dict:
    out: dict = {}
    _flatten(record, "", out)
    return out


def payload_to_csv(payload: dict) -> str:
    """Rows from payload["rows"] or payload["cases"]; otherwise one row."""
    records = payload.get("rows") or payload.get("cases")
    if records is None:
        report = payload.get("report")
        if isinstance(report, dict) and report.get("cases"):
            records = report["cases"]
    if records is None:
        records = [payload]
    flat = [flatten_record(r) for r in records]
    fields = sorted({k for row in flat for k in row})
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    writer.writeheader()
    for row in flat:
        writer.writerow(row)
    return buf.getvalue()


def render(payload: dict, fmt: str) -> str:
    if fmt == "json":
        return canonical_json(payload)
    if fmt == "csv":
        return payload_to_csv(payload)
    raise ValueError(f"unknown format {fmt!r}")


def write_output(payload: dict, out: str | None, fmt: str = "json") -> None:
    text = render(payload, fmt)
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
