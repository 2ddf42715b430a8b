"""CSV and JSON persistence for evaluation records and run traces.

``records.csv`` holds one row per :class:`~arm_codesign.experiment.EvalRecord`
in a stable column order. Floats are written with ``repr`` so they
round-trip exactly: reading a file back yields records equal to the ones
written, and rerunning the same configuration reproduces the file byte for
byte. Each row references its GA trace file under ``traces/``.

The column schema is documented in docs/records.md.
"""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path
from typing import Sequence

from .experiment import EvalRecord

__all__ = [
    "RECORD_COLUMNS",
    "read_records",
    "render_records_csv",
    "write_manifest",
    "write_records",
]

RECORD_COLUMNS = (
    "layout",
    "condition",
    "target_x",
    "target_y",
    "seed",
    "trajectory_error",
    "final_error",
    "success",
    "collision_penalty",
    "collided",
    "l1",
    "l2",
    "error",
    "trace_file",
)


def _fmt_float(x: float | None) -> str:
    return "" if x is None else repr(float(x))


def _fmt_bool(x: bool | None) -> str:
    return "" if x is None else ("1" if x else "0")


def _trace_filename(index: int) -> str:
    return f"trace_{index:05d}.csv"


def _record_row(r: EvalRecord, trace_file: str) -> list[str]:
    return [
        r.layout,
        r.condition,
        repr(float(r.target[0])),
        repr(float(r.target[1])),
        str(r.seed),
        _fmt_float(r.trajectory_error),
        _fmt_float(r.final_error),
        _fmt_bool(r.success),
        _fmt_float(r.collision_penalty),
        _fmt_bool(r.collided),
        _fmt_float(r.l1),
        _fmt_float(r.l2),
        r.error or "",
        trace_file,
    ]


def render_records_csv(records: Sequence[EvalRecord]) -> str:
    """Records table as a CSV string (records are written in the given order)."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(RECORD_COLUMNS)
    for i, r in enumerate(records):
        trace_file = _trace_filename(i) if r.best_loss_trace else ""
        writer.writerow(_record_row(r, trace_file))
    return buf.getvalue()


def write_records(records: Sequence[EvalRecord], out_dir: Path | str) -> Path:
    """Write records.csv plus one trace CSV per record under traces/."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / "records.csv"
    csv_path.write_text(render_records_csv(records))
    traces_dir = out_dir / "traces"
    if any(r.best_loss_trace for r in records):
        traces_dir.mkdir(exist_ok=True)
    for i, r in enumerate(records):
        if r.best_loss_trace:
            _write_loss_trace(r.best_loss_trace, traces_dir / _trace_filename(i))
    return csv_path


def _write_loss_trace(best_loss: Sequence[float], path: Path) -> None:
    lines = ["generation,best_loss"]
    lines.extend(f"{g},{v!r}" for g, v in enumerate(best_loss))
    path.write_text("\n".join(lines) + "\n")


def _read_loss_trace(path: Path) -> list[float]:
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        return [float(row["best_loss"]) for row in reader]


def _parse_float(s: str) -> float | None:
    return None if s == "" else float(s)


def _parse_bool(s: str) -> bool | None:
    return None if s == "" else s == "1"


def read_records(csv_path: Path | str, load_traces: bool = True) -> list[EvalRecord]:
    """Parse records.csv (and, if present, the referenced trace files)."""
    csv_path = Path(csv_path)
    traces_dir = csv_path.parent / "traces"
    records: list[EvalRecord] = []
    with csv_path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != list(RECORD_COLUMNS):
            raise ValueError(
                f"unexpected records.csv columns {reader.fieldnames}, "
                f"expected {list(RECORD_COLUMNS)}"
            )
        for row in reader:
            trace: list[float] = []
            if load_traces and row["trace_file"]:
                trace_path = traces_dir / row["trace_file"]
                if trace_path.exists():
                    trace = _read_loss_trace(trace_path)
            records.append(
                EvalRecord(
                    layout=row["layout"],
                    condition=row["condition"],
                    target=(float(row["target_x"]), float(row["target_y"])),
                    seed=int(row["seed"]),
                    trajectory_error=_parse_float(row["trajectory_error"]),
                    final_error=_parse_float(row["final_error"]),
                    success=_parse_bool(row["success"]),
                    collision_penalty=_parse_float(row["collision_penalty"]),
                    collided=_parse_bool(row["collided"]),
                    l1=_parse_float(row["l1"]),
                    l2=_parse_float(row["l2"]),
                    best_loss_trace=trace,
                    error=row["error"] or None,
                )
            )
    return records


def write_manifest(manifest: dict, out_dir: Path | str) -> Path:
    """Write manifest.json with keys sorted for stable bytes."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n")
    return path
