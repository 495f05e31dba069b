"""CSV / text / archive exports with stable column order.

Units are carried in the column names (``_m``, ``_s``, ``_rad``).
"""

from __future__ import annotations

import csv
import dataclasses
import gzip
import io
import json
import tarfile
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from ..control import write_trace
from ..core import QuadDockError
from ..mission import write_event_log
from ..perception import write_detection_log
from .batch import BatchReport, BatchRow
from .sim import TrialLog, TrialResult


class ExportError(QuadDockError, OSError):
    """Reading or writing an export file failed."""


RESULT_COLUMNS = ("seed", "controller", "terrain", "final_phase", "reason", "success", "touchdown_error_m",
                  "time_to_dock_s", "max_barrier", "max_r_ratio", "fov_violation", "fault_count",
                  "saturation_steps", "duration_s")

SUMMARY_COLUMNS = ("controller", "terrain", "n_trials", "successes", "rate", "ci_low", "ci_high",
                   "touchdown_mean_m", "touchdown_p50_m", "touchdown_p95_m", "time_to_dock_mean_s",
                   "fov_violations", "faults", "mean_r_ratio")

GZ_COLUMNS = ("t_s", "D", "g_z")

ROW_FIELDS = [f.name for f in dataclasses.fields(BatchRow)]


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    if isinstance(x, np.integer):
        return str(int(x))
    return str(x)


def _open(path: Path, mode: str):
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        return path.open(mode, newline="" if "b" not in mode else None)
    except OSError as exc:
        raise ExportError(f"{path}: {exc.strerror or exc}") from exc


def write_rows(path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    try:
        with _open(path, "w") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([_fmt(x) for x in row])
    except OSError as exc:
        if isinstance(exc, ExportError):
            raise
        raise ExportError(f"{path}: {exc.strerror or exc}") from exc
    return path


def _read_rows(path) -> tuple[list[str], list[list[str]]]:
    path = Path(path)
    try:
        with path.open(newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise ExportError(f"{path}: {exc.strerror or exc}") from exc
    if not rows:
        raise ExportError(f"{path}: empty file (missing header)")
    return rows[0], rows[1:]


def result_row(r: TrialResult) -> tuple:
    return (r.seed, r.controller, r.terrain, r.final_phase, r.reason, r.success, r.touchdown_error,
            r.time_to_dock, r.max_barrier, r.max_r_ratio, r.fov_violation, r.fault_count,
            r.saturation_steps, r.duration)


def write_results_csv(results: Iterable[TrialResult], path) -> Path:
    """One row per trial; an empty batch gives a header-only file."""
    return write_rows(path, RESULT_COLUMNS, (result_row(r) for r in results))


def write_results_jsonl(results: Iterable[TrialResult], path) -> Path:
    """Full trial records (including transitions and events), one JSON object per line."""
    path = Path(path)
    with _open(path, "w") as fh:
        for r in results:
            fh.write(r.to_json() + "\n")
    return path


def read_results_jsonl(path) -> list[TrialResult]:
    path = Path(path)
    try:
        lines = path.read_text().splitlines()
    except OSError as exc:
        raise ExportError(f"{path}: {exc.strerror or exc}") from exc
    return [TrialResult.from_dict(json.loads(line)) for line in lines if line.strip()]


def write_report_csv(report: BatchReport, path) -> Path:
    """Per-controller summary (bar-chart data); floats are written round-trip exact."""
    return write_rows(path, SUMMARY_COLUMNS,
                       ([getattr(row, f) for f in ROW_FIELDS] for row in report.rows))


def read_report_csv(path) -> BatchReport:
    header, rows = _read_rows(path)
    if tuple(header) != SUMMARY_COLUMNS:
        raise ExportError(f"{path}: unexpected header {header}")
    types = {f.name: f.type for f in dataclasses.fields(BatchRow)}
    out = []
    for raw in rows:
        values = {}
        for name, text in zip(ROW_FIELDS, raw):
            t = types[name]
            values[name] = int(text) if t in (int, "int") else float(text) if t in (float, "float") else text
        out.append(BatchRow(**values))
    return BatchReport(tuple(out))


def summary_table(report: BatchReport) -> str:
    """Fixed-width text table of success rates and touchdown statistics."""
    head = ("controller", "n", "success", "rate", "95% CI", "td mean (m)", "td p95 (m)", "t_dock (s)", "FOV viol")
    lines = []
    for r in report.rows:
        lines.append((r.controller, str(r.n_trials), str(r.successes), f"{r.rate:.3f}",
                      f"[{r.ci_low:.3f}, {r.ci_high:.3f}]", f"{r.touchdown_mean:.4f}", f"{r.touchdown_p95:.4f}",
                      f"{r.time_to_dock_mean:.2f}", str(r.fov_violations)))
    widths = [max(len(h), *(len(x[i]) for x in lines)) if lines else len(h) for i, h in enumerate(head)]
    fmt = "  ".join(f"{{:<{w}}}" for w in widths)
    body = [fmt.format(*head), fmt.format(*("-" * w for w in widths))]
    body += [fmt.format(*x) for x in lines]
    return "\n".join(body) + "\n"


def write_gz_series(rows: Iterable[tuple[float, int, float]], path) -> Path:
    """Gravity-projection ``g_z`` of the platform over time."""
    return write_rows(path, GZ_COLUMNS, rows)


def read_gz_series(path) -> list[tuple[float, int, float]]:
    _, rows = _read_rows(path)
    return [(float(t), int(d), float(g)) for t, d, g in rows]


def make_archive(source_dir, dest) -> Path:
    """Deterministic ``.tar.gz`` of every file below ``source_dir`` (sorted, zero mtimes)."""
    source_dir, dest = Path(source_dir), Path(dest)
    files = sorted(p for p in source_dir.rglob("*") if p.is_file() and p.resolve() != dest.resolve())
    buf = io.BytesIO()
    try:
        with gzip.GzipFile(fileobj=buf, mode="wb", mtime=0) as gz:
            with tarfile.open(fileobj=gz, mode="w") as tar:
                for p in files:
                    data = p.read_bytes()
                    info = tarfile.TarInfo(str(p.relative_to(source_dir)))
                    info.size = len(data)
                    info.mode = 0o644
                    tar.addfile(info, io.BytesIO(data))
        dest.parent.mkdir(parents=True, exist_ok=True)
        dest.write_bytes(buf.getvalue())
    except OSError as exc:
        raise ExportError(f"{dest}: {exc.strerror or exc}") from exc
    return dest


def write_trial_logs(log: TrialLog, out_dir) -> dict[str, Path]:
    """Per-step state, controller trace, detections, mission events and ``g_z`` series."""
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        paths = {
            "steps": write_rows(out_dir / "steps.csv", TrialLog.STEP_COLUMNS, log.steps),
            "trace": write_trace(log.trace, out_dir / "trace.csv"),
            "detections": write_detection_log(log.detections, out_dir / "detections.csv"),
            "events": write_event_log(log.events, out_dir / "events.csv"),
            "gz": write_gz_series(((s[0], s[2], s[13]) for s in log.steps), out_dir / "gz.csv"),
        }
    except OSError as exc:
        if isinstance(exc, ExportError):
            raise
        raise ExportError(f"{out_dir}: {exc.strerror or exc}") from exc
    return paths
