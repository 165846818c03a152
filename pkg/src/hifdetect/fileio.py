"""CSV records, JSON reports and plot-ready column files.

Record files have a header ``time,u0b,<feeder>,...`` and optional leading
``# key: value`` lines (``neutral``, ``f0``, ``fs``).  Numbers are written
with ``repr`` so a written record reads back bit for bit.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .config import PipelineConfig
from .distortion import interval_slope_batch
from .errors import HIFError, IngestionError
from .feeder import channel_slopes
from .signal import DEFAULT_F0, SampleSeries, SynchronizedRecord

SCHEMA_VERSION = 1
JITTER_LIMIT = 1e-6


def _header_lines(path: Path):
    """Split a record file into its ``# key: value`` metadata and the rest."""
    meta, body = {}, []
    with open(path, newline="") as fh:
        lines = fh.read().splitlines()
    for i, line in enumerate(lines):
        if line.startswith("#"):
            key, _, value = line[1:].partition(":")
            meta[key.strip()] = value.strip()
            continue
        body = lines[i:]
        return meta, body, i
    return meta, body, len(lines)


def _snap_rate(fs: float) -> float:
    near = round(fs)
    return float(near) if abs(fs - near) <= 1e-6 * fs else fs


def ingest_csv(path, fs: float | None = None, f0: float | None = None, neutral=None) -> SynchronizedRecord:
    """Read a record file.

    ``fs`` is inferred from the time column; when given it is cross-checked
    against the inferred rate.  ``f0`` and ``neutral`` fall back to the
    file's metadata lines, then to 50 Hz and ``resonant``.  Row numbers in
    errors count every line of the file from 1.
    """
    path = Path(path)
    try:
        meta, body, skipped = _header_lines(path)
    except OSError as exc:
        raise IngestionError(f"cannot read {path}: {exc}", row=None) from exc
    if not body:
        raise IngestionError(f"{path}: no header row", row=skipped + 1)
    rows = list(csv.reader(body))
    header = [h.strip() for h in rows[0]]
    header_row = skipped + 1
    if len(header) < 3 or header[0].lower() != "time":
        raise IngestionError(f"{path}: header must start with 'time'", row=header_row)
    if "u0b" not in header:
        raise IngestionError(f"{path}: missing u0b column", row=header_row)
    if len(set(header)) != len(header):
        raise IngestionError(f"{path}: duplicate column names", row=header_row)
    data = np.empty((len(rows) - 1, len(header)))
    for k, row in enumerate(rows[1:]):
        line = header_row + 1 + k
        if len(row) != len(header) or any(not cell.strip() for cell in row):
            raise IngestionError(f"{path}: missing or extra cell", row=line)
        try:
            data[k] = [float(cell) for cell in row]
        except ValueError:
            raise IngestionError(f"{path}: non-numeric cell", row=line) from None
    if len(data) < 3:
        raise IngestionError(f"{path}: fewer than three samples", row=header_row)
    if not np.all(np.isfinite(data)):
        bad = int(np.argmax(~np.all(np.isfinite(data), axis=1)))
        raise IngestionError(f"{path}: non-finite value", row=header_row + 1 + bad)

    t = data[:, 0]
    inferred = _snap_rate((len(t) - 1) / (t[-1] - t[0])) if t[-1] > t[0] else 0.0
    if inferred <= 0:
        raise IngestionError(f"{path}: time column does not increase", row=header_row + 1)
    step = 1.0 / inferred
    jitter = np.abs(np.diff(t) - step) / step
    if np.any(jitter > JITTER_LIMIT):
        bad = int(np.argmax(jitter > JITTER_LIMIT))
        line = header_row + 2 + bad
        raise IngestionError(f"{path}: non-uniform time step", row=line)
    if fs is not None and abs(fs - inferred) > JITTER_LIMIT * fs:
        raise IngestionError(f"{path}: sampled at {inferred} Hz, expected {fs} Hz", row=None)
    if "fs" in meta and abs(float(meta["fs"]) - inferred) > JITTER_LIMIT * inferred:
        raise IngestionError(f"{path}: metadata fs disagrees with the time column", row=None)
    f0 = f0 or float(meta.get("f0", DEFAULT_F0))
    neutral = neutral or meta.get("neutral", "resonant")

    t0 = float(t[0])
    cols = {name: data[:, j] for j, name in enumerate(header)}
    try:
        u0b = SampleSeries(cols["u0b"], inferred, f0, t0)
        feeders = tuple(
            (name, SampleSeries(cols[name], inferred, f0, t0))
            for name in header[1:]
            if name != "u0b"
        )
        return SynchronizedRecord(u0b, feeders, neutral, {"source": str(path), **meta})
    except HIFError as exc:
        raise IngestionError(f"{path}: {exc}", row=None) from exc


def export_csv(record: SynchronizedRecord, path, extra_meta: dict | None = None) -> None:
    """Write ``record`` in the format :func:`ingest_csv` reads."""
    path = Path(path)
    meta = {"neutral": record.neutral.value, "f0": repr(record.f0), "fs": repr(record.fs)}
    meta.update({k: str(v) for k, v in (extra_meta or {}).items()})
    n = len(record)
    t = record.u0b.t0 + np.arange(n) / record.fs
    cols = [t, record.u0b.values] + [s.values for _, s in record.feeders]
    with open(path, "w", newline="") as fh:
        for key, value in meta.items():
            fh.write(f"# {key}: {value}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["time", "u0b"] + record.feeder_ids)
        for row in zip(*cols):
            writer.writerow([repr(float(v)) for v in row])


def report_document(report) -> dict:
    return {"schema_version": SCHEMA_VERSION, **report.to_dict()}


def summary_text(report) -> str:
    """Short human-readable account of a run."""
    lines = [f"neutral: {report.neutral}", f"input sha256: {report.input_digest}"]
    if not report.detected:
        lines.append("no HIF detected")
        return "\n".join(lines) + "\n"
    lines.append(f"HIF detected; trigger cycle {report.trigger_cycle}")
    per = ", ".join(f"{f}={t}" for f, t in report.triggered_at.items() if t is not None)
    lines.append(f"feeder triggers: {per}")
    ident = report.identification
    lines.append(f"identification window: cycles {ident.window[0]}..{ident.window[1]}"
                 + (" (short)" if ident.short_window else ""))
    means = ident.means()
    lines.append(f"mean INDEX ({ident.chosen_variant}): "
                 + ", ".join(f"{f}={v:+.4f}" for f, v in means.items()))
    if ident.chosen_feeder is None:
        lines.append("chosen feeder: none (no feeder identified; possible bus-side fault)")
    else:
        lines.append(f"chosen feeder: {ident.chosen_feeder}")
    return "\n".join(lines) + "\n"


def emit_report(report, path, fmt: str = "json") -> None:
    """Write ``report`` as schema-versioned JSON or as a text summary."""
    path = Path(path)
    if fmt == "json":
        text = json.dumps(report_document(report), indent=2) + "\n"
    elif fmt in ("summary", "text"):
        text = summary_text(report)
    else:
        raise ValueError(f"unknown report format {fmt!r}")
    try:
        path.write_text(text)
    except OSError as exc:
        raise IngestionError(f"cannot write {path}: {exc}", row=None) from exc


def load_report(path):
    """Parse a JSON report written by :func:`emit_report`."""
    from .pipeline import RunReport

    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise IngestionError(f"cannot read report {path}: {exc}", row=None) from exc
    version = doc.pop("schema_version", None)
    if version != SCHEMA_VERSION:
        raise IngestionError(f"{path}: report schema_version {version} is not {SCHEMA_VERSION}", row=None)
    return RunReport.from_dict(doc)


PLOT_COLUMNS = ("sample", "time", "raw", "slope_refit", "slope_plain", "index", "faulty_cycle")


def emit_plot_data(report, record: SynchronizedRecord, directory) -> list:
    """One column file per channel, sample-aligned with the waveform.

    ``slope_refit`` follows the report's configuration; ``slope_plain``
    skips the outlier refit.  ``index`` holds each half-cycle's INDEX
    (chosen variant) over that half-cycle's samples and ``faulty_cycle``
    the cycle's double-M flag; both are 0 elsewhere, and slopes are empty
    where undefined.  Returns the written paths.
    """
    directory = Path(directory)
    try:
        directory.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IngestionError(f"cannot create {directory}: {exc}", row=None) from exc
    cfg = PipelineConfig.from_dict(report.config)
    u0b_iss, slopes, scans = channel_slopes(record, cfg)
    series = [record.u0b] + [s for _, s in record.feeders]
    plain = interval_slope_batch(series, cfg.l, cfg.fc, False, ["u0b"] + record.feeder_ids)
    n, n_t = len(record), record.samples_per_cycle
    t = record.u0b.t0 + np.arange(n) / record.fs
    written = []
    channels = [("u0b", record.u0b, u0b_iss, plain[0])]
    channels += [(fid, s, slopes[fid], p) for (fid, s), p in zip(record.feeders, plain[1:])]
    for fid, s, iss, pl in channels:
        index = np.zeros(n)
        faulty = np.zeros(n, dtype=int)
        if fid in scans:
            values = dict(report.index_stream(fid))
            for cf in scans[fid].cycles:
                if cf.faulty:
                    faulty[cf.cycle * n_t : (cf.cycle + 1) * n_t] = 1
                for h, feat in enumerate(cf.halves):
                    v = values.get(2 * cf.cycle + h, 0.0)
                    if v:
                        a, b = feat.bounds
                        index[a:b] = v
        path = directory / f"{fid}.csv"
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(PLOT_COLUMNS)
            for k in range(n):
                w.writerow([
                    k,
                    repr(float(t[k])),
                    repr(float(s.values[k])),
                    _cell(iss.slopes[k]),
                    _cell(pl.slopes[k]),
                    repr(float(index[k])),
                    int(faulty[k]),
                ])
        written.append(path)
    return written


def _cell(x: float) -> str:
    return "" if not math.isfinite(x) else repr(float(x))
