"""Command line: ``hifdetect synth|detect|identify|oracle``.

Exit codes: 0 completed, 2 no detection, 3 detection without an
identified feeder, 1 error.  Pipeline settings come from the defaults,
then command-line flags, then ``--config`` (a JSON file), each layer
overriding the previous one.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from .config import PipelineConfig
from .errors import HIFError
from .fileio import emit_plot_data, emit_report, export_csv, ingest_csv, summary_text
from .netsim.corpus import build_corpus, default_manifest, load_manifest, write_manifest
from .netsim.oracle import compare_closed_form, random_draw
from .pipeline import run_pipeline

EXIT_OK, EXIT_ERROR, EXIT_NO_DETECTION, EXIT_NO_FEEDER = 0, 1, 2, 3


def _config_flags(p: argparse.ArgumentParser):
    g = p.add_argument_group("pipeline settings")
    g.add_argument("--config", type=Path, help="JSON settings file (overrides the flags)")
    g.add_argument("--fs", type=float, help="expected sampling rate, Hz")
    g.add_argument("--f0", type=float, help="power frequency, Hz")
    g.add_argument("--fc", type=float, help="low-pass cutoff, Hz")
    g.add_argument("--l", type=int, help="interval length in samples (default N_T/8)")
    g.add_argument("--d", type=int, help="guard margin in samples (default N_T/16)")
    g.add_argument("--trigger-threshold", type=int, dest="trigger_threshold")
    g.add_argument("--window", type=int, nargs=2, metavar=("PRE", "POST"))
    g.add_argument("--rho", type=float)
    g.add_argument("--epsilon-M", type=float, dest="epsilon_M")
    g.add_argument("--flat-tol", type=float, dest="flat_tol")
    g.add_argument("--no-refit", action="store_false", dest="refit", default=None,
                   help="skip the Grubbs/robust-regression refit")
    g.add_argument("--clean-first", action="store_true", default=None, dest="clean_first",
                   help="despike the raw channel before low-pass filtering")
    g.add_argument("--neutral", choices=["resonant", "isolated", "low_resistor"])
    g.add_argument("--seed", type=int)


_CONFIG_KEYS = (
    "fs", "f0", "fc", "l", "d", "trigger_threshold", "window", "rho",
    "epsilon_M", "flat_tol", "refit", "clean_first", "neutral", "seed",
)


def _file_settings(args) -> dict:
    if getattr(args, "config", None) is None:
        return {}
    try:
        raw = json.loads(Path(args.config).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ValueError(f"cannot read config {args.config}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ValueError(f"config {args.config} must hold a JSON object")
    PipelineConfig.from_dict(raw)
    return raw


def effective_config(args, settings: dict | None = None) -> PipelineConfig:
    """Defaults, overridden by flags, overridden by the ``--config`` file."""
    flags = {k: getattr(args, k, None) for k in _CONFIG_KEYS}
    if settings is None:
        settings = _file_settings(args)
    return PipelineConfig().merged(flags).merged(settings)


def _cmd_synth(args) -> int:
    manifest = load_manifest(args.manifest) if args.manifest else default_manifest(args.corpus_seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.write_manifest:
        write_manifest(manifest, args.write_manifest)
    labels = []
    for record, label in build_corpus(manifest):
        export_csv(record, out / f"{label.name}.csv", {"faulty_feeder": label.faulty_feeder})
        labels.append(label.to_dict())
    (out / "labels.json").write_text(json.dumps(labels, indent=2) + "\n")
    print(f"wrote {len(labels)} records to {out}")
    return EXIT_OK


def _cmd_detect(args) -> int:
    settings = _file_settings(args)
    cfg = effective_config(args, settings)
    explicit_fs = settings.get("fs", args.fs)
    record = ingest_csv(args.record, fs=explicit_fs, f0=cfg.f0, neutral=cfg.neutral)
    if cfg.fs != record.fs:
        cfg = cfg.merged({"fs": record.fs})
    if cfg.neutral is None:
        cfg = cfg.merged({"neutral": record.neutral.value})
    print("effective config: " + json.dumps(cfg.resolved(record.samples_per_cycle).to_dict(), sort_keys=True))
    report = run_pipeline(record, cfg)
    if args.report:
        emit_report(report, args.report, "json")
    if args.summary:
        emit_report(report, args.summary, "summary")
    if args.plot_dir:
        emit_plot_data(report, record, args.plot_dir)
    sys.stdout.write(summary_text(report))
    if not report.detected:
        return EXIT_NO_DETECTION
    return EXIT_OK if report.chosen_feeder is not None else EXIT_NO_FEEDER


def _cmd_oracle(args) -> int:
    rng = np.random.default_rng(args.seed)
    out = Path(args.out) if args.out else None
    if out:
        out.mkdir(parents=True, exist_ok=True)
    rows = []
    for k in range(args.draws):
        params, spec = random_draw(rng, args.neutral)
        cmp = compare_closed_form(params, spec, cycles=args.cycles, forcing=args.forcing)
        rows.append((k, cmp.relative_error, cmp.max_error, cmp.forcing_peak))
        if out:
            t = cmp.forcing.time
            with open(out / f"draw_{k:03d}.csv", "w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["time", "forcing", "closed_form", "integrated"])
                for row in zip(t, cmp.forcing.values, cmp.closed_form.values, cmp.integrated.values):
                    w.writerow([repr(float(v)) for v in row])
    if out:
        with open(out / "summary.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["draw", "relative_error", "max_error", "forcing_peak"])
            w.writerows(rows)
    worst = max(r[1] for r in rows) if rows else 0.0
    print(f"{args.neutral}: {len(rows)} draws, forcing={args.forcing}, "
          f"worst error {100 * worst:.3g}% of the forcing peak")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hifdetect", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="verb", required=True)

    s = sub.add_parser("synth", help="generate a labelled corpus of record files")
    s.add_argument("--manifest", type=Path, help="JSON manifest (default: built-in 28-record corpus)")
    s.add_argument("--corpus-seed", type=int, default=2024, help="seed of the built-in corpus")
    s.add_argument("--out", required=True, help="output directory")
    s.add_argument("--write-manifest", type=Path, help="also save the manifest used")
    s.set_defaults(func=_cmd_synth)

    for verb in ("detect", "identify"):
        d = sub.add_parser(verb, help="run detection and identification on one record")
        d.add_argument("record", type=Path, help="record CSV file")
        d.add_argument("--report", type=Path, help="write the JSON report here")
        d.add_argument("--summary", type=Path, help="write the text summary here")
        d.add_argument("--plot-dir", type=Path, help="write per-channel column files here")
        _config_flags(d)
        d.set_defaults(func=_cmd_detect)

    o = sub.add_parser("oracle", help="compare closed-form distortion with direct integration")
    o.add_argument("--neutral", choices=["resonant", "low_resistor"], default="resonant")
    o.add_argument("--draws", type=int, default=50)
    o.add_argument("--cycles", type=float, default=10)
    o.add_argument("--forcing", choices=["fault", "simulator"], default="fault")
    o.add_argument("--seed", type=int, default=0)
    o.add_argument("--out", help="directory for per-draw waveform dumps")
    o.set_defaults(func=_cmd_oracle)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (HIFError, ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
