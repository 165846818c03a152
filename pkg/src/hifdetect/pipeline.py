"""End-to-end run: slopes, per-feeder detection, identification on trigger."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from .config import PipelineConfig
from .detect import detect_stream
from .feeder import IdentificationReport, IndexSample, channel_slopes, identify_from_scans
from .signal import NeutralType, SynchronizedRecord


def record_digest(record: SynchronizedRecord) -> str:
    """SHA-256 over the sampling grid, channel ids and little-endian samples."""
    h = hashlib.sha256()
    head = {
        "fs": record.fs,
        "f0": record.f0,
        "t0": record.u0b.t0,
        "neutral": record.neutral.value if record.neutral else None,
        "channels": ["u0b"] + record.feeder_ids,
    }
    h.update(json.dumps(head, sort_keys=True).encode())
    for s in [record.u0b] + [s for _, s in record.feeders]:
        h.update(np.ascontiguousarray(s.values, dtype="<f8").tobytes())
    return h.hexdigest()


@dataclass
class RunReport:
    """Everything one run decided, plus what is needed to reproduce it.

    ``flags`` maps feeder id to ``{cycle: faulty}``; ``reasons`` keeps the
    per-half-cycle verdict text (empty for an M shape).  ``identification``
    is None when nothing triggered.
    """

    triggered_at: dict
    trigger_cycle: int | None
    identification: IdentificationReport | None
    flags: dict
    reasons: dict
    config: dict
    input_digest: str
    neutral: str
    n_cycles: int
    feeder_ids: list = field(default_factory=list)

    @property
    def detected(self) -> bool:
        return self.trigger_cycle is not None

    @property
    def chosen_feeder(self):
        return self.identification.chosen_feeder if self.identification else None

    def index_stream(self, feeder_id: str, variant: str | None = None) -> list:
        """``(half_cycle_index, value)`` pairs of one feeder under one variant."""
        ident = self.identification
        if ident is None:
            return []
        variant = variant or ident.chosen_variant
        return [
            (s.half_cycle_index, s.index_value)
            for s in ident.samples
            if s.feeder_id == feeder_id and s.c_dir_variant == variant
        ]

    def to_dict(self) -> dict:
        ident = None
        if self.identification is not None:
            r = self.identification
            ident = {
                "trigger_cycle": r.trigger_cycle,
                "window": list(r.window),
                "mean_index": r.mean_index,
                "chosen_feeder": r.chosen_feeder,
                "chosen_variant": r.chosen_variant,
                "short_window": r.short_window,
                "samples": [
                    [s.feeder_id, s.half_cycle_index, s.index_value, s.c_dir_variant]
                    for s in r.samples
                ],
            }
        return {
            "triggered_at": self.triggered_at,
            "trigger_cycle": self.trigger_cycle,
            "identification": ident,
            "flags": {f: {str(c): v for c, v in fl.items()} for f, fl in self.flags.items()},
            "reasons": {f: {str(c): list(v) for c, v in r.items()} for f, r in self.reasons.items()},
            "config": self.config,
            "input_digest": self.input_digest,
            "neutral": self.neutral,
            "n_cycles": self.n_cycles,
            "feeder_ids": list(self.feeder_ids),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RunReport":
        ident = data.get("identification")
        if ident is not None:
            ident = IdentificationReport(
                trigger_cycle=ident["trigger_cycle"],
                window=tuple(ident["window"]),
                mean_index=ident["mean_index"],
                chosen_feeder=ident["chosen_feeder"],
                chosen_variant=ident["chosen_variant"],
                short_window=ident["short_window"],
                samples=[IndexSample(*row) for row in ident["samples"]],
            )
        return cls(
            triggered_at=dict(data["triggered_at"]),
            trigger_cycle=data["trigger_cycle"],
            identification=ident,
            flags={f: {int(c): v for c, v in fl.items()} for f, fl in data["flags"].items()},
            reasons={f: {int(c): tuple(v) for c, v in r.items()} for f, r in data["reasons"].items()},
            config=data["config"],
            input_digest=data["input_digest"],
            neutral=data["neutral"],
            n_cycles=data["n_cycles"],
            feeder_ids=list(data.get("feeder_ids", [])),
        )


def run_pipeline(record: SynchronizedRecord, config: PipelineConfig | None = None) -> RunReport:
    """Detect and, on a trigger, identify the faulty feeder of ``record``.

    The system trigger is the earliest per-feeder trigger.  Identification
    runs over ``config.window`` around it; a record too short for the
    window gives a partial result flagged ``short_window``.
    """
    config = config or PipelineConfig(fs=record.fs, f0=record.f0)
    cfg = config.resolved(record.samples_per_cycle)
    neutral = NeutralType.parse(cfg.neutral or record.neutral)
    n_cycles = len(record) // record.samples_per_cycle

    u0b_iss, slopes, scans = channel_slopes(record, cfg)
    triggered, flags, reasons = {}, {}, {}
    for fid, scan in scans.items():
        state = detect_stream(scan.flags.items(), cfg.trigger_threshold)
        triggered[fid] = state.triggered_at
        flags[fid] = dict(scan.flags)
        reasons[fid] = {c.cycle: tuple(h.reason for h in c.halves) for c in scan.cycles}
    hits = [t for t in triggered.values() if t is not None]
    trigger = min(hits) if hits else None

    ident = None
    if trigger is not None:
        ident = identify_from_scans(slopes, scans, u0b_iss, neutral, trigger, n_cycles, cfg.window)
    echo = cfg.to_dict()
    echo["neutral"] = neutral.value
    return RunReport(
        triggered_at=triggered,
        trigger_cycle=trigger,
        identification=ident,
        flags=flags,
        reasons=reasons,
        config=echo,
        input_digest=record_digest(record),
        neutral=neutral.value,
        n_cycles=n_cycles,
        feeder_ids=record.feeder_ids,
    )
