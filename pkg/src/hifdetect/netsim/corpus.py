"""Labelled scenario corpora described by a JSON manifest.

A manifest is a mapping with a ``records`` list; every entry names one
fault scenario (network, distortion shape, noise).  Missing entry fields
fall back to the manifest-level ``defaults`` and then to
:data:`RECORD_DEFAULTS`.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from ..errors import HIFError, ManifestError
from ..signal import NeutralType, SynchronizedRecord
from .model import RESONANT_SHARE_LIMIT, DistortionSpec, NetworkParams, feeder_id
from .noise import add_noise, switching_step
from .solvers import solve

MANIFEST_VERSION = 1

RECORD_DEFAULTS = {
    "fs": 6400.0,
    "f0": 50.0,
    "cycles": 30,
    "onset_cycle": 3.0,
    "ramp_cycles": 2.0,
    "prefault_level": 0.02,
    "tau": -0.5,
    "phi": 0.0,
    "offset_delta": 0.0,
    "snr_db": None,
    "impulse_rate": 0.0,
    "impulse_gain": 10.0,
    "seed": 0,
}

_REQUIRED = ("name", "neutral", "C0", "faulty", "I_fM", "I_fM_dist")
_KNOWN = set(_REQUIRED) | set(RECORD_DEFAULTS) | {"v", "L", "R_N", "theta", "C0L", "archetype"}


@dataclass(frozen=True)
class RecordLabel:
    """Ground truth attached to a generated record."""

    name: str
    neutral: str
    faulty_feeder: str
    fault_rms: float
    onset_cycle: float
    snr_db: float | None
    impulses: bool
    archetype: str = ""

    def to_dict(self) -> dict:
        return asdict(self)


def _entry(defaults: dict, raw: dict) -> dict:
    if not isinstance(raw, dict):
        raise ManifestError("every record must be a mapping")
    unknown = set(raw) - _KNOWN
    if unknown:
        raise ManifestError(f"record {raw.get('name', '?')}: unknown fields {sorted(unknown)}")
    entry = {**RECORD_DEFAULTS, **defaults, **raw}
    missing = [k for k in _REQUIRED if k not in entry]
    if missing:
        raise ManifestError(f"record {raw.get('name', '?')}: missing {missing}")
    return entry


def network_of(entry: dict) -> NetworkParams:
    """NetworkParams for one manifest entry (``theta`` sets R_N when given)."""
    neutral = NeutralType.parse(entry["neutral"])
    C0 = tuple(float(c) for c in entry["C0"])
    kw = {"C0L": float(entry.get("C0L", 0.0))}
    if neutral is NeutralType.RESONANT:
        kw["v"] = entry.get("v")
        kw["L"] = entry.get("L")
    elif neutral is NeutralType.LOW_RESISTOR:
        r = entry.get("R_N")
        if r is None and entry.get("theta") is not None:
            w = 2 * math.pi * float(entry["f0"])
            r = 1.0 / (math.tan(float(entry["theta"])) * w * sum(C0))
        kw["R_N"] = r
    return NetworkParams(C0=C0, faulty=int(entry["faulty"]), neutral=neutral, **kw)


def spec_of(entry: dict) -> DistortionSpec:
    return DistortionSpec(
        I_fM=float(entry["I_fM"]),
        I_fM_dist=float(entry["I_fM_dist"]),
        tau=float(entry["tau"]),
        phi=float(entry["phi"]),
        offset_delta=float(entry["offset_delta"]),
    )


def build_record(entry: dict) -> tuple:
    """Generate one ``(record, label)`` pair from a complete entry."""
    try:
        params = network_of(entry)
        spec = spec_of(entry)
        record = solve(
            params,
            spec,
            fs=float(entry["fs"]),
            cycles=float(entry["cycles"]),
            f0=float(entry["f0"]),
            onset_cycle=float(entry["onset_cycle"]),
            prefault_level=float(entry["prefault_level"]),
            ramp_cycles=float(entry["ramp_cycles"]),
        )
    except HIFError as exc:
        raise ManifestError(f"record {entry['name']}: {exc}") from exc
    snr = entry["snr_db"]
    rate = float(entry["impulse_rate"])
    noisy = add_noise(
        record,
        math.inf if snr is None else float(snr),
        rate,
        float(entry["impulse_gain"]),
        int(entry["seed"]),
    )
    meta = dict(record.meta, name=entry["name"])
    noisy = SynchronizedRecord(noisy.u0b, noisy.feeders, noisy.neutral, meta)
    label = RecordLabel(
        name=str(entry["name"]),
        neutral=params.neutral.value,
        faulty_feeder=params.faulty_id,
        fault_rms=float(record.meta["fault_rms"]),
        onset_cycle=float(entry["onset_cycle"]),
        snr_db=None if snr is None else float(snr),
        impulses=rate > 0,
        archetype=str(entry.get("archetype", "")),
    )
    return noisy, label


def validate_manifest(manifest: dict) -> list:
    """Complete entries of a manifest, checked for schema errors."""
    if not isinstance(manifest, dict) or not isinstance(manifest.get("records"), list):
        raise ManifestError("manifest must be a mapping with a 'records' list")
    version = manifest.get("schema_version", MANIFEST_VERSION)
    if version != MANIFEST_VERSION:
        raise ManifestError(f"unsupported manifest schema_version {version}")
    defaults = manifest.get("defaults", {})
    if not isinstance(defaults, dict):
        raise ManifestError("'defaults' must be a mapping")
    entries = [_entry(defaults, raw) for raw in manifest["records"]]
    names = [e["name"] for e in entries]
    if len(set(names)) != len(names):
        raise ManifestError("record names must be unique")
    return entries


def build_corpus(manifest) -> list:
    """``[(record, label), ...]`` for a manifest mapping or a JSON file path."""
    if isinstance(manifest, (str, Path)):
        manifest = load_manifest(manifest)
    return [build_record(e) for e in validate_manifest(manifest)]


def load_manifest(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ManifestError(f"cannot read manifest {path}: {exc}") from exc


def write_manifest(manifest: dict, path) -> None:
    Path(path).write_text(json.dumps(manifest, indent=2) + "\n")


# -- the default corpus ------------------------------------------------------

# distortion archetypes: (name, offset_delta, tau)
ARCHETYPES = (
    ("symmetric", 0.0, -0.5),
    ("early-midpoint", -0.15, -0.5),
    ("late-midpoint", 0.15, -0.5),
    ("fast-decay", 0.0, -0.9),
)


def _feeders(rng, k: int) -> list:
    return [float(c) for c in np.round(rng.uniform(1.0, 6.0, k), 3) * 1e-6]


def default_manifest(seed: int = 2024) -> dict:
    """The 28-scenario default corpus.

    10 resonant, 9 isolated and 9 low-resistor records; 6 of them carry
    arcing impulses, three faults are below 1 A RMS and three more below
    6 A.  Noise ranges from none to 30 dB SNR.
    """
    rng = np.random.default_rng(seed)
    plan = (
        ["resonant"] * 10 + ["isolated"] * 9 + ["low_resistor"] * 9
    )
    # positions (within each neutral block) of impulse and low-current records
    impulse_at = {"resonant": (3, 8), "isolated": (2, 7), "low_resistor": (4, 8)}
    below_1a = {"resonant": 8, "isolated": 6, "low_resistor": 8}
    below_6a = {"resonant": 5, "isolated": 3, "low_resistor": 2}
    snr_cycle = (None, 40.0, 35.0, 30.0)
    records, count = [], {}
    for idx, neutral in enumerate(plan):
        j = count.get(neutral, 0)
        count[neutral] = j + 1
        k = int(rng.integers(3, 6))
        faulty = int(rng.integers(0, k))
        C0 = _feeders(rng, k)
        arche, offset, tau = ARCHETYPES[(idx + j) % len(ARCHETYPES)]
        entry = {
            "name": f"{neutral[:3]}-{j + 1:02d}",
            "neutral": neutral,
            "archetype": arche,
            "faulty": faulty,
            "tau": tau,
            "offset_delta": offset,
            "phi": round(float(rng.uniform(0.0, 2 * math.pi)), 4),
            "snr_db": snr_cycle[(idx + 1) % len(snr_cycle)],
            "seed": 100 + idx,
        }
        if neutral == "resonant":
            share = float(rng.uniform(0.02, 0.06))
            rest = sum(C0) - C0[faulty]
            C0[faulty] = round(share * rest / (1.0 - share), 9)
            entry["v"] = round(float(rng.uniform(-0.1, -0.06)), 4)
            ratio = float(rng.uniform(0.6, 0.85))
        elif neutral == "isolated":
            ratio = float(rng.uniform(0.3, 0.5))
        else:
            entry["theta"] = round(float(rng.uniform(1.40, 1.52)), 4)
            ratio = float(rng.uniform(0.3, 0.4))
        entry["C0"] = C0
        if j == below_1a[neutral]:
            amp = 1.3
        elif j == below_6a[neutral]:
            amp = 7.5
        else:
            amp = round(float(rng.uniform(12.0, 45.0)), 2)
        entry["I_fM"] = amp
        entry["I_fM_dist"] = round(ratio * amp, 4)
        if j in impulse_at[neutral]:
            entry["impulse_rate"] = 0.5
            entry["impulse_gain"] = 3.0
            entry["snr_db"] = 35.0
        records.append(entry)
    return {"schema_version": MANIFEST_VERSION, "defaults": {}, "records": records}


# -- healthy (no-fault) records ----------------------------------------------


def healthy_record(seed: int, cycles: int = 30, fs: float = 6400.0, f0: float = 50.0) -> SynchronizedRecord:
    """A fault-free record: unbalance sinusoids, noise, impulses, maybe a switching step.

    Parameters are drawn from ``seed``: neutral type, feeder count, SNR in
    30..45 dB, impulse rate up to one per cycle at 3-10x the channel peak,
    and, for two records in three, a capacitor-switching-like step.
    """
    rng = np.random.default_rng(seed)
    neutral = ("resonant", "isolated", "low_resistor")[seed % 3]
    k = int(rng.integers(3, 6))
    C0 = _feeders(rng, k)
    entry = {
        **RECORD_DEFAULTS,
        "name": f"healthy-{seed}",
        "neutral": neutral,
        "C0": C0,
        "faulty": int(rng.integers(0, k)),
        "fs": fs,
        "f0": f0,
        "v": round(float(rng.uniform(-0.1, -0.02)), 4),
        "theta": round(float(rng.uniform(0.9, 1.5)), 4),
    }
    params = network_of(entry)
    # natural unbalance: a small, undistorted zero-sequence source
    spec = DistortionSpec(I_fM=float(rng.uniform(0.2, 3.0)), I_fM_dist=0.0, phi=float(rng.uniform(0, 2 * math.pi)))
    record = solve(params, spec, fs=fs, cycles=cycles, f0=f0)
    if seed % 3 != 0:
        at = float(rng.uniform(3, cycles - 3))
        victim = feeder_id(int(rng.integers(0, k)))
        record = switching_step(
            record, at, victim, step=float(rng.uniform(0.1, 0.5)),
            ring_hz=float(rng.uniform(300, 900)), seed=seed,
        )
    noisy = add_noise(
        record,
        float(rng.uniform(30.0, 45.0)),
        float(rng.uniform(0.0, 1.0)),
        float(rng.uniform(3.0, 10.0)),
        seed,
    )
    meta = {"name": f"healthy-{seed}", "neutral": params.neutral.value, "faulty_feeder": None}
    return SynchronizedRecord(noisy.u0b, noisy.feeders, noisy.neutral, meta)


def resonant_share_ok(entry: dict) -> bool:
    C0 = [float(c) for c in entry["C0"]]
    return C0[int(entry["faulty"])] / sum(C0) < RESONANT_SHARE_LIMIT
