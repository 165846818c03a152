import copy
import json

import numpy as np
import pytest

from hifdetect.errors import ManifestError
from hifdetect.netsim.corpus import (
    build_corpus,
    build_record,
    default_manifest,
    healthy_record,
    network_of,
    validate_manifest,
)
from hifdetect.netsim.model import RESONANT_SHARE_LIMIT


def test_default_corpus_composition(corpus):
    labels = [lab for _, lab in corpus]
    assert len(labels) == 28
    assert sum(lab.impulses for lab in labels) == 6
    assert sum(not lab.impulses for lab in labels) == 22
    assert {lab.neutral for lab in labels} == {"resonant", "isolated", "low_resistor"}
    assert sum(lab.fault_rms <= 1.0 for lab in labels) >= 3
    assert sum(1.0 < lab.fault_rms <= 6.0 for lab in labels) >= 3
    assert all(lab.snr_db is None or lab.snr_db >= 30 for lab in labels)
    assert len({lab.archetype for lab in labels}) >= 4


def test_labels_match_parameters(corpus):
    for entry, (record, label) in zip(validate_manifest(default_manifest()), corpus):
        params = network_of(entry)
        assert label.faulty_feeder == params.faulty_id == record.meta["faulty_feeder"]
        assert record.feeder_ids == params.channel_ids
        if label.neutral == "resonant":
            assert params.share < RESONANT_SHARE_LIMIT


def test_low_current_records_carry_impulses(corpus):
    low = [lab for _, lab in corpus if lab.fault_rms <= 1.0]
    assert any(lab.impulses for lab in low)


def test_manifest_roundtrip(tmp_path):
    manifest = default_manifest()
    path = tmp_path / "m.json"
    path.write_text(json.dumps(manifest))
    a = build_corpus(path)[:3]
    b = build_corpus(manifest)[:3]
    for (ra, la), (rb, lb) in zip(a, b):
        assert la == lb
        assert np.array_equal(ra.channel("T").values, rb.channel("T").values)


def test_manifest_is_seeded():
    assert default_manifest(1) == default_manifest(1)
    assert default_manifest(1) != default_manifest(2)


@pytest.mark.parametrize("mutate,match", [
    (lambda m: m.pop("records"), "records"),
    (lambda m: m.update(schema_version=9), "schema_version"),
    (lambda m: m.update(defaults=[]), "defaults"),
    (lambda m: m["records"][0].pop("C0"), "missing"),
    (lambda m: m["records"][0].update(colour="red"), "unknown"),
    (lambda m: m["records"][1].update(name=m["records"][0]["name"]), "unique"),
])
def test_manifest_errors(mutate, match):
    m = copy.deepcopy(default_manifest())
    mutate(m)
    with pytest.raises(ManifestError, match=match):
        build_corpus(m)


def test_bad_scenario_names_the_record():
    m = default_manifest()
    m["records"][0]["tau"] = 0.5
    with pytest.raises(ManifestError, match=m["records"][0]["name"]):
        build_corpus(m)
    with pytest.raises(ManifestError):
        build_corpus("/nonexistent/manifest.json")


def test_defaults_block_applies():
    m = default_manifest()
    m["defaults"] = {"cycles": 12}
    m["records"] = m["records"][:2]
    for record, _ in build_corpus(m):
        assert len(record) == 12 * 128


def test_healthy_records_vary():
    recs = [healthy_record(s) for s in range(6)]
    assert {r.neutral.value for r in recs} == {"resonant", "isolated", "low_resistor"}
    assert all(r.meta["faulty_feeder"] is None for r in recs)
    assert healthy_record(3).channel("T").values.tobytes() == recs[3].channel("T").values.tobytes()


def test_record_builder_without_noise_closes_kcl():
    entry = validate_manifest(default_manifest())[0]
    entry.update(snr_db=None, impulse_rate=0.0)
    record, _ = build_record(entry)
    total = sum(s.values for _, s in record.feeders)
    assert np.max(np.abs(total)) < 1e-9 * max(np.max(np.abs(s.values)) for _, s in record.feeders)
