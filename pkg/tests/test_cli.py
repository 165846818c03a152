import json

import pytest

from hifdetect.cli import main
from hifdetect.fileio import export_csv, load_report
from hifdetect.netsim.model import DistortionSpec
from hifdetect.netsim.solvers import solve

from conftest import fault_record, resonant_params


@pytest.fixture(scope="module")
def files(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    rec = fault_record(resonant_params())
    export_csv(rec, root / "fault.csv")
    healthy = solve(resonant_params(), DistortionSpec(I_fM=5.0, I_fM_dist=0.0), cycles=30)
    export_csv(healthy, root / "healthy.csv")
    # feeder signs flipped against the bus voltage: M shapes remain but
    # every INDEX turns negative
    flipped = rec.map_channels(lambda n, s: s if n == "u0b" else s.with_values(-s.values))
    export_csv(flipped, root / "flipped.csv")
    return root, rec.meta["faulty_feeder"]


def effective(out: str) -> dict:
    line = next(l for l in out.splitlines() if l.startswith("effective config: "))
    return json.loads(line.split(": ", 1)[1])


def test_detect_exit_codes(files, capsys):
    root, faulty = files
    assert main(["detect", str(root / "fault.csv")]) == 0
    assert f"chosen feeder: {faulty}" in capsys.readouterr().out
    assert main(["detect", str(root / "healthy.csv")]) == 2
    assert "no HIF detected" in capsys.readouterr().out
    assert main(["identify", str(root / "flipped.csv")]) == 3
    assert "possible bus-side fault" in capsys.readouterr().out
    assert main(["detect", str(root / "absent.csv")]) == 1
    assert "error:" in capsys.readouterr().err


def test_config_file_beats_flags(files, tmp_path, capsys):
    root, _ = files
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"rho": 0.25}))
    main(["detect", str(root / "fault.csv"), "--rho", "0.2", "--epsilon-M", "0.1", "--config", str(cfg)])
    eff = effective(capsys.readouterr().out)
    assert eff["rho"] == 0.25
    assert eff["epsilon_M"] == 0.1
    assert eff["fc"] == 1500.0 and eff["l"] == 16


def test_bad_config_is_an_error(files, tmp_path, capsys):
    root, _ = files
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"rho": 0.25, "colour": 1}))
    assert main(["detect", str(root / "fault.csv"), "--config", str(cfg)]) == 1
    cfg.write_text("[1, 2]")
    assert main(["detect", str(root / "fault.csv"), "--config", str(cfg)]) == 1
    assert main(["detect", str(root / "fault.csv"), "--fs", "8000"]) == 1


def test_detect_outputs(files, tmp_path, capsys):
    root, faulty = files
    code = main(["detect", str(root / "fault.csv"), "--report", str(tmp_path / "r.json"),
                 "--summary", str(tmp_path / "s.txt"), "--plot-dir", str(tmp_path / "plots")])
    assert code == 0
    assert load_report(tmp_path / "r.json").chosen_feeder == faulty
    assert "trigger cycle" in (tmp_path / "s.txt").read_text()
    assert len(list((tmp_path / "plots").glob("*.csv"))) == 6


def test_synth_writes_labelled_records(tmp_path, capsys):
    manifest = tmp_path / "m.json"
    assert main(["synth", "--out", str(tmp_path / "c"), "--write-manifest", str(manifest)]) == 0
    labels = json.loads((tmp_path / "c" / "labels.json").read_text())
    assert len(labels) == 28
    assert len(list((tmp_path / "c").glob("*.csv"))) == 28
    data = json.loads(manifest.read_text())
    data["records"] = data["records"][:2]
    manifest.write_text(json.dumps(data))
    assert main(["synth", "--manifest", str(manifest), "--out", str(tmp_path / "d")]) == 0
    assert len(json.loads((tmp_path / "d" / "labels.json").read_text())) == 2
    name = labels[0]["name"]
    assert main(["detect", str(tmp_path / "c" / f"{name}.csv")]) in (0, 2, 3)


def test_oracle_verb(tmp_path, capsys):
    assert main(["oracle", "--neutral", "low_resistor", "--draws", "3", "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "3 draws" in out and "worst error" in out
    assert (tmp_path / "summary.csv").exists()
    assert len(list(tmp_path.glob("draw_*.csv"))) == 3
