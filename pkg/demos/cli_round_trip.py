"""Drive the command line end to end in a scratch directory.

Synthesizes the labelled corpus, runs ``detect`` on two of the records
and prints the exit codes with the chosen feeder next to the label.

    python3 demos/cli_round_trip.py
"""

import json
import tempfile
from pathlib import Path

from hifdetect.cli import main

with tempfile.TemporaryDirectory() as tmp:
    tmp = Path(tmp)
    corpus = tmp / "corpus"
    print("$ hifdetect synth --out corpus")
    main(["synth", "--out", str(corpus)])
    labels = {d["name"]: d for d in json.loads((corpus / "labels.json").read_text())}

    (tmp / "settings.json").write_text(json.dumps({"rho": 0.3, "trigger_threshold": 4}))
    for name in sorted(labels)[:2]:
        print()
        print(f"$ hifdetect detect corpus/{name}.csv --config settings.json --report {name}.json")
        code = main(["detect", str(corpus / f"{name}.csv"), "--config", str(tmp / "settings.json"),
                     "--report", str(tmp / f"{name}.json")])
        doc = json.loads((tmp / f"{name}.json").read_text())
        chosen = (doc.get("identification") or {}).get("chosen_feeder")
        print(f"exit code {code}; chosen {chosen}, labelled {labels[name]['faulty_feeder']}")
