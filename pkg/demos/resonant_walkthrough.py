"""Walk one resonant-grounded fault through the whole chain.

A four-feeder network with a slightly overcompensated Petersen coil gets
a 20 A fault on feeder F2.  We look at the interval slope of each channel,
the per-cycle M-shape verdicts, the detection trigger and finally the
INDEX means that pick the faulty feeder.

    python3 demos/resonant_walkthrough.py
"""

import numpy as np

from hifdetect import PipelineConfig, run_pipeline
from hifdetect.netsim.model import DistortionSpec, NetworkParams
from hifdetect.netsim.noise import add_noise
from hifdetect.netsim.solvers import solve

params = NetworkParams(C0=(3.0e-6, 0.12e-6, 2.5e-6, 2.0e-6), faulty=1, neutral="resonant", v=-0.08)
spec = DistortionSpec(I_fM=20.0, I_fM_dist=15.0, phi=0.3, tau=-0.5)
clean = solve(params, spec, cycles=30, onset_cycle=3.0, ramp_cycles=2.0, prefault_level=0.02)
record = add_noise(clean, snr_db=35.0, seed=1)

print("channels:", ", ".join(record.feeder_ids))
print(f"faulty feeder (ground truth): {params.faulty_id}")
kcl = np.max(np.abs(clean.current_matrix().sum(axis=0)))
print(f"noise-free KCL residual: {kcl:.2e} A")

report = run_pipeline(record, PipelineConfig())
print()
print("double-M cycles per channel (cycles 0..29):")
for fid in record.feeder_ids:
    row = "".join("M" if report.flags[fid].get(c) else "." for c in range(report.n_cycles))
    print(f"  {fid:>3} {row}")

print()
print(f"first feeder trigger: cycle {report.trigger_cycle} (fault starts ramping in at cycle 3)")
ident = report.identification
print(f"identification window: cycles {ident.window[0]}..{ident.window[1]}, variant '{ident.chosen_variant}'")
for fid, m in ident.means().items():
    mark = "  <- chosen" if fid == ident.chosen_feeder else ""
    print(f"  mean INDEX {fid:>3}: {m:+.4f}{mark}")
print()
print("the healthy feeders and the coil channel never show a double M, so")
print("INDEX is only collected on the faulty feeder, with a positive sign.")
