"""Closed-form zero-sequence waveforms of HIFs in three neutral groundings."""

from .corpus import RecordLabel, build_corpus, default_manifest, healthy_record
from .model import DistortionSpec, NetworkParams, synth_fault_distortion
from .noise import add_noise, periodic_impulses
from .oracle import compare_closed_form, ode_oracle
from .solvers import solve, solve_isolated, solve_low_resistor, solve_resonant
