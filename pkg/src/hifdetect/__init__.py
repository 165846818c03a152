"""High-impedance fault detection and faulty-feeder identification from
zero-sequence waveforms, with a circuit-level simulator for testing."""

from .config import PipelineConfig
from .detect import (
    DetectionState,
    HalfCycleFeature,
    cycle_is_faulty,
    detect_stream,
    m_shape_half_cycle,
    scan_half_cycles,
    update_detection,
)
from .distortion import (
    IntervalSlopeSeries,
    interval_slope,
    interval_slope_batch,
    interval_slope_series,
    is_zero_crossings,
    refit_interval,
)
from .errors import (
    AlignmentError,
    HIFError,
    IngestionError,
    ManifestError,
    OracleError,
    ParameterError,
    RangeError,
    SequencingError,
)
from .feeder import IdentificationReport, IndexSample, c_dir, compute_index, identify
from .fileio import emit_plot_data, emit_report, export_csv, ingest_csv, load_report
from .pipeline import RunReport, run_pipeline
from .signal import (
    NeutralType,
    SampleSeries,
    SynchronizedRecord,
    fundamental_phasor,
    lowpass,
    zero_sequence,
)

__version__ = "0.1.0"
