"""Instant ghost imaging: streaming differential correlation and batch oracles."""

from .analysis import (GrowthSeries, QualityReport, bits_needed, compare_reconstructions,
                       contrast_to_noise, growth_series, memory_report, pearson_r,
                       reconstruction_quality)
from .engine import FLOAT64, FixedPointConfig, Snapshot, StreamingEngine, engine_run
from .errors import (ConfigError, DegenerateMaskError, FixedPointOverflow, FormatError, IGIError,
                     InsufficientDataError, ShapeError)
from .masks import ObjectMask, make_object_mask
from .oracles import (gi_background_subtraction, hbt_igi_offline, hbt_offline,
                      igi_four_term_expansion, igi_offline, variant_offline)
from .recording import read_recording, write_recording
from .simulate import simulate_arms, simulate_stream
from .speckle import (DetectorConfig, FieldConfig, SpeckleFrame, bucket_signal, generate_frame,
                      quantize_frame)
from .stream import Algorithm, MeasurementStream, Reconstruction, hbt_stream

__version__ = "0.1.0"
