"""Camera-based vital-sign estimation benchmark: estimators, metrics and factor analysis."""
from ._kernels import BACKEND
from .chunkio import ChunkMetadata, VideoChunk, VitalsLabel, Waveform, load_chunk, save_chunk
from .estimators import EstimatorId, estimate_chrom, estimate_g, estimate_pos, run_estimator
from .factors import DesignMatrix, RegressionReport, bucket_analysis, build_design, fit_ols
from .metrics import ChunkMetrics, DatasetReport, EstimationResult, aggregate, evaluate_chunk, pearson_r, snr_db
from .rates import HR_BAND, RR_BAND, FrequencyBand, bandpass, rate_from_waveform
from .synth import SynthSpec, generate
from .timing import measure_frame_time
from .trace import RgbTrace, extract_trace

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "ChunkMetadata", "VideoChunk", "VitalsLabel", "Waveform", "load_chunk", "save_chunk",
    "EstimatorId", "estimate_chrom", "estimate_g", "estimate_pos", "run_estimator",
    "DesignMatrix", "RegressionReport", "bucket_analysis", "build_design", "fit_ols",
    "ChunkMetrics", "DatasetReport", "EstimationResult", "aggregate", "evaluate_chunk", "pearson_r", "snr_db",
    "HR_BAND", "RR_BAND", "FrequencyBand", "bandpass", "rate_from_waveform",
    "SynthSpec", "generate", "measure_frame_time", "RgbTrace", "extract_trace",
]
