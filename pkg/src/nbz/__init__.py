"""Error-bounded lossy compression toolkit for single-snapshot N-body
particle data."""

from .datagen import GeneratorConfig, Profile, generate, generate_profile
from .errors import (ArchiveError, BoundTooSmallError, DecodeError,
                     DegenerateRangeError, EncodeError, NbzError,
                     ValidationError)
from .metrics import (DistortionReport, evaluate, max_abs_error, nrmse, psnr,
                      rd_sweep, run_mode)
from .model import (BoundKind, ErrorBoundSpec, FieldStats, ParticleSnapshot,
                    field_stats, lag1_autocorr, resolve_bound)
from .pipeline import (Archive, CompressResult, Mode, Settings, compress,
                       decompress, ratio)
from .predict import PredictorKind, predict, prediction_nrmse
from .quantize import (IntegerizedField, QuantizedField, integerize,
                       quantize_field, quantize_residual)
from .rindex import (RIndexPlan, RIndexVariant, apply_permutation,
                     build_r_indices, interleave, prx_sort)

__version__ = "0.1.0"

__all__ = [
    "Archive", "ArchiveError", "BoundKind", "BoundTooSmallError",
    "CompressResult", "DecodeError", "DegenerateRangeError",
    "DistortionReport", "EncodeError", "ErrorBoundSpec", "FieldStats",
    "GeneratorConfig", "IntegerizedField", "Mode", "NbzError",
    "ParticleSnapshot", "PredictorKind", "Profile", "QuantizedField",
    "RIndexPlan", "RIndexVariant", "Settings", "ValidationError",
    "apply_permutation", "build_r_indices", "compress", "decompress",
    "evaluate", "field_stats", "generate", "generate_profile", "integerize",
    "interleave", "lag1_autocorr", "max_abs_error", "nrmse", "predict",
    "prediction_nrmse", "prx_sort", "psnr", "quantize_field",
    "quantize_residual", "ratio", "rd_sweep", "resolve_bound", "run_mode",
    "__version__",
]
