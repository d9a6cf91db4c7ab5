"""Error-bounded quantization.

Two flavors, matching the two codec families:

* residual quantization with an escape code for the prediction-based
  pipelines: code 0 is reserved for escapes, other codes map the signed
  grid index q into [1, interval_count];
* whole-value integerization for the space-filling-curve pipelines:
  ints[i] = round(x[i] / (2*bound)), round-half-even.

Both guarantee |original - float32(reconstruction)| <= bound at every
position: the residual quantizer escapes any position where the final
float32 rounding would break the bound, and callers of ``integerize``
patch the rare positions where it would (see pipeline corrections).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from . import _kernels as K
from .errors import BoundTooSmallError, ValidationError
from .predict import PredictorKind

DEFAULT_INTERVALS = 65536
_MAX_INTERVALS = 1 << 30
_INT_LIMIT = float(1 << 62)


@dataclass(frozen=True)
class QuantizedField:
    """Quantization codes plus verbatim escape values for one field."""

    codes: np.ndarray        # int32, 0 = escape
    escapes: np.ndarray      # float32, one per zero code, in position order
    interval_count: int
    bound: float

    def __post_init__(self):
        if int((self.codes == 0).sum()) != self.escapes.shape[0]:
            raise ValidationError("escape count does not match zero codes")


@dataclass(frozen=True)
class IntegerizedField:
    """Whole-value integerization of one field."""

    ints: np.ndarray  # int64
    bound: float

    def reconstruct(self) -> np.ndarray:
        return (self.ints.astype(np.float64) * (2.0 * self.bound)).astype(np.float32)


def _check_params(bound: float, interval_count: int) -> int:
    if not (bound > 0) or not np.isfinite(bound):
        raise ValidationError(f"bound must be positive and finite, got {bound}")
    if interval_count < 2 or interval_count % 2 != 0 or interval_count > _MAX_INTERVALS:
        raise ValidationError(
            f"interval_count must be even, >= 2 and <= {_MAX_INTERVALS}, "
            f"got {interval_count}")
    return interval_count // 2


def quantize_residual(real: float, predicted: float, bound: float,
                      interval_count: int) -> Tuple[int, float]:
    """Quantize one residual; returns (code, reconstructed).

    Code 0 means escape: the value is stored verbatim and reconstructs
    exactly.  Reconstruction is the float32 value the decompressor will
    see.
    """
    half = _check_params(bound, interval_count)
    real64 = float(np.float32(real))
    pred64 = float(predicted)
    # same multiply-by-inverse form as the bulk kernel, for bit agreement
    qf = K.rint_scalar((real64 - pred64) * (1.0 / (2.0 * bound)))
    if -half <= qf <= half - 1:
        r32 = np.float32(pred64 + qf * 2.0 * bound)
        if abs(real64 - float(r32)) <= bound:
            return int(qf) + half + 1, float(r32)
    return 0, real64


def quantize_field(field: np.ndarray, kind: PredictorKind, bound: float,
                   interval_count: int = DEFAULT_INTERVALS,
                   ) -> Tuple[QuantizedField, np.ndarray]:
    """Quantize a whole field with reconstruction feedback.

    Returns the quantized field and the float32 reconstruction array
    (what decompression will produce).
    """
    half = _check_params(bound, interval_count)
    x = np.ascontiguousarray(field, dtype=np.float32)
    n = x.shape[0]
    codes = np.empty(n, np.int32)
    recon = np.empty(n, np.float32)
    esc = np.empty(n, np.float32)
    n_esc = K.sz_quantize(x, float(bound), half, kind is PredictorKind.LCF,
                          codes, recon, esc)
    q = QuantizedField(codes=codes, escapes=esc[:n_esc].copy(),
                       interval_count=interval_count, bound=float(bound))
    return q, recon


def dequantize_field(q: QuantizedField, kind: PredictorKind) -> np.ndarray:
    half = q.interval_count // 2
    recon = np.empty(q.codes.shape[0], np.float32)
    K.sz_dequantize(q.codes, q.escapes, q.bound, half,
                    kind is PredictorKind.LCF, recon)
    return recon


def integerize(field: np.ndarray, bound: float) -> IntegerizedField:
    """ints[i] = round(field[i] / (2*bound)), round-half-even."""
    if not (bound > 0) or not np.isfinite(bound):
        raise ValidationError(f"bound must be positive and finite, got {bound}")
    x = np.asarray(field, dtype=np.float32).astype(np.float64)
    scaled = x / (2.0 * bound)
    if scaled.size and float(np.max(np.abs(scaled))) > _INT_LIMIT:
        raise BoundTooSmallError(
            f"bound {bound} too small for value magnitude "
            f"{float(np.max(np.abs(x)))}")
    ints = np.rint(scaled).astype(np.int64)
    return IntegerizedField(ints=ints, bound=float(bound))
