"""Pointwise predictors over 1-D arrays: last-value and linear extrapolation.

Two separate uses, kept separate on purpose:

* the codec path predicts from reconstructed values so compressor and
  decompressor agree bit-exactly (that loop lives in the quantizer kernels);
* ``prediction_nrmse`` is an analysis metric computed from the true
  predecessors, with warm-up indices excluded so a perfectly linear input
  scores exactly zero under linear extrapolation.
"""

from __future__ import annotations

import enum
from typing import Sequence

import numpy as np

from .errors import DegenerateRangeError, ValidationError
from .model import field_range


class PredictorKind(enum.Enum):
    LV = "lv"    # copy the previous value
    LCF = "lcf"  # 2*prev - prev2


def predict(kind: PredictorKind, history: Sequence[float]) -> float:
    """Predict the next value from the history of predecessors.

    Boundary rule: empty history predicts 0.0; a single predecessor under
    LCF degrades to last-value.
    """
    m = len(history)
    if m == 0:
        return 0.0
    if kind is PredictorKind.LV or m == 1:
        return float(history[-1])
    return 2.0 * float(history[-1]) - float(history[-2])


def warmup_length(kind: PredictorKind) -> int:
    return 1 if kind is PredictorKind.LV else 2


def prediction_residuals(kind: PredictorKind, field: np.ndarray) -> np.ndarray:
    """Raw prediction errors from true predecessors, warm-up excluded."""
    x = np.asarray(field, dtype=np.float64)
    if kind is PredictorKind.LV:
        return x[1:] - x[:-1]
    return x[2:] - (2.0 * x[1:-1] - x[:-2])


def prediction_nrmse(kind: PredictorKind, field: np.ndarray) -> float:
    """Range-normalized RMS prediction error of a predictor on a field."""
    field = np.asarray(field)
    if field.shape[0] < 2:
        raise ValidationError("prediction NRMSE needs at least two samples")
    rng = field_range(field)
    if rng == 0.0:
        raise DegenerateRangeError("degenerate range: NRMSE undefined on constant field")
    res = prediction_residuals(kind, field)
    if res.size == 0:
        return 0.0
    return float(np.sqrt(np.mean(res * res)) / rng)
