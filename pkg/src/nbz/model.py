"""Core data model: particle snapshots, error-bound resolution, field stats.

A snapshot is six parallel single-precision arrays (xx, yy, zz, vx, vy, vz)
where index i refers to the same particle in every array.  All statistics
accumulate in float64.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterator, Optional

import numpy as np

from .errors import DegenerateRangeError, ValidationError

FIELD_NAMES = ("xx", "yy", "zz", "vx", "vy", "vz")
COORD_FIELDS = (0, 1, 2)
VELOCITY_FIELDS = (3, 4, 5)
BYTES_PER_VALUE = 4  # single precision end-to-end


def _as_field(name: str, values) -> np.ndarray:
    arr = np.asarray(values)
    if arr.ndim != 1:
        raise ValidationError(f"field {name} must be 1-D, got shape {arr.shape}")
    arr = np.ascontiguousarray(arr, dtype=np.float32)
    if arr.size and not np.isfinite(arr).all():
        bad = int(np.flatnonzero(~np.isfinite(arr))[0])
        raise ValidationError(f"field {name} has non-finite value at index {bad}")
    return arr


@dataclass(frozen=True)
class ParticleSnapshot:
    """Six parallel float32 arrays of equal length."""

    xx: np.ndarray
    yy: np.ndarray
    zz: np.ndarray
    vx: np.ndarray
    vy: np.ndarray
    vz: np.ndarray

    def __post_init__(self):
        lengths = set()
        for name in FIELD_NAMES:
            arr = _as_field(name, getattr(self, name))
            object.__setattr__(self, name, arr)
            lengths.add(arr.shape[0])
        if len(lengths) > 1:
            raise ValidationError(f"field lengths differ: {sorted(lengths)}")

    @property
    def n(self) -> int:
        return int(self.xx.shape[0])

    def field(self, index: int) -> np.ndarray:
        return getattr(self, FIELD_NAMES[index])

    def fields(self) -> Iterator[np.ndarray]:
        for name in FIELD_NAMES:
            yield getattr(self, name)

    @classmethod
    def from_fields(cls, fields) -> "ParticleSnapshot":
        return cls(*fields)

    @classmethod
    def empty(cls) -> "ParticleSnapshot":
        z = np.zeros(0, np.float32)
        return cls(z, z, z, z, z, z)

    def original_bytes(self) -> int:
        return BYTES_PER_VALUE * len(FIELD_NAMES) * self.n


class BoundKind(enum.Enum):
    ABSOLUTE = "abs"
    VALUE_RANGE_RELATIVE = "rel"


@dataclass(frozen=True)
class ErrorBoundSpec:
    """Absolute bound, or a fraction of each field's value range."""

    kind: BoundKind
    value: float

    def __post_init__(self):
        if not (self.value > 0) or not np.isfinite(self.value):
            raise ValidationError(f"error bound must be positive, got {self.value}")

    @classmethod
    def absolute(cls, value: float) -> "ErrorBoundSpec":
        return cls(BoundKind.ABSOLUTE, float(value))

    @classmethod
    def relative(cls, value: float) -> "ErrorBoundSpec":
        return cls(BoundKind.VALUE_RANGE_RELATIVE, float(value))


def field_range(field: np.ndarray) -> float:
    if field.size == 0:
        raise ValidationError("range of an empty field is undefined")
    lo = float(np.min(field, initial=np.inf))
    hi = float(np.max(field, initial=-np.inf))
    return hi - lo


def resolve_bound(spec: ErrorBoundSpec, field: np.ndarray) -> float:
    """Resolve a bound spec to an absolute bound for one field.

    A relative spec on a zero-range field is rejected; the pipelines
    handle that case with the constant-field fast path instead.
    """
    if field.size == 0:
        raise ValidationError("cannot resolve a bound against an empty field")
    if spec.kind is BoundKind.ABSOLUTE:
        return float(spec.value)
    rng = field_range(field)
    if rng == 0.0:
        raise DegenerateRangeError("degenerate range: relative bound on constant field")
    return float(spec.value) * rng


@dataclass(frozen=True)
class FieldStats:
    min: float
    max: float
    range: float
    lag1_autocorr: Optional[float]  # None when undefined (n < 2 or zero variance)


def lag1_autocorr(field: np.ndarray) -> Optional[float]:
    """Pearson correlation between field[:-1] and field[1:]."""
    n = field.shape[0]
    if n < 2:
        return None
    a = field[:-1].astype(np.float64)
    b = field[1:].astype(np.float64)
    a = a - a.mean()
    b = b - b.mean()
    denom = np.sqrt((a * a).sum() * (b * b).sum())
    if denom == 0.0:
        return None
    return float((a * b).sum() / denom)


def field_stats(field: np.ndarray) -> FieldStats:
    if field.size == 0:
        raise ValidationError("stats of an empty field are undefined")
    lo = float(np.min(field))
    hi = float(np.max(field))
    return FieldStats(min=lo, max=hi, range=hi - lo, lag1_autocorr=lag1_autocorr(field))
