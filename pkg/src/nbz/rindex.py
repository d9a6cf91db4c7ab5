"""R-index construction and segmented partial-radix sorting.

The r-index of a particle interleaves the bits of its integerized field
values (Morton style): bit j of field t lands at key bit j*f + (f-1-t),
so fields cycle per output bit with xx most significant within each
group.  Keys are built per segment after subtracting per-segment minima,
sorted segment-locally with a stable LSD radix sort that may skip the
trailing `ignored_groups` groups of `group_width` bits each.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from . import _kernels as K
from .errors import BoundTooSmallError, ValidationError
from .model import ParticleSnapshot


class RIndexVariant(enum.Enum):
    COORDINATE = "coord"
    VELOCITY = "vel"
    COORD_VELOCITY = "coordvel"

    @property
    def field_indices(self) -> Tuple[int, ...]:
        if self is RIndexVariant.COORDINATE:
            return (0, 1, 2)
        if self is RIndexVariant.VELOCITY:
            return (3, 4, 5)
        return (0, 1, 2, 3, 4, 5)

    @property
    def group_width(self) -> int:
        return len(self.field_indices)


def max_bits_per_field(group_width: int) -> int:
    # keys live in uint64
    return 21 if group_width == 3 else 64 // group_width


@dataclass(frozen=True)
class Segment:
    start: int
    end: int
    bits: int                        # B: bits per field in this segment
    minima: Tuple[int, ...]          # per interleaved field, in quanta

    @property
    def count(self) -> int:
        return self.end - self.start


@dataclass(frozen=True)
class RIndexPlan:
    """Sorting plan: which fields feed the keys, segment size, and how many
    trailing bit groups the radix sort skips."""

    variant: RIndexVariant
    segment_size: int
    ignored_groups: int

    def __post_init__(self):
        if self.segment_size < 1:
            raise ValidationError("segment_size must be >= 1")
        if self.ignored_groups < 0:
            raise ValidationError("ignored_groups must be >= 0")

    @property
    def group_width(self) -> int:
        return self.variant.group_width

    def sort(self, ints_by_field: Sequence[np.ndarray],
             ) -> Tuple[np.ndarray, List[Segment]]:
        """Build keys per this plan and return (order, segments)."""
        keys, segments = build_r_indices(ints_by_field, self.segment_size)
        return prx_sort(keys, segments, self.ignored_groups,
                        self.group_width), segments


def interleave(values: Sequence[int], bits_per_field: int) -> int:
    """Scalar bit interleave over arbitrary-precision ints."""
    f = len(values)
    if f not in (3, 6):
        raise ValidationError(f"interleave takes 3 or 6 fields, got {f}")
    key = 0
    for t, v in enumerate(values):
        v = int(v)
        if v < 0 or v >> bits_per_field:
            raise ValidationError(
                f"field {t} value {v} overflows interleave width {bits_per_field}")
        for j in range(bits_per_field):
            key |= ((v >> j) & 1) << (j * f + (f - 1 - t))
    return key


def deinterleave(key: int, f: int, bits_per_field: int) -> Tuple[int, ...]:
    out = []
    for t in range(f):
        v = 0
        for j in range(bits_per_field):
            v |= ((key >> (j * f + (f - 1 - t))) & 1) << j
        out.append(v)
    return tuple(out)


def interleave_arrays(columns: Sequence[np.ndarray], bits_per_field: int) -> np.ndarray:
    """Bulk interleave of nonnegative int64 columns into uint64 keys."""
    f = len(columns)
    if f not in (3, 6):
        raise ValidationError(f"interleave takes 3 or 6 fields, got {f}")
    if bits_per_field > max_bits_per_field(f):
        raise ValidationError(
            f"bits_per_field {bits_per_field} exceeds {max_bits_per_field(f)} "
            f"for {f}-field keys")
    cols = [np.ascontiguousarray(c, np.int64) for c in columns]
    n = cols[0].shape[0]
    for t, c in enumerate(cols):
        if c.shape[0] != n:
            raise ValidationError("interleave columns must have equal length")
        if c.size and (int(c.min()) < 0 or int(c.max()) >> bits_per_field):
            raise ValidationError(
                f"field {t} overflows interleave width {bits_per_field}")
    keys = np.empty(n, np.uint64)
    if n == 0:
        return keys
    if f == 3:
        K.interleave3(cols[0], cols[1], cols[2], keys)
    else:
        K.interleave_any(np.stack(cols), bits_per_field, keys)
    return keys


def deinterleave_arrays(keys: np.ndarray, f: int, bits_per_field: int) -> List[np.ndarray]:
    keys = np.ascontiguousarray(keys, np.uint64)
    n = keys.shape[0]
    if f == 3:
        x = np.empty(n, np.int64)
        y = np.empty(n, np.int64)
        z = np.empty(n, np.int64)
        if n:
            K.deinterleave3(keys, x, y, z)
        return [x, y, z]
    out = np.empty((f, n), np.int64)
    if n:
        K.deinterleave_any(keys, f, bits_per_field, out)
    return [out[t] for t in range(f)]


def segment_bounds(n: int, segment_size: int) -> np.ndarray:
    if segment_size < 1:
        raise ValidationError("segment_size must be >= 1")
    starts = list(range(0, n, segment_size)) + [n]
    if n == 0:
        starts = [0, 0]
    return np.array(starts, np.int64)


def build_r_indices(ints_by_field: Sequence[np.ndarray], segment_size: int,
                    allow_key_clamp: bool = True,
                    ) -> Tuple[np.ndarray, List[Segment]]:
    """Per-segment min-subtracted interleaved keys.

    B is chosen per segment as the bit width of the largest shifted value,
    capped at the uint64 budget.  When the cap bites, low-order bits are
    dropped from the sort key only; callers that reconstruct data from the
    keys must pass allow_key_clamp=False to get an error instead.
    """
    f = len(ints_by_field)
    cap = max_bits_per_field(f)
    cols = [np.ascontiguousarray(c, np.int64) for c in ints_by_field]
    n = cols[0].shape[0]
    bounds = segment_bounds(n, segment_size)
    keys = np.empty(n, np.uint64)
    segments: List[Segment] = []
    for si in range(bounds.shape[0] - 1):
        lo, hi = int(bounds[si]), int(bounds[si + 1])
        if hi <= lo:
            continue
        minima = [int(c[lo:hi].min()) for c in cols]
        shifted = [c[lo:hi] - m for c, m in zip(cols, minima)]
        need = max(int(s.max()).bit_length() for s in shifted)
        bits = min(need, cap)
        if need > cap:
            if not allow_key_clamp:
                raise BoundTooSmallError(
                    f"segment [{lo},{hi}) needs {need} index bits per field, "
                    f"cap is {cap}; use a looser bound")
            drop = need - bits
            shifted = [s >> drop for s in shifted]
        keys[lo:hi] = interleave_arrays(shifted, bits)
        segments.append(Segment(start=lo, end=hi, bits=bits, minima=tuple(minima)))
    return keys, segments


def prx_sort(keys: np.ndarray, segments: Sequence[Segment], ignored_groups: int,
             group_width: int) -> np.ndarray:
    """Stable within-segment order by keys with trailing groups masked.

    Returns a source-index permutation over the whole snapshot: applying
    ``arr[order]`` sorts each segment and leaves segment boundaries in
    place.  Segments whose masked key is empty (ignored_groups >= bits)
    keep their original order.
    """
    if ignored_groups < 0:
        raise ValidationError("ignored_groups must be >= 0")
    keys = np.ascontiguousarray(keys, np.uint64)
    n = keys.shape[0]
    order = np.arange(n, dtype=np.int64)
    if not segments:
        return order
    nseg = len(segments)
    starts = np.empty(nseg + 1, np.int64)
    shifts = np.empty(nseg, np.int64)
    sort_bits = np.empty(nseg, np.int64)
    for i, seg in enumerate(segments):
        starts[i] = seg.start
        width = seg.bits * group_width
        eff = min(ignored_groups, seg.bits)
        shifts[i] = eff * group_width
        sort_bits[i] = width - shifts[i]
    starts[nseg] = segments[-1].end
    K.prx_order(keys, starts, shifts, sort_bits, group_width, order)
    return order


def check_permutation(order: np.ndarray, n: int) -> np.ndarray:
    order = np.ascontiguousarray(order, np.int64)
    if order.shape[0] != n:
        raise ValidationError(f"permutation length {order.shape[0]} != {n}")
    if n and (np.bincount(order, minlength=n) != 1).any():
        raise ValidationError("permutation is not a bijection")
    return order


def apply_permutation(snapshot: ParticleSnapshot, order: np.ndarray) -> ParticleSnapshot:
    """Reorder all six arrays identically; out[i] = in[order[i]]."""
    order = check_permutation(order, snapshot.n)
    return ParticleSnapshot(*(f[order] for f in snapshot.fields()))
