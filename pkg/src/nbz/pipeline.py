"""End-to-end codecs.

Modes:

* sz-lcf / sz-lv: per field, predict (with reconstruction feedback) ->
  residual quantization -> canonical Huffman; escapes stored verbatim.
* sz-lv-prx: integerize the r-index fields per segment, partial-radix
  sort, reorder all six arrays, then the sz-lv pipeline per field.
* cpc2000: full r-index sort; coordinates stored as first key + adjacent
  key deltas under adaptive VLC; velocities as VLC of integerized values.
* sz-cpc2000: cpc2000 coordinates, sz-lv velocities (on the sorted order).

Sorted modes emit data in sorted order; the original order is not
recoverable from the archive.  ``compress`` returns the permutation so
test harnesses can match positions; it is never part of the archive.

Every mode guarantees |original - reconstruction| <= bound per value:
the residual quantizer escapes values its grid cannot hold, and the
integerized paths carry explicit verbatim corrections for the rare
positions where the final float32 rounding would overshoot the bound.
"""

from __future__ import annotations

import enum
import struct
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from . import encode as E
from . import _kernels as K
from .errors import DecodeError, ValidationError
from .model import (FIELD_NAMES, ErrorBoundSpec, ParticleSnapshot,
                    field_range, resolve_bound)
from .predict import PredictorKind
from .quantize import (DEFAULT_INTERVALS, QuantizedField, dequantize_field,
                       integerize, quantize_field)
from .rindex import RIndexVariant, Segment, build_r_indices, prx_sort


class Mode(enum.Enum):
    SZ_LCF = "sz-lcf"
    SZ_LV = "sz-lv"
    SZ_LV_PRX = "sz-lv-prx"
    SZ_CPC2000 = "sz-cpc2000"
    CPC2000 = "cpc2000"

    @property
    def uid(self) -> int:
        return _MODE_UIDS[self]

    @property
    def is_sorted(self) -> bool:
        return self in (Mode.SZ_LV_PRX, Mode.SZ_CPC2000, Mode.CPC2000)

    @property
    def stores_minima(self) -> bool:
        # cpc-family reconstructs coordinates from the keys themselves
        return self in (Mode.SZ_CPC2000, Mode.CPC2000)

    @classmethod
    def from_uid(cls, uid: int) -> "Mode":
        for m in cls:
            if m.uid == uid:
                return m
        raise DecodeError(f"unknown mode id {uid}")


_MODE_UIDS = {Mode.SZ_LCF: 0, Mode.SZ_LV: 1, Mode.SZ_LV_PRX: 2,
              Mode.SZ_CPC2000: 3, Mode.CPC2000: 4}

MODE_ALIASES = {"best-speed": Mode.SZ_LV, "best-tradeoff": Mode.SZ_LV_PRX,
                "best-compression": Mode.SZ_CPC2000}


@dataclass(frozen=True)
class Settings:
    interval_count: int = DEFAULT_INTERVALS
    segment_size: int = 16384
    ignored_groups: int = 6
    rindex_variant: RIndexVariant = RIndexVariant.COORDINATE

    def __post_init__(self):
        if self.segment_size < 1:
            raise ValidationError("segment_size must be >= 1")
        if self.ignored_groups < 0:
            raise ValidationError("ignored_groups must be >= 0")
        if (self.interval_count < 2 or self.interval_count % 2
                or self.interval_count > (1 << 30)):
            raise ValidationError("interval_count must be even and in [2, 2^30]")


DEFAULT_SETTINGS = Settings()

Bounds = Union[ErrorBoundSpec, Mapping[str, ErrorBoundSpec]]


class StreamKind(enum.IntEnum):
    SZ_FIELD = 0
    VLC_FIELD = 1
    RINDEX = 2


NO_FIELD = 255


@dataclass(frozen=True)
class Stream:
    kind: StreamKind
    field: int  # 0..5, or NO_FIELD for the joint coordinate stream
    payload: bytes


@dataclass
class Archive:
    """Self-describing compressed container (in-memory form)."""

    mode: Mode
    n: int
    interval_count: int
    segment_size: int
    ignored_groups: int
    rindex_variant: Optional[RIndexVariant]
    bounds: Tuple[float, ...]       # resolved absolute bound per field, 0.0 if none
    constant_mask: int
    constants: Tuple[float, ...]
    segments: Tuple[Segment, ...]
    streams: Tuple[Stream, ...]
    _wire: Optional[bytes] = field(default=None, repr=False, compare=False)

    def is_constant(self, field_index: int) -> bool:
        return bool(self.constant_mask & (1 << field_index))

    def serialized(self) -> bytes:
        if self._wire is None:
            from . import io as nbz_io
            self._wire = nbz_io.serialize_archive(self)
        return self._wire

    def total_bytes(self) -> int:
        return len(self.serialized())


@dataclass(frozen=True)
class CompressResult:
    archive: Archive
    order: Optional[np.ndarray]  # sorted modes only; sidecar, never in the archive


_PREDICTOR = {Mode.SZ_LCF: PredictorKind.LCF}
_CORR_DTYPE = np.dtype([("pos", "<u8"), ("val", "<f4")])
_WIDTHS_TAB = np.stack([E.VLC_SCHEMES[i].widths_array() for i in range(4)])


def resolve_field_bounds(snapshot: ParticleSnapshot, bounds: Bounds,
                         ) -> Tuple[List[Optional[float]], List[float], int]:
    """Per-field resolved bounds, constants and the constant mask.

    Constant fields take the fast path regardless of bound kind; their
    resolved bound slot is kept only when it is meaningful (absolute).
    """
    resolved: List[Optional[float]] = []
    constants: List[float] = []
    mask = 0
    for i, name in enumerate(FIELD_NAMES):
        arr = snapshot.field(i)
        spec = bounds[name] if isinstance(bounds, Mapping) else bounds
        if arr.size == 0:
            resolved.append(None)
            constants.append(0.0)
            continue
        if field_range(arr) == 0.0:
            mask |= 1 << i
            resolved.append(None)
            constants.append(float(arr[0]))
            continue
        resolved.append(resolve_bound(spec, arr))
        constants.append(0.0)
    return resolved, constants, mask


# ----------------------------------------------------------------------
# SZ field streams
# ----------------------------------------------------------------------

def _build_sz_stream(arr: np.ndarray, kind: PredictorKind, bound: float,
                     interval_count: int) -> Tuple[bytes, np.ndarray]:
    q, recon = quantize_field(arr, kind, bound, interval_count)
    freqs = np.bincount(q.codes)
    table = E.huffman_build(freqs)
    bits = E.huffman_encode(q.codes, table)
    payload = bytearray()
    payload += struct.pack("<I", q.escapes.shape[0])
    payload += table.serialize()
    payload += struct.pack("<Q", bits.bit_length)
    payload += bits.to_bytes()
    payload += q.escapes.astype("<f4").tobytes()
    return bytes(payload), recon


def _parse_sz_stream(payload: bytes, n: int, bound: float, interval_count: int,
                     kind: PredictorKind, name: str) -> np.ndarray:
    try:
        offset = 0
        (n_esc,) = struct.unpack_from("<I", payload, offset)
        offset += 4
        table, offset = E.HuffmanTable.deserialize(payload, offset)
        (bit_length,) = struct.unpack_from("<Q", payload, offset)
        offset += 8
        nbytes = (bit_length + 7) // 8
        if offset + nbytes + 4 * n_esc > len(payload):
            raise DecodeError("truncated payload")
        codes = E.huffman_decode(payload[offset:offset + nbytes], table, n,
                                 bit_length=bit_length)
        offset += nbytes
        escapes = np.frombuffer(payload, "<f4", count=n_esc, offset=offset)
        q = QuantizedField(codes=codes, escapes=escapes.astype(np.float32),
                           interval_count=interval_count, bound=bound)
        return dequantize_field(q, kind)
    except (struct.error, ValidationError, DecodeError) as exc:
        raise DecodeError(f"field {name}: {exc}") from exc


# ----------------------------------------------------------------------
# integerized streams (cpc-family)
# ----------------------------------------------------------------------

def _float32_corrections(orig: np.ndarray, recon: np.ndarray, bound: float,
                         ) -> np.ndarray:
    err = np.abs(orig.astype(np.float64) - recon.astype(np.float64))
    idx = np.flatnonzero(err > bound)
    rec = np.empty(idx.shape[0], _CORR_DTYPE)
    rec["pos"] = idx.astype(np.uint64)
    rec["val"] = orig[idx]
    return rec


def _apply_corrections(recon: np.ndarray, rec: np.ndarray, name: str) -> None:
    if rec.shape[0] == 0:
        return
    pos = rec["pos"].astype(np.int64)
    if pos.size and (int(pos.max()) >= recon.shape[0] or int(pos.min()) < 0):
        raise DecodeError(f"field {name}: correction position out of range")
    recon[pos] = rec["val"]


def _pack_corrections(rec: np.ndarray) -> bytes:
    return struct.pack("<I", rec.shape[0]) + rec.tobytes()


def _unpack_corrections(payload: bytes, offset: int) -> Tuple[np.ndarray, int]:
    (cnt,) = struct.unpack_from("<I", payload, offset)
    offset += 4
    if offset + cnt * _CORR_DTYPE.itemsize > len(payload):
        raise DecodeError("truncated correction list")
    rec = np.frombuffer(payload, _CORR_DTYPE, count=cnt, offset=offset)
    offset += cnt * _CORR_DTYPE.itemsize
    return rec, offset


def _segment_costs(per_value: Optional[np.ndarray], starts: np.ndarray,
                   skip_first: bool) -> Optional[np.ndarray]:
    """Total bits per segment, optionally excluding each segment's first value."""
    if per_value is None:
        return None
    cs = np.concatenate([[0], np.cumsum(per_value, dtype=np.int64)])
    lo = starts[:-1] + (1 if skip_first else 0)
    hi = starts[1:]
    lo = np.minimum(lo, hi)
    return cs[hi] - cs[lo]


def _choose_schemes(ms: np.ndarray, starts: np.ndarray, skip_first: bool,
                    candidates: Sequence[E.VlcScheme],
                    ) -> Tuple[np.ndarray, np.ndarray]:
    """Per-segment scheme ids and encoded bits over the candidate set."""
    nseg = starts.shape[0] - 1
    costs = np.full((len(candidates), nseg), np.iinfo(np.int64).max, np.int64)
    for ci, cand in enumerate(candidates):
        per_value = E.vlc_cost_per_value(ms, cand)
        if per_value is None:
            # a candidate may fail globally yet fit every value of some
            # segment; recompute per segment below only if needed
            per_value = _vlc_cost_unchecked(ms, cand)
            seg_ok = _segment_encodable(ms, starts, skip_first, cand)
            seg_cost = _segment_costs(per_value, starts, skip_first)
            costs[ci, seg_ok] = seg_cost[seg_ok]
        else:
            costs[ci] = _segment_costs(per_value, starts, skip_first)
    best = np.argmin(costs, axis=0)
    best_bits = costs[best, np.arange(nseg)]
    if (best_bits == np.iinfo(np.int64).max).any():
        raise E.EncodeError("no candidate scheme can encode a segment")
    ids = np.array([candidates[ci].scheme_id for ci in best], np.uint8)
    return ids, best_bits


def _vlc_cost_unchecked(ms: np.ndarray, scheme: E.VlcScheme) -> np.ndarray:
    limits = E._bucket_limits(scheme)
    buckets = np.minimum(np.searchsorted(limits, ms, side="left"), 7)
    plens = np.where(buckets < 7, buckets + 1, 7)
    return plens + np.array(scheme.payload_widths, np.int64)[buckets]


def _segment_encodable(ms: np.ndarray, starts: np.ndarray, skip_first: bool,
                       scheme: E.VlcScheme) -> np.ndarray:
    limit = E._bucket_limits(scheme)[-1]
    bad = (ms > limit).astype(np.int64)
    cs = np.concatenate([[0], np.cumsum(bad)])
    lo = np.minimum(starts[:-1] + (1 if skip_first else 0), starts[1:])
    return (cs[starts[1:]] - cs[lo]) == 0


def _build_coord_stream(keys_sorted: np.ndarray, segments: Sequence[Segment],
                        corrections: Sequence[np.ndarray]) -> bytes:
    nseg = len(segments)
    starts = np.array([s.start for s in segments] + [segments[-1].end if nseg else 0],
                      np.int64)
    deltas = np.zeros(keys_sorted.shape[0], np.uint64)
    if keys_sorted.shape[0] > 1:
        deltas[1:] = keys_sorted[1:] - keys_sorted[:-1]
    ids, delta_bits = _choose_schemes(deltas, starts, True, E.UNSIGNED_CANDIDATES)
    key_bits = np.array([s.bits * 3 for s in segments], np.int64)
    total_bits = int(delta_bits.sum() + key_bits.sum())
    out = np.zeros(total_bits // 8 + 16, np.uint8)
    nbytes = K.cpc_encode_keys(keys_sorted, starts, key_bits, ids, _WIDTHS_TAB, out)
    payload = bytearray()
    payload += ids.tobytes()
    payload += struct.pack("<Q", total_bits)
    payload += out[:nbytes].tobytes()
    for rec in corrections:
        payload += _pack_corrections(rec)
    return bytes(payload)


def _parse_coord_stream(payload: bytes, n: int, segments: Sequence[Segment],
                        ) -> Tuple[np.ndarray, List[np.ndarray]]:
    try:
        return _parse_coord_stream_inner(payload, n, segments)
    except struct.error as exc:
        raise DecodeError(f"coords: truncated payload: {exc}") from exc


def _parse_coord_stream_inner(payload, n, segments):
    nseg = len(segments)
    offset = 0
    if offset + nseg > len(payload):
        raise DecodeError("coords: truncated scheme ids")
    ids = np.frombuffer(payload, np.uint8, count=nseg, offset=offset)
    offset += nseg
    (total_bits,) = struct.unpack_from("<Q", payload, offset)
    offset += 8
    nbytes = (total_bits + 7) // 8
    if offset + nbytes > len(payload):
        raise DecodeError("coords: truncated bit region")
    data = np.frombuffer(payload, np.uint8, count=nbytes, offset=offset)
    offset += nbytes
    if ids.size and int(ids.max()) >= len(E.VLC_SCHEMES):
        raise DecodeError("coords: unknown VLC scheme id")
    starts = np.array([s.start for s in segments] + [segments[-1].end if nseg else 0],
                      np.int64)
    key_bits = np.array([s.bits * 3 for s in segments], np.int64)
    keys = np.zeros(n, np.uint64)
    scratch = np.zeros(max(1, n), np.int64)
    status = K.cpc_decode_keys(data, total_bits, starts, key_bits, ids,
                               _WIDTHS_TAB, keys, scratch)
    if status != 0:
        raise DecodeError("coords: truncated key stream")
    corrections = []
    for _ in range(3):
        rec, offset = _unpack_corrections(payload, offset)
        corrections.append(rec)
    return keys, corrections


def _build_vel_stream(ints: np.ndarray, segments: Sequence[Segment],
                      corrections: np.ndarray) -> bytes:
    nseg = len(segments)
    starts = np.array([s.start for s in segments] + [segments[-1].end if nseg else 0],
                      np.int64)
    ms = E.zigzag(ints)
    ids, bits = _choose_schemes(ms, starts, False, E.SIGNED_CANDIDATES)
    total_bits = int(bits.sum())
    out = np.zeros(total_bits // 8 + 16, np.uint8)
    nbytes = K.vlc_encode_segmented(ms, starts, ids, _WIDTHS_TAB, out)
    payload = bytearray()
    payload += ids.tobytes()
    payload += struct.pack("<Q", total_bits)
    payload += out[:nbytes].tobytes()
    payload += _pack_corrections(corrections)
    return bytes(payload)


def _parse_vel_stream(payload: bytes, n: int, segments: Sequence[Segment],
                      name: str) -> Tuple[np.ndarray, np.ndarray]:
    try:
        return _parse_vel_stream_inner(payload, n, segments, name)
    except struct.error as exc:
        raise DecodeError(f"field {name}: truncated payload: {exc}") from exc


def _parse_vel_stream_inner(payload, n, segments, name):
    nseg = len(segments)
    offset = 0
    if offset + nseg > len(payload):
        raise DecodeError(f"field {name}: truncated scheme ids")
    ids = np.frombuffer(payload, np.uint8, count=nseg, offset=offset)
    offset += nseg
    (total_bits,) = struct.unpack_from("<Q", payload, offset)
    offset += 8
    nbytes = (total_bits + 7) // 8
    if offset + nbytes > len(payload):
        raise DecodeError(f"field {name}: truncated bit region")
    data = np.frombuffer(payload, np.uint8, count=nbytes, offset=offset)
    offset += nbytes
    if ids.size and int(ids.max()) >= len(E.VLC_SCHEMES):
        raise DecodeError(f"field {name}: unknown VLC scheme id")
    starts = np.array([s.start for s in segments] + [segments[-1].end if nseg else 0],
                      np.int64)
    out = np.empty(n, np.int64)
    status = K.vlc_decode_segmented(data, total_bits, starts, ids, _WIDTHS_TAB,
                                    True, out)
    if status != 0:
        raise DecodeError(f"field {name}: truncated VLC stream")
    rec, offset = _unpack_corrections(payload, offset)
    return out, rec


# ----------------------------------------------------------------------
# compress / decompress
# ----------------------------------------------------------------------

def _rindex_ints(snapshot: ParticleSnapshot, variant: RIndexVariant,
                 resolved: Sequence[Optional[float]]) -> List[np.ndarray]:
    cols = []
    for fi in variant.field_indices:
        arr = snapshot.field(fi)
        if resolved[fi] is None:
            cols.append(np.zeros(arr.shape[0], np.int64))
        else:
            cols.append(integerize(arr, resolved[fi]).ints)
    return cols


def compress(snapshot: ParticleSnapshot, mode: Mode, bounds: Bounds,
             settings: Settings = DEFAULT_SETTINGS) -> CompressResult:
    resolved, constants, mask = resolve_field_bounds(snapshot, bounds)
    n = snapshot.n
    order: Optional[np.ndarray] = None
    segments: Tuple[Segment, ...] = ()
    streams: List[Stream] = []
    variant: Optional[RIndexVariant] = None

    work = snapshot
    if mode.is_sorted and n > 0:
        variant = (RIndexVariant.COORDINATE if mode.stores_minima
                   else settings.rindex_variant)
        cols = _rindex_ints(snapshot, variant, resolved)
        keys, seg_list = build_r_indices(
            cols, settings.segment_size,
            allow_key_clamp=not mode.stores_minima)
        k = 0 if mode.stores_minima else settings.ignored_groups
        order = prx_sort(keys, seg_list, k, variant.group_width)
        work = ParticleSnapshot(*(f[order] for f in snapshot.fields()))
        if mode.stores_minima:
            segments = tuple(seg_list)
        else:
            # minima are only needed to rebuild coordinates from keys
            segments = tuple(Segment(s.start, s.end, s.bits, ()) for s in seg_list)

    predictor = _PREDICTOR.get(mode, PredictorKind.LV)

    if mode.stores_minima and n > 0:
        if (mask & 0b111) != 0b111:
            keys_sorted = keys[order]
            corr = []
            shifted = _deinterleave_keys(keys_sorted)
            for ci, fi in enumerate((0, 1, 2)):
                if mask & (1 << fi):
                    corr.append(np.empty(0, _CORR_DTYPE))
                    continue
                ints = shifted[ci] + _minima_vector(segments, ci, n)
                recon = (ints.astype(np.float64)
                         * (2.0 * resolved[fi])).astype(np.float32)
                corr.append(_float32_corrections(work.field(fi), recon,
                                                 resolved[fi]))
            streams.append(Stream(StreamKind.RINDEX, NO_FIELD,
                                  _build_coord_stream(keys_sorted, segments, corr)))
        for fi in (3, 4, 5):
            if mask & (1 << fi):
                continue
            arr = work.field(fi)
            if mode is Mode.CPC2000:
                intf = integerize(arr, resolved[fi])
                recon = intf.reconstruct()
                rec = _float32_corrections(arr, recon, resolved[fi])
                streams.append(Stream(StreamKind.VLC_FIELD, fi,
                                      _build_vel_stream(intf.ints, segments, rec)))
            else:
                payload, _ = _build_sz_stream(arr, predictor, resolved[fi],
                                              settings.interval_count)
                streams.append(Stream(StreamKind.SZ_FIELD, fi, payload))
    elif n > 0:
        for fi in range(6):
            if mask & (1 << fi):
                continue
            payload, _ = _build_sz_stream(work.field(fi), predictor,
                                          resolved[fi], settings.interval_count)
            streams.append(Stream(StreamKind.SZ_FIELD, fi, payload))

    archive = Archive(
        mode=mode,
        n=n,
        interval_count=settings.interval_count,
        segment_size=settings.segment_size,
        ignored_groups=settings.ignored_groups,
        rindex_variant=variant,
        bounds=tuple(b if b is not None else 0.0 for b in resolved),
        constant_mask=mask,
        constants=tuple(constants),
        segments=segments,
        streams=tuple(streams),
    )
    return CompressResult(archive=archive, order=order)


def _minima_vector(segments: Sequence[Segment], col: int, n: int) -> np.ndarray:
    out = np.empty(n, np.int64)
    for s in segments:
        out[s.start:s.end] = s.minima[col]
    return out


def _deinterleave_keys(keys: np.ndarray) -> List[np.ndarray]:
    # per-segment widths do not matter: unused high key bits are zero
    from .rindex import deinterleave_arrays
    return deinterleave_arrays(keys, 3, 21)


def decompress(archive: Archive) -> ParticleSnapshot:
    n = archive.n
    fields: List[Optional[np.ndarray]] = [None] * 6
    for fi in range(6):
        if archive.is_constant(fi):
            fields[fi] = np.full(n, np.float32(archive.constants[fi]), np.float32)
    if n == 0:
        return ParticleSnapshot.empty()

    by_field: Dict[int, Stream] = {}
    rindex_stream: Optional[Stream] = None
    for st in archive.streams:
        if st.kind == StreamKind.RINDEX:
            rindex_stream = st
        else:
            by_field[st.field] = st

    predictor = _PREDICTOR.get(archive.mode, PredictorKind.LV)

    if archive.mode.stores_minima:
        if rindex_stream is None:
            if (archive.constant_mask & 0b111) != 0b111:
                raise DecodeError("missing coordinate stream")
        else:
            keys, corrections = _parse_coord_stream(rindex_stream.payload, n,
                                                    archive.segments)
            shifted = _deinterleave_keys(keys)
            for ci, fi in enumerate((0, 1, 2)):
                if fields[fi] is not None:
                    continue
                ints = shifted[ci] + _minima_vector(archive.segments, ci, n)
                recon = (ints.astype(np.float64)
                         * (2.0 * archive.bounds[fi])).astype(np.float32)
                _apply_corrections(recon, corrections[ci], FIELD_NAMES[fi])
                fields[fi] = recon
        for fi in (3, 4, 5):
            if fields[fi] is not None:
                continue
            st = by_field.get(fi)
            if st is None:
                raise DecodeError(f"missing stream for field {FIELD_NAMES[fi]}")
            if st.kind == StreamKind.VLC_FIELD:
                ints, rec = _parse_vel_stream(st.payload, n, archive.segments,
                                              FIELD_NAMES[fi])
                recon = (ints.astype(np.float64)
                         * (2.0 * archive.bounds[fi])).astype(np.float32)
                _apply_corrections(recon, rec, FIELD_NAMES[fi])
                fields[fi] = recon
            else:
                fields[fi] = _parse_sz_stream(st.payload, n, archive.bounds[fi],
                                              archive.interval_count, predictor,
                                              FIELD_NAMES[fi])
    else:
        for fi in range(6):
            if fields[fi] is not None:
                continue
            st = by_field.get(fi)
            if st is None:
                raise DecodeError(f"missing stream for field {FIELD_NAMES[fi]}")
            fields[fi] = _parse_sz_stream(st.payload, n, archive.bounds[fi],
                                          archive.interval_count, predictor,
                                          FIELD_NAMES[fi])
    return ParticleSnapshot(*fields)


def ratio(archive: Archive, original_bytes: Optional[int] = None) -> Optional[float]:
    """Original size over serialized archive size; None for empty input."""
    ob = 24 * archive.n if original_bytes is None else original_bytes
    if ob == 0:
        return None
    return ob / archive.total_bytes()
