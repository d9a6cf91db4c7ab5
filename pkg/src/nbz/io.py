"""On-disk formats.

Raw snapshots: one headerless little-endian float32 file per field, with
suffixes .xx .yy .zz .vx .vy .vz; lengths inferred from file size.

Archive container (version 1, all integers little-endian):

    magic "NBZ1" | u16 version | u8 mode | u8 rindex_variant (255 = none)
    u64 n | u32 interval_count | u32 segment_size | u8 ignored_groups
    u8 constant_mask | u16 reserved
    f64 bounds[6] | f32 constants[6]
    u32 n_segments | u32 n_streams
    per segment: u8 bits [+ i64 minima[3] for cpc-family modes]
    per stream:  u8 kind | u8 field | u16 reserved | u64 payload_len | u64 crc64
    u64 header_crc   (CRC-64/XZ of everything above)
    payloads, concatenated in directory order

Segment boundaries are not stored; they are recomputed from (n,
segment_size) exactly as compression derives them.  Every byte of the
file is covered by either the header CRC or a payload CRC.
"""

from __future__ import annotations

import struct
from pathlib import Path
from typing import Tuple, Union

import numpy as np

from ._kernels import crc64
from .errors import ArchiveError, ValidationError
from .model import FIELD_NAMES, ParticleSnapshot
from .pipeline import NO_FIELD, Archive, Mode, Stream, StreamKind
from .rindex import RIndexVariant, Segment, segment_bounds

MAGIC = b"NBZ1"
VERSION = 1

_FIXED = struct.Struct("<4sHBBQIIBBH")
_BOUNDS = struct.Struct("<6d")
_CONSTS = struct.Struct("<6f")
_COUNTS = struct.Struct("<II")
_SEG_MIN = struct.Struct("<B3q")
_SEG = struct.Struct("<B")
_DIR = struct.Struct("<BBHQQ")
_CRC = struct.Struct("<Q")

_VARIANT_UIDS = {RIndexVariant.COORDINATE: 0, RIndexVariant.VELOCITY: 1,
                 RIndexVariant.COORD_VELOCITY: 2}
_UID_VARIANTS = {v: k for k, v in _VARIANT_UIDS.items()}


# ----------------------------------------------------------------------
# raw snapshots
# ----------------------------------------------------------------------

def snapshot_paths(prefix: Union[str, Path]) -> Tuple[Path, ...]:
    prefix = Path(prefix)
    return tuple(prefix.with_name(prefix.name + "." + f) for f in FIELD_NAMES)


def write_snapshot(snapshot: ParticleSnapshot, prefix: Union[str, Path]) -> None:
    for path, name in zip(snapshot_paths(prefix), FIELD_NAMES):
        arr = getattr(snapshot, name)
        path.write_bytes(arr.astype("<f4").tobytes())


def read_snapshot(prefix: Union[str, Path]) -> ParticleSnapshot:
    arrays = []
    sizes = set()
    for path, name in zip(snapshot_paths(prefix), FIELD_NAMES):
        if not path.exists():
            raise ValidationError(f"missing field {name}: {path}")
        raw = path.read_bytes()
        if len(raw) % 4:
            raise ValidationError(
                f"field {name}: size {len(raw)} not a multiple of 4")
        arr = np.frombuffer(raw, "<f4").astype(np.float32)
        if arr.size and not np.isfinite(arr).all():
            bad = int(np.flatnonzero(~np.isfinite(arr))[0])
            raise ValidationError(f"field {name}: non-finite value at index {bad}")
        arrays.append(arr)
        sizes.add(arr.size)
    if len(sizes) > 1:
        raise ValidationError(f"field lengths differ: {sorted(sizes)}")
    return ParticleSnapshot(*arrays)


def write_permutation(order: np.ndarray, path: Union[str, Path]) -> None:
    Path(path).write_bytes(np.ascontiguousarray(order, "<u8").tobytes())


def read_permutation(path: Union[str, Path]) -> np.ndarray:
    raw = Path(path).read_bytes()
    if len(raw) % 8:
        raise ValidationError(f"permutation file size {len(raw)} not a multiple of 8")
    return np.frombuffer(raw, "<u8").astype(np.int64)


# ----------------------------------------------------------------------
# archive container
# ----------------------------------------------------------------------

def serialize_archive(archive: Archive) -> bytes:
    head = bytearray()
    variant_uid = (255 if archive.rindex_variant is None
                   else _VARIANT_UIDS[archive.rindex_variant])
    head += _FIXED.pack(MAGIC, VERSION, archive.mode.uid, variant_uid,
                        archive.n, archive.interval_count, archive.segment_size,
                        archive.ignored_groups, archive.constant_mask, 0)
    head += _BOUNDS.pack(*archive.bounds)
    head += _CONSTS.pack(*archive.constants)
    head += _COUNTS.pack(len(archive.segments), len(archive.streams))
    if archive.mode.stores_minima:
        for seg in archive.segments:
            head += _SEG_MIN.pack(seg.bits, *seg.minima[:3])
    else:
        for seg in archive.segments:
            head += _SEG.pack(seg.bits)
    for st in archive.streams:
        head += _DIR.pack(int(st.kind), st.field, 0, len(st.payload),
                          crc64(st.payload))
    head += _CRC.pack(crc64(bytes(head)))
    return bytes(head) + b"".join(st.payload for st in archive.streams)


def deserialize_archive(buf: bytes) -> Archive:
    if len(buf) < _FIXED.size:
        raise ArchiveError("not an NBZ archive: too short")
    (magic, version, mode_uid, variant_uid, n, interval_count, segment_size,
     ignored_groups, constant_mask, _pad) = _FIXED.unpack_from(buf, 0)
    if magic != MAGIC:
        raise ArchiveError("not an NBZ archive: bad magic")
    if version != VERSION:
        raise ArchiveError(f"unsupported archive version {version}")
    offset = _FIXED.size
    try:
        bounds = _BOUNDS.unpack_from(buf, offset)
        offset += _BOUNDS.size
        constants = _CONSTS.unpack_from(buf, offset)
        offset += _CONSTS.size
        n_segments, n_streams = _COUNTS.unpack_from(buf, offset)
        offset += _COUNTS.size
        mode = Mode.from_uid(mode_uid)
        if variant_uid == 255:
            variant = None
        elif variant_uid in _UID_VARIANTS:
            variant = _UID_VARIANTS[variant_uid]
        else:
            raise ArchiveError(f"unknown r-index variant id {variant_uid}")
        seg_edges = segment_bounds(n, max(segment_size, 1))
        expected_segments = 0
        if mode.is_sorted and n > 0:
            expected_segments = sum(
                1 for i in range(seg_edges.shape[0] - 1)
                if seg_edges[i + 1] > seg_edges[i])
        if n_segments != expected_segments:
            raise ArchiveError(
                f"segment table length {n_segments} does not match "
                f"n={n}, segment_size={segment_size}")
        if n_streams > 8:
            raise ArchiveError(f"implausible stream count {n_streams}")
        segments = []
        for i in range(n_segments):
            start = int(seg_edges[i])
            end = int(seg_edges[i + 1])
            if mode.stores_minima:
                bits, m0, m1, m2 = _SEG_MIN.unpack_from(buf, offset)
                offset += _SEG_MIN.size
                segments.append(Segment(start, end, bits, (m0, m1, m2)))
            else:
                (bits,) = _SEG.unpack_from(buf, offset)
                offset += _SEG.size
                segments.append(Segment(start, end, bits, ()))
        directory = []
        for _ in range(n_streams):
            kind, fid, _pad2, length, crc = _DIR.unpack_from(buf, offset)
            offset += _DIR.size
            directory.append((kind, fid, length, crc))
        (header_crc,) = _CRC.unpack_from(buf, offset)
        header_end = offset
        offset += _CRC.size
    except struct.error as exc:
        raise ArchiveError(f"truncated archive header: {exc}") from exc
    if crc64(buf[:header_end]) != header_crc:
        raise ArchiveError("header checksum mismatch")
    streams = []
    for kind, fid, length, crc in directory:
        payload = buf[offset:offset + length]
        if len(payload) != length:
            raise ArchiveError("archive truncated: payload shorter than directory")
        if crc64(payload) != crc:
            name = "coords" if fid == NO_FIELD else FIELD_NAMES[fid] if fid < 6 else str(fid)
            raise ArchiveError(f"checksum mismatch in stream {name}")
        try:
            skind = StreamKind(kind)
        except ValueError as exc:
            raise ArchiveError(f"unknown stream kind {kind}") from exc
        streams.append(Stream(skind, fid, payload))
        offset += length
    if offset != len(buf):
        raise ArchiveError(f"{len(buf) - offset} trailing bytes after payloads")
    archive = Archive(
        mode=mode, n=n, interval_count=interval_count,
        segment_size=segment_size, ignored_groups=ignored_groups,
        rindex_variant=variant, bounds=tuple(bounds),
        constant_mask=constant_mask, constants=tuple(constants),
        segments=tuple(segments), streams=tuple(streams))
    archive._wire = bytes(buf)
    return archive


def write_archive(archive: Archive, path: Union[str, Path]) -> None:
    Path(path).write_bytes(archive.serialized())


def read_archive(path: Union[str, Path]) -> Archive:
    return deserialize_archive(Path(path).read_bytes())
