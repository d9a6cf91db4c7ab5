"""Entropy coding: bitstreams, canonical Huffman, adaptive variable-length
integer codes.

All streams are MSB-first within each byte, final partial byte zero padded.
Huffman tables serialize as canonical code lengths only; decoding an absent
symbol is a hard error.  VLC schemes come from a fixed registry so a single
id byte identifies the scheme on the wire.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from typing import Dict, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from . import _kernels as K
from .errors import DecodeError, EncodeError

MAX_CODE_LEN = 57  # keeps the encoder's 64-bit accumulator from overflowing


class BitStream:
    """Growable MSB-first bit buffer with reads at arbitrary offsets."""

    __slots__ = ("_data", "bit_length")

    def __init__(self, data: bytes = b"", bit_length: Optional[int] = None):
        self._data = bytearray(data)
        self.bit_length = 8 * len(self._data) if bit_length is None else bit_length
        if self.bit_length > 8 * len(self._data):
            raise ValueError("bit_length exceeds buffer size")

    def __len__(self) -> int:
        return self.bit_length

    def to_bytes(self) -> bytes:
        return bytes(self._data[: (self.bit_length + 7) // 8])

    def append_bits(self, value: int, nbits: int) -> None:
        if nbits == 0:
            return
        if value < 0 or value >> nbits:
            raise ValueError(f"value {value} does not fit in {nbits} bits")
        nbytes = (nbits + 7) // 8
        buf = (value << (8 * nbytes - nbits)).to_bytes(nbytes, "big")
        self.append_stream(buf, nbits)

    def append_stream(self, payload, nbits: int) -> None:
        """Append the first nbits of an MSB-first byte buffer."""
        if nbits == 0:
            return
        arr = np.frombuffer(bytes(payload), np.uint8)[: (nbits + 7) // 8].copy()
        # zero any padding bits so the shifted merge stays clean
        pad = 8 * arr.shape[0] - nbits
        if pad:
            arr[-1] &= (0xFF << pad) & 0xFF
        shift = self.bit_length & 7
        new_len = self.bit_length + nbits
        need = (new_len + 7) // 8 - len(self._data)
        if shift == 0:
            self._data += arr.tobytes()
        else:
            hi = (arr >> shift).astype(np.uint8)
            lo = ((arr.astype(np.uint16) << (8 - shift)) & 0xFF).astype(np.uint8)
            self._data[-1] |= int(hi[0])
            tail = np.empty(arr.shape[0], np.uint8)
            tail[:-1] = lo[:-1] | hi[1:]
            tail[-1] = lo[-1]
            self._data += tail[:need].tobytes()
        self.bit_length = new_len

    def read_bits(self, offset: int, nbits: int) -> int:
        if offset < 0 or offset + nbits > self.bit_length:
            raise ValueError("read beyond end of stream")
        if nbits == 0:
            return 0
        first = offset // 8
        last = (offset + nbits + 7) // 8
        word = int.from_bytes(self._data[first:last], "big")
        tail = 8 * (last - first) - (offset - 8 * first) - nbits
        return (word >> tail) & ((1 << nbits) - 1)

    def as_array(self) -> np.ndarray:
        return np.frombuffer(bytes(self._data), np.uint8)


# ----------------------------------------------------------------------
# canonical Huffman
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class HuffmanTable:
    """Canonical Huffman code: symbols with their code lengths.

    Codes are assigned by (length, symbol) order, so the (symbol, length)
    pairs fully determine the code words.
    """

    symbols: np.ndarray   # int32, strictly increasing
    lengths: np.ndarray   # uint8, aligned with symbols
    _derived: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        syms = np.ascontiguousarray(self.symbols, np.int32)
        lens = np.ascontiguousarray(self.lengths, np.uint8)
        object.__setattr__(self, "symbols", syms)
        object.__setattr__(self, "lengths", lens)
        if syms.shape != lens.shape or syms.ndim != 1 or syms.size == 0:
            raise EncodeError("huffman table must map at least one symbol")
        if syms.size > 1 and not (np.diff(syms) > 0).all():
            raise EncodeError("huffman table symbols must be strictly increasing")
        if (lens < 1).any() or (lens > MAX_CODE_LEN).any():
            raise EncodeError(f"huffman code lengths must be in [1, {MAX_CODE_LEN}]")
        max_len = int(lens.max())
        # Kraft inequality, exact in integers
        kraft = int(np.sum(1 << (max_len - lens.astype(np.int64))))
        if kraft > (1 << max_len):
            raise EncodeError("code lengths violate the Kraft inequality")
        self._derived.update(self._build_tables())

    def _build_tables(self) -> dict:
        lens64 = self.lengths.astype(np.int64)
        max_len = int(lens64.max())
        min_len = int(lens64.min())
        order = np.lexsort((self.symbols, lens64))
        sorted_syms = self.symbols[order].astype(np.int32)
        sorted_lens = lens64[order]
        counts_by_len = np.bincount(sorted_lens, minlength=max_len + 2).astype(np.int64)
        first_code = np.zeros(max_len + 2, np.uint64)
        first_idx = np.zeros(max_len + 2, np.int64)
        code = 0
        idx = 0
        for length in range(1, max_len + 1):
            first_code[length] = code
            first_idx[length] = idx
            code = (code + int(counts_by_len[length])) << 1
            idx += int(counts_by_len[length])
        # canonical code word per (sorted) entry
        ranks = np.arange(sorted_syms.shape[0], dtype=np.int64) - first_idx[sorted_lens]
        words_sorted = first_code[sorted_lens] + ranks.astype(np.uint64)
        max_sym = int(self.symbols.max())
        enc_words = np.zeros(max_sym + 1, np.uint64)
        enc_lens = np.zeros(max_sym + 1, np.uint8)
        enc_words[sorted_syms] = words_sorted
        enc_lens[sorted_syms] = sorted_lens.astype(np.uint8)
        enc_packed = (enc_lens.astype(np.uint64) << K.HUFF_LEN_SHIFT) | enc_words
        return dict(max_len=max_len, min_len=min_len, sorted_syms=sorted_syms,
                    counts_by_len=counts_by_len, first_code=first_code,
                    first_idx=first_idx, enc_words=enc_words,
                    enc_lens=enc_lens, enc_packed=enc_packed)

    @property
    def max_symbol(self) -> int:
        return int(self.symbols[-1])

    def code_length(self, symbol: int) -> int:
        i = int(np.searchsorted(self.symbols, symbol))
        if i >= self.symbols.size or self.symbols[i] != symbol:
            raise EncodeError(f"symbol {symbol} not in table")
        return int(self.lengths[i])

    def code_words(self) -> Dict[int, Tuple[int, int]]:
        """symbol -> (code word, length), mainly for tests and debugging."""
        d = self._derived
        out = {}
        for i, s in enumerate(d["sorted_syms"]):
            length = int(self.lengths[np.searchsorted(self.symbols, s)])
            rank = i - int(d["first_idx"][length])
            out[int(s)] = (int(d["first_code"][length]) + rank, length)
        return out

    _WIRE_DTYPE = np.dtype([("sym", "<u4"), ("len", "u1")])

    def serialize(self) -> bytes:
        rec = np.empty(self.symbols.size, self._WIRE_DTYPE)
        rec["sym"] = self.symbols.astype(np.uint32)
        rec["len"] = self.lengths
        return struct.pack("<I", self.symbols.size) + rec.tobytes()

    @classmethod
    def deserialize(cls, buf: bytes, offset: int = 0) -> Tuple["HuffmanTable", int]:
        if offset + 4 > len(buf):
            raise DecodeError("truncated huffman table header")
        (k,) = struct.unpack_from("<I", buf, offset)
        offset += 4
        if k == 0 or offset + 5 * k > len(buf):
            raise DecodeError("truncated or empty huffman table")
        rec = np.frombuffer(buf, cls._WIRE_DTYPE, count=k, offset=offset)
        offset += 5 * k
        try:
            table = cls(rec["sym"].astype(np.int32), rec["len"].copy())
        except EncodeError as exc:
            raise DecodeError(f"invalid huffman table: {exc}") from exc
        return table, offset


def huffman_build(frequencies: Union[Mapping[int, int], np.ndarray]) -> HuffmanTable:
    """Optimal prefix code lengths for the given symbol counts."""
    if isinstance(frequencies, Mapping):
        items = sorted((s, c) for s, c in frequencies.items() if c > 0)
        symbols = np.array([s for s, _ in items], np.int64)
        counts = np.array([c for _, c in items], np.int64)
    else:
        arr = np.asarray(frequencies, np.int64)
        symbols = np.flatnonzero(arr > 0).astype(np.int64)
        counts = arr[symbols]
    if symbols.size == 0:
        raise EncodeError("cannot build a huffman table from empty frequencies")
    if (symbols < 0).any():
        raise EncodeError("huffman symbols must be nonnegative")
    order = np.argsort(counts, kind="stable")
    lengths_sorted = K.huffman_lengths(np.ascontiguousarray(counts[order]))
    if int(lengths_sorted.max()) > MAX_CODE_LEN:
        raise EncodeError("huffman code length exceeds encoder limit")
    lengths = np.empty(symbols.size, np.uint8)
    lengths[order] = lengths_sorted.astype(np.uint8)
    return HuffmanTable(symbols.astype(np.int32), lengths)


def huffman_encode(codes: np.ndarray, table: HuffmanTable) -> BitStream:
    codes = np.ascontiguousarray(codes, np.int32)
    d = table._derived
    enc_lens = d["enc_lens"]
    if codes.size:
        if int(codes.min()) < 0 or int(codes.max()) > table.max_symbol:
            raise EncodeError("symbol outside table range")
        lens = enc_lens[codes]
        if not lens.all():
            bad = int(codes[np.flatnonzero(lens == 0)[0]])
            raise EncodeError(f"symbol {bad} not in table")
        total_bits = int(lens.astype(np.int64).sum())
    else:
        total_bits = 0
    out = np.zeros((total_bits + 7) // 8, np.uint8)
    if codes.size:
        K.huff_encode(codes, d["enc_packed"], out)
    return BitStream(out.tobytes(), total_bits)


def huffman_decode(stream: Union[BitStream, bytes], table: HuffmanTable,
                   n: int, bit_length: Optional[int] = None) -> np.ndarray:
    if isinstance(stream, BitStream):
        data = stream.as_array()
        total_bits = stream.bit_length
    else:
        data = np.frombuffer(bytes(stream), np.uint8)
        total_bits = 8 * data.shape[0] if bit_length is None else bit_length
    out = np.empty(n, np.int32)
    if n == 0:
        return out
    d = table._derived
    status = K.huff_decode(data, total_bits, n, d["min_len"], d["max_len"],
                           d["first_code"], d["counts_by_len"], d["first_idx"],
                           d["sorted_syms"], out)
    if status == 1:
        raise DecodeError("invalid huffman code in stream")
    if status == 2:
        raise DecodeError("truncated huffman stream")
    return out


# ----------------------------------------------------------------------
# adaptive variable-length integer coding
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class VlcScheme:
    """Eight buckets with unary prefixes "0", "10", ..., "111111" + final
    "1111111"; bucket b stores payload_widths[b] bits.  Signed streams
    are zigzag mapped first."""

    scheme_id: int
    signed: bool
    payload_widths: Tuple[int, ...]

    def __post_init__(self):
        w = self.payload_widths
        if len(w) != 8 or any(b <= a for a, b in zip(w, w[1:])) or w[0] < 1 or w[-1] > 64:
            raise ValueError("payload widths must be 8 strictly increasing values <= 64")

    @property
    def prefix_lengths(self) -> Tuple[int, ...]:
        return (1, 2, 3, 4, 5, 6, 7, 7)

    @property
    def max_magnitude(self) -> int:
        w = self.payload_widths[-1]
        return (1 << w) - 1 if w < 64 else (1 << 64) - 1

    def widths_array(self) -> np.ndarray:
        return np.array(self.payload_widths, np.uint8)


VLC_SCHEMES: Dict[int, VlcScheme] = {
    0: VlcScheme(0, True, (2, 4, 6, 8, 12, 16, 24, 33)),
    1: VlcScheme(1, True, (4, 8, 16, 24, 32, 40, 48, 64)),
    2: VlcScheme(2, False, (2, 4, 6, 8, 12, 16, 24, 33)),
    3: VlcScheme(3, False, (4, 8, 16, 24, 32, 40, 48, 64)),
}
SIGNED_CANDIDATES = (VLC_SCHEMES[0], VLC_SCHEMES[1])
UNSIGNED_CANDIDATES = (VLC_SCHEMES[2], VLC_SCHEMES[3])


def zigzag(values: np.ndarray) -> np.ndarray:
    u = values.astype(np.uint64)
    sign = np.uint64(0) - (u >> np.uint64(63))
    return (u << np.uint64(1)) ^ sign


def unzigzag(ms: np.ndarray) -> np.ndarray:
    half = (ms >> np.uint64(1)).astype(np.int64)
    return np.where(ms & np.uint64(1), -half - 1, half)


def vlc_magnitudes(ints: np.ndarray, scheme: VlcScheme) -> np.ndarray:
    ints = np.ascontiguousarray(ints, np.int64)
    if scheme.signed:
        return zigzag(ints)
    if ints.size and int(ints.min()) < 0:
        bad = int(np.flatnonzero(ints < 0)[0])
        raise EncodeError(
            f"negative value at index {bad} in unsigned VLC stream")
    return ints.astype(np.uint64)


def _bucket_limits(scheme: VlcScheme) -> np.ndarray:
    w = np.array(scheme.payload_widths, np.int64)
    limits = np.where(w >= 64, np.uint64(0xFFFFFFFFFFFFFFFF),
                      (np.uint64(1) << w.astype(np.uint64)) - np.uint64(1))
    return limits


def vlc_cost_per_value(ms: np.ndarray, scheme: VlcScheme) -> Optional[np.ndarray]:
    """Encoded bits per value, or None if some value cannot be encoded."""
    limits = _bucket_limits(scheme)
    if ms.size and ms.max() > limits[-1]:
        return None
    buckets = np.searchsorted(limits, ms, side="left")
    plens = np.where(buckets < 7, buckets + 1, 7)
    return plens + np.array(scheme.payload_widths, np.int64)[buckets]


def vlc_encoded_bits(ints: np.ndarray, scheme: VlcScheme) -> Optional[int]:
    cost = vlc_cost_per_value(vlc_magnitudes(ints, scheme), scheme)
    return None if cost is None else int(cost.sum())


def vlc_choose_scheme(ints: np.ndarray,
                      candidates: Sequence[VlcScheme]) -> VlcScheme:
    """Cheapest candidate in total encoded bits; ties go to earlier candidates."""
    if not candidates:
        raise EncodeError("no VLC scheme candidates given")
    best = None
    best_bits = None
    for cand in candidates:
        try:
            bits = vlc_encoded_bits(ints, cand)
        except EncodeError:
            bits = None
        if bits is not None and (best_bits is None or bits < best_bits):
            best = cand
            best_bits = bits
    if best is None:
        raise EncodeError("no candidate scheme can encode all values")
    return best


def vlc_encode(ints: np.ndarray, scheme: VlcScheme) -> BitStream:
    ms = vlc_magnitudes(ints, scheme)
    cost = vlc_cost_per_value(ms, scheme)
    if cost is None:
        bad = int(np.argmax(ms))
        raise EncodeError(
            f"value {int(ints[bad])} at index {bad} outside all VLC buckets")
    total_bits = int(cost.sum())
    out = np.zeros((total_bits + 7) // 8 + 8, np.uint8)
    if ms.size:
        _, bits = K.vlc_encode(ms, scheme.widths_array(), out)
        assert bits == total_bits
    return BitStream(out[: (total_bits + 7) // 8].tobytes(), total_bits)


def vlc_decode(stream: Union[BitStream, bytes], scheme: VlcScheme, n: int,
               bit_length: Optional[int] = None) -> np.ndarray:
    if isinstance(stream, BitStream):
        data = stream.as_array()
        total_bits = stream.bit_length
    else:
        data = np.frombuffer(bytes(stream), np.uint8)
        total_bits = 8 * data.shape[0] if bit_length is None else bit_length
    out = np.empty(n, np.int64)
    if n == 0:
        return out
    status, _ = K.vlc_decode_run(data, total_bits, 0, n, scheme.widths_array(),
                                 scheme.signed, out, 0)
    if status != 0:
        raise DecodeError("truncated VLC stream")
    return out
