"""Hot inner loops, each in two flavors: a numba @njit kernel and a pure
numpy/Python fallback.

The fallback path is selected by setting the environment variable
``NBZ_DISABLE_NUMBA=1`` before import (or automatically when numba is not
importable).  Both flavors produce bit-identical results; ``nbz.bench``
times them side by side.

Bit order everywhere is MSB-first within each byte, final partial byte
zero-padded.
"""

import os

import numpy as np

_ENV_FLAG = os.environ.get("NBZ_DISABLE_NUMBA", "").strip().lower()
NUMBA_ENABLED = _ENV_FLAG not in ("1", "true", "yes", "on")

if NUMBA_ENABLED:
    try:
        from numba import njit as _njit
    except ImportError:  # pragma: no cover - numba is a declared dependency
        NUMBA_ENABLED = False

if not NUMBA_ENABLED:
    def _njit(*args, **kwargs):
        def deco(f):
            return f
        if args and callable(args[0]):
            return args[0]
        return deco

_U0 = np.uint64(0)
_U1 = np.uint64(1)
_U7 = np.uint64(7)
_U8 = np.uint64(8)
_U63 = np.uint64(63)
_U64 = np.uint64(64)
_UFF = np.uint64(0xFF)


# ----------------------------------------------------------------------
# rounding
# ----------------------------------------------------------------------

def _rint(x):
    # round-half-even, identical to np.rint but usable in scalar loops
    f = np.floor(x)
    r = x - f
    if r > 0.5:
        return f + 1.0
    if r < 0.5:
        return f
    if np.fmod(f, 2.0) == 0.0:
        return f
    return f + 1.0


rint_scalar_njit = _njit(cache=True)(_rint) if NUMBA_ENABLED else None
rint_scalar = rint_scalar_njit if NUMBA_ENABLED else _rint


# ----------------------------------------------------------------------
# AR(1) recursion: out[i] = eps[i] + rho * out[i-1]
# ----------------------------------------------------------------------

def _ar1_filter(eps, rho, out):
    acc = 0.0
    for i in range(eps.shape[0]):
        acc = eps[i] + rho * acc
        out[i] = acc


ar1_filter_njit = _njit(cache=True)(_ar1_filter) if NUMBA_ENABLED else None
# the recursion has a loop-carried dependency; the fallback is the same loop
ar1_filter_fallback = _ar1_filter
ar1_filter = ar1_filter_njit if NUMBA_ENABLED else ar1_filter_fallback


# ----------------------------------------------------------------------
# prediction + linear-scaling quantization with reconstruction feedback
#
# codes: 0 = escape, otherwise q + half + 1 in [1, 2*half]
# recon[i] is the float32 value the decompressor will rebuild; the next
# prediction always reads recon, never the original, so both sides agree
# bit-exactly.  A candidate code is rejected (escaped) whenever the final
# float32 reconstruction would land farther than `bound` from the input.
# ----------------------------------------------------------------------

def _sz_quantize(x, bound, half, use_lcf, codes, recon, esc):
    twob = 2.0 * bound
    inv = 1.0 / twob  # multiply on the feedback critical path, not divide;
    # the float32 bound re-check below keeps the guarantee exact either way
    hi_f = float(half - 1)
    lo_f = -float(half)
    n_esc = 0
    h1 = 0.0
    h2 = 0.0
    for i in range(x.shape[0]):
        if i == 0:
            pred = 0.0
        elif use_lcf and i >= 2:
            pred = 2.0 * h1 - h2
        else:
            pred = h1
        xv = np.float64(x[i])
        qf = _rint((xv - pred) * inv)
        ok = False
        if lo_f <= qf <= hi_f:
            r32 = np.float32(pred + qf * twob)
            if abs(xv - np.float64(r32)) <= bound:
                codes[i] = np.int32(qf) + np.int32(half) + np.int32(1)
                recon[i] = r32
                ok = True
        if not ok:
            codes[i] = 0
            esc[n_esc] = x[i]
            n_esc += 1
            recon[i] = x[i]
        h2 = h1
        h1 = np.float64(recon[i])
    return n_esc


def _sz_dequantize(codes, esc, bound, half, use_lcf, recon):
    twob = 2.0 * bound
    n_esc = 0
    h1 = 0.0
    h2 = 0.0
    for i in range(codes.shape[0]):
        if i == 0:
            pred = 0.0
        elif use_lcf and i >= 2:
            pred = 2.0 * h1 - h2
        else:
            pred = h1
        c = codes[i]
        if c == 0:
            recon[i] = esc[n_esc]
            n_esc += 1
        else:
            q = np.float64(c - np.int32(half) - np.int32(1))
            recon[i] = np.float32(pred + q * twob)
        h2 = h1
        h1 = np.float64(recon[i])
    return n_esc


if NUMBA_ENABLED:
    # replace the module-level _rint reference inside the jitted closures
    @_njit(cache=True)
    def _sz_quantize_jit(x, bound, half, use_lcf, codes, recon, esc):
        twob = 2.0 * bound
        inv = 1.0 / twob
        hi_f = float(half - 1)
        lo_f = -float(half)
        n_esc = 0
        h1 = 0.0
        h2 = 0.0
        for i in range(x.shape[0]):
            if i == 0:
                pred = 0.0
            elif use_lcf and i >= 2:
                pred = 2.0 * h1 - h2
            else:
                pred = h1
            xv = np.float64(x[i])
            qf = np.rint((xv - pred) * inv)
            ok = False
            if lo_f <= qf <= hi_f:
                r32 = np.float32(pred + qf * twob)
                if abs(xv - np.float64(r32)) <= bound:
                    codes[i] = np.int32(qf) + np.int32(half) + np.int32(1)
                    recon[i] = r32
                    ok = True
            if not ok:
                codes[i] = 0
                esc[n_esc] = x[i]
                n_esc += 1
                recon[i] = x[i]
            h2 = h1
            h1 = np.float64(recon[i])
        return n_esc

    sz_quantize_njit = _sz_quantize_jit
    sz_dequantize_njit = _njit(cache=True)(_sz_dequantize)
else:
    sz_quantize_njit = None
    sz_dequantize_njit = None

sz_quantize_fallback = _sz_quantize
sz_dequantize_fallback = _sz_dequantize
sz_quantize = sz_quantize_njit if NUMBA_ENABLED else sz_quantize_fallback
sz_dequantize = sz_dequantize_njit if NUMBA_ENABLED else sz_dequantize_fallback


# ----------------------------------------------------------------------
# Huffman code lengths via the two-queue construction.
# `counts` must be sorted ascending, all positive.  Returns lengths in
# the same (sorted) order.  Single symbol gets length 1.
# ----------------------------------------------------------------------

def _huffman_lengths(counts):
    k = counts.shape[0]
    lengths = np.zeros(k, np.int64)
    if k == 1:
        lengths[0] = 1
        return lengths
    nn = 2 * k - 1
    weight = np.zeros(nn, np.int64)
    parent = np.full(nn, -1, np.int64)
    for i in range(k):
        weight[i] = counts[i]
    leaf = 0
    node = k  # front of the internal-node queue [node, new)
    for new in range(k, nn):
        if leaf < k and (node >= new or weight[leaf] <= weight[node]):
            a = leaf
            leaf += 1
        else:
            a = node
            node += 1
        if leaf < k and (node >= new or weight[leaf] <= weight[node]):
            b = leaf
            leaf += 1
        else:
            b = node
            node += 1
        weight[new] = weight[a] + weight[b]
        parent[a] = new
        parent[b] = new
    depth = np.zeros(nn, np.int64)
    for i in range(nn - 2, -1, -1):
        depth[i] = depth[parent[i]] + 1
    for i in range(k):
        lengths[i] = depth[i]
    return lengths


huffman_lengths_njit = _njit(cache=True)(_huffman_lengths) if NUMBA_ENABLED else None
huffman_lengths_fallback = _huffman_lengths
huffman_lengths = huffman_lengths_njit if NUMBA_ENABLED else huffman_lengths_fallback


# ----------------------------------------------------------------------
# bit packing helpers (loop flavor).  Appends are MSB-first; `nbits` per
# call is capped at 32 so the 64-bit accumulator can never overflow.
# ----------------------------------------------------------------------

def _putbits(out, acc, nacc, pos, val, nbits):
    acc = (acc << np.uint64(nbits)) | (val & ((_U1 << np.uint64(nbits)) - _U1))
    nacc += nbits
    while nacc >= 8:
        nacc -= 8
        out[pos] = np.uint8((acc >> np.uint64(nacc)) & _UFF)
        pos += 1
    return acc, nacc, pos


def _flushbits(out, acc, nacc, pos):
    if nacc > 0:
        out[pos] = np.uint8((acc << np.uint64(8 - nacc)) & _UFF)
        pos += 1
    return pos


def _getbits(data, bitpos, nbits):
    val = _U0
    remaining = nbits
    while remaining > 0:
        byte = np.uint64(data[bitpos >> 3])
        bitoff = bitpos & 7
        avail = 8 - bitoff
        take = avail if avail < remaining else remaining
        chunk = (byte >> np.uint64(avail - take)) & ((_U1 << np.uint64(take)) - _U1)
        val = (val << np.uint64(take)) | chunk
        bitpos += take
        remaining -= take
    return val, bitpos


if NUMBA_ENABLED:
    _putbits_jit = _njit(cache=True, inline="always")(_putbits)
    _flushbits_jit = _njit(cache=True, inline="always")(_flushbits)
    _getbits_jit = _njit(cache=True, inline="always")(_getbits)


# ----------------------------------------------------------------------
# Huffman encode/decode over a symbol array.
# The encode LUT packs (length << 57) | code_word into one uint64 per
# symbol; lengths above 57 are rejected at table-build time so the
# accumulator stays below 64 bits.
# ----------------------------------------------------------------------

HUFF_LEN_SHIFT = np.uint64(57)
_HUFF_WORD_MASK = np.uint64((1 << 57) - 1)
_U32MASK = np.uint64(0xFFFFFFFF)
_U24 = np.uint64(24)
_U16 = np.uint64(16)
_U32 = np.uint64(32)


def _make_huff_encode():
    def _huff_encode(symbols, packed, out):
        acc = _U0
        nacc = 0
        pos = 0
        for i in range(symbols.shape[0]):
            e = packed[symbols[i]]
            nb = np.int64(e >> HUFF_LEN_SHIFT)
            w = e & _HUFF_WORD_MASK
            if nb > 32:
                hibits = nb - 32
                acc = (acc << np.uint64(hibits)) | (w >> _U32)
                nacc += hibits
                if nacc >= 32:
                    nacc -= 32
                    chunk = (acc >> np.uint64(nacc)) & _U32MASK
                    out[pos] = chunk >> _U24
                    out[pos + 1] = (chunk >> _U16) & _UFF
                    out[pos + 2] = (chunk >> _U8) & _UFF
                    out[pos + 3] = chunk & _UFF
                    pos += 4
                w &= _U32MASK
                nb = 32
            acc = (acc << np.uint64(nb)) | w
            nacc += nb
            if nacc >= 32:
                nacc -= 32
                chunk = (acc >> np.uint64(nacc)) & _U32MASK
                out[pos] = chunk >> _U24
                out[pos + 1] = (chunk >> _U16) & _UFF
                out[pos + 2] = (chunk >> _U8) & _UFF
                out[pos + 3] = chunk & _UFF
                pos += 4
        while nacc >= 8:
            nacc -= 8
            out[pos] = (acc >> np.uint64(nacc)) & _UFF
            pos += 1
        if nacc > 0:
            out[pos] = (acc << np.uint64(8 - nacc)) & _UFF
            pos += 1
        return pos
    return _huff_encode


def _make_huff_decode():
    def _huff_decode(data, total_bits, n, min_len, max_len,
                     first_code, counts_by_len, first_idx, sorted_syms, out):
        # returns 0 ok, 1 invalid code, 2 truncated
        bitpos = 0
        for i in range(n):
            code = _U0
            length = 0
            while True:
                if bitpos >= total_bits:
                    return 2
                byte = np.uint64(data[bitpos >> 3])
                bit = (byte >> np.uint64(7 - (bitpos & 7))) & _U1
                bitpos += 1
                code = (code << _U1) | bit
                length += 1
                if length > max_len:
                    return 1
                if length >= min_len and counts_by_len[length] > 0:
                    fc = first_code[length]
                    if code >= fc:
                        off = np.int64(code - fc)
                        if off < counts_by_len[length]:
                            out[i] = sorted_syms[first_idx[length] + off]
                            break
        return 0
    return _huff_decode


_huff_encode_loop = _make_huff_encode()
_huff_decode_loop = _make_huff_decode()

if NUMBA_ENABLED:
    huff_encode_njit = _njit(cache=True)(_make_huff_encode())
    huff_decode_njit = _njit(cache=True)(_make_huff_decode())
else:
    huff_encode_njit = None
    huff_decode_njit = None


def _bits_to_bytes_vectorized(words, lens):
    """Expand per-element (word, length) pairs into a packed MSB-first
    byte array without a Python loop.  words are uint64, MSB-aligned to
    their own length."""
    lens = lens.astype(np.int64)
    ends = np.cumsum(lens)
    total = int(ends[-1]) if lens.size else 0
    if total == 0:
        return np.zeros(0, np.uint8), 0
    starts = ends - lens
    idx = np.arange(total, dtype=np.int64)
    elem = np.searchsorted(ends, idx, side="right")
    bitpos = idx - starts[elem]
    shift = (lens[elem] - 1 - bitpos).astype(np.uint64)
    bits = ((words[elem] >> shift) & np.uint64(1)).astype(np.uint8)
    return np.packbits(bits), total


def huff_encode_fallback(symbols, packed, out):
    if symbols.size == 0:
        return 0
    entries = packed[symbols]
    words = entries & _HUFF_WORD_MASK
    lens = entries >> HUFF_LEN_SHIFT
    buf, total = _bits_to_bytes_vectorized(words, lens)
    out[: buf.shape[0]] = buf
    return buf.shape[0]


def huff_decode_fallback(data, total_bits, n, min_len, max_len,
                         first_code, counts_by_len, first_idx, sorted_syms, out):
    return _huff_decode_loop(data, total_bits, n, min_len, max_len,
                             first_code, counts_by_len, first_idx,
                             sorted_syms, out)


huff_encode = huff_encode_njit if NUMBA_ENABLED else huff_encode_fallback
huff_decode = huff_decode_njit if NUMBA_ENABLED else huff_decode_fallback


# ----------------------------------------------------------------------
# adaptive variable-length integer coding.
#
# A scheme is 8 buckets with unary prefixes "0", "10", ..., "1111110"
# and the final bucket marked by seven 1s (no terminator).  Bucket b
# stores a payload of widths[b] bits.  Values are mapped to nonnegative
# magnitudes beforehand (zigzag for signed streams).
# ----------------------------------------------------------------------

def _vlc_bucket_of(m, widths):
    for b in range(8):
        w = widths[b]
        if w >= 64 or m < (_U1 << np.uint64(w)):
            return b
    return -1


def _make_vlc_encode(putbits, flushbits):
    def _vlc_encode(ms, widths, out):
        # returns (bytes_written, total_bits); assumes every value fits
        acc = _U0
        nacc = 0
        pos = 0
        total_bits = 0
        for i in range(ms.shape[0]):
            m = ms[i]
            b = 0
            for bb in range(8):
                w = widths[bb]
                if w >= 64 or m < (_U1 << np.uint64(w)):
                    b = bb
                    break
            if b < 7:
                plen = b + 1
                pval = np.uint64((1 << plen) - 2)
            else:
                plen = 7
                pval = np.uint64(127)
            acc, nacc, pos = putbits(out, acc, nacc, pos, pval, plen)
            w = np.int64(widths[b])
            if w > 32:
                acc, nacc, pos = putbits(out, acc, nacc, pos, m >> np.uint64(32), w - 32)
                acc, nacc, pos = putbits(out, acc, nacc, pos, m, 32)
            else:
                acc, nacc, pos = putbits(out, acc, nacc, pos, m, w)
            total_bits += plen + w
        pos = flushbits(out, acc, nacc, pos)
        return pos, total_bits
    return _vlc_encode


def _make_vlc_decode_run(getbits):
    def _vlc_decode_run(data, total_bits, bitpos, count, widths, signed, out, offset):
        # returns (status, bitpos); status 0 ok, 2 truncated
        for i in range(count):
            ones = 0
            while ones < 7:
                if bitpos >= total_bits:
                    return 2, bitpos
                byte = np.uint64(data[bitpos >> 3])
                bit = (byte >> np.uint64(7 - (bitpos & 7))) & _U1
                bitpos += 1
                if bit == _U0:
                    break
                ones += 1
            b = ones
            w = np.int64(widths[b])
            if bitpos + w > total_bits:
                return 2, bitpos
            if w > 32:
                hi, bitpos = getbits(data, bitpos, w - 32)
                lo, bitpos = getbits(data, bitpos, 32)
                m = (hi << np.uint64(32)) | lo
            else:
                m, bitpos = getbits(data, bitpos, w)
            if signed:
                # inverse zigzag
                v = np.int64(m >> _U1)
                if m & _U1:
                    out[offset + i] = -v - 1
                else:
                    out[offset + i] = v
            else:
                out[offset + i] = np.int64(m)
        return 0, bitpos
    return _vlc_decode_run


_vlc_encode_loop = _make_vlc_encode(_putbits, _flushbits)
_vlc_decode_run_loop = _make_vlc_decode_run(_getbits)

if NUMBA_ENABLED:
    vlc_encode_njit = _njit(cache=True)(_make_vlc_encode(_putbits_jit, _flushbits_jit))
    _vlc_decode_run_jit = _njit(cache=True)(_make_vlc_decode_run(_getbits_jit))
else:
    vlc_encode_njit = None
    _vlc_decode_run_jit = None


def vlc_encode_fallback(ms, widths, out):
    if ms.size == 0:
        return 0, 0
    w64 = widths.astype(np.int64)
    limits = np.where(w64 >= 64, np.uint64(0xFFFFFFFFFFFFFFFF),
                      (np.uint64(1) << w64.astype(np.uint64)) - np.uint64(1))
    buckets = np.searchsorted(limits, ms, side="left").astype(np.int64)
    plens = np.where(buckets < 7, buckets + 1, 7).astype(np.int64)
    pvals = np.where(buckets < 7,
                     (np.uint64(1) << plens.astype(np.uint64)) - np.uint64(2),
                     np.uint64(127))
    pwidths = w64[buckets]
    # interleave prefix and payload as 2n (word, len) pairs
    words = np.empty(2 * ms.size, np.uint64)
    lens = np.empty(2 * ms.size, np.int64)
    words[0::2] = pvals
    lens[0::2] = plens
    words[1::2] = ms
    lens[1::2] = pwidths
    packed, total = _bits_to_bytes_vectorized(words, lens)
    out[: packed.shape[0]] = packed
    return packed.shape[0], total


def vlc_decode_run_fallback(data, total_bits, bitpos, count, widths, signed, out, offset):
    return _vlc_decode_run_loop(data, total_bits, bitpos, count, widths,
                                signed, out, offset)


vlc_encode = vlc_encode_njit if NUMBA_ENABLED else vlc_encode_fallback
vlc_decode_run = _vlc_decode_run_jit if NUMBA_ENABLED else vlc_decode_run_fallback


# ----------------------------------------------------------------------
# segmented decoders for the sorted-mode payloads.  Encoding is done
# segment by segment at Python level (few segments); decoding walks one
# contiguous bit region, so it gets fused kernels.
# ----------------------------------------------------------------------

def _make_cpc_decode_keys(getbits, vlc_run):
    def _cpc_decode_keys(data, total_bits, seg_starts, key_bits, scheme_ids,
                         widths_tab, keys, deltas_scratch):
        # per segment: raw first key (key_bits bits) then unsigned VLC deltas
        bitpos = 0
        nseg = seg_starts.shape[0] - 1
        for seg in range(nseg):
            lo = seg_starts[seg]
            hi = seg_starts[seg + 1]
            if lo == hi:
                continue
            kb = np.int64(key_bits[seg])
            if bitpos + kb > total_bits:
                return 2
            if kb > 32:
                hi_part, bitpos = getbits(data, bitpos, kb - 32)
                lo_part, bitpos = getbits(data, bitpos, 32)
                first = (hi_part << np.uint64(32)) | lo_part
            elif kb > 0:
                first, bitpos = getbits(data, bitpos, kb)
            else:
                first = _U0
            keys[lo] = first
            m = hi - lo - 1
            if m > 0:
                widths = widths_tab[scheme_ids[seg]]
                status, bitpos = vlc_run(data, total_bits, bitpos, m, widths,
                                         False, deltas_scratch, 0)
                if status != 0:
                    return status
                prev = first
                for i in range(m):
                    prev = prev + np.uint64(deltas_scratch[i])
                    keys[lo + 1 + i] = prev
        return 0
    return _cpc_decode_keys


def _make_vlc_decode_segmented(vlc_run):
    def _vlc_decode_segmented(data, total_bits, seg_starts, scheme_ids,
                              widths_tab, signed, out):
        bitpos = 0
        nseg = seg_starts.shape[0] - 1
        for seg in range(nseg):
            lo = seg_starts[seg]
            hi = seg_starts[seg + 1]
            if lo == hi:
                continue
            widths = widths_tab[scheme_ids[seg]]
            status, bitpos = vlc_run(data, total_bits, bitpos, hi - lo, widths,
                                     signed, out, lo)
            if status != 0:
                return status
        return 0
    return _vlc_decode_segmented


_cpc_decode_keys_loop = _make_cpc_decode_keys(_getbits, _vlc_decode_run_loop)
_vlc_decode_segmented_loop = _make_vlc_decode_segmented(_vlc_decode_run_loop)

if NUMBA_ENABLED:
    cpc_decode_keys_njit = _njit(cache=True)(
        _make_cpc_decode_keys(_getbits_jit, _vlc_decode_run_jit))
    vlc_decode_segmented_njit = _njit(cache=True)(
        _make_vlc_decode_segmented(_vlc_decode_run_jit))
else:
    cpc_decode_keys_njit = None
    vlc_decode_segmented_njit = None

cpc_decode_keys_fallback = _cpc_decode_keys_loop
vlc_decode_segmented_fallback = _vlc_decode_segmented_loop
cpc_decode_keys = cpc_decode_keys_njit if NUMBA_ENABLED else _cpc_decode_keys_loop
vlc_decode_segmented = (vlc_decode_segmented_njit if NUMBA_ENABLED
                        else _vlc_decode_segmented_loop)


# ----------------------------------------------------------------------
# segmented encoders (mirror images of the decoders above)
# ----------------------------------------------------------------------

def _make_vlc_put(putbits):
    def _vlc_put(out, acc, nacc, pos, m, widths):
        b = 0
        for bb in range(8):
            w = widths[bb]
            if w >= 64 or m < (_U1 << np.uint64(w)):
                b = bb
                break
        if b < 7:
            plen = b + 1
            pval = np.uint64((1 << plen) - 2)
        else:
            plen = 7
            pval = np.uint64(127)
        acc, nacc, pos = putbits(out, acc, nacc, pos, pval, plen)
        w = np.int64(widths[b])
        if w > 32:
            acc, nacc, pos = putbits(out, acc, nacc, pos, m >> np.uint64(32), w - 32)
            acc, nacc, pos = putbits(out, acc, nacc, pos, m, 32)
        else:
            acc, nacc, pos = putbits(out, acc, nacc, pos, m, w)
        return acc, nacc, pos
    return _vlc_put


def _make_cpc_encode_keys(putbits, flushbits, vlc_put):
    def _cpc_encode_keys(keys, seg_starts, key_bits, scheme_ids, widths_tab, out):
        acc = _U0
        nacc = 0
        pos = 0
        nseg = seg_starts.shape[0] - 1
        for seg in range(nseg):
            lo = seg_starts[seg]
            hi = seg_starts[seg + 1]
            if lo == hi:
                continue
            kb = np.int64(key_bits[seg])
            first = keys[lo]
            if kb > 32:
                acc, nacc, pos = putbits(out, acc, nacc, pos, first >> np.uint64(32), kb - 32)
                acc, nacc, pos = putbits(out, acc, nacc, pos, first, 32)
            elif kb > 0:
                acc, nacc, pos = putbits(out, acc, nacc, pos, first, kb)
            widths = widths_tab[scheme_ids[seg]]
            prev = first
            for i in range(lo + 1, hi):
                delta = keys[i] - prev
                prev = keys[i]
                acc, nacc, pos = vlc_put(out, acc, nacc, pos, delta, widths)
        pos = flushbits(out, acc, nacc, pos)
        return pos
    return _cpc_encode_keys


def _make_vlc_encode_segmented(putbits, flushbits, vlc_put):
    def _vlc_encode_segmented(ms, seg_starts, scheme_ids, widths_tab, out):
        acc = _U0
        nacc = 0
        pos = 0
        nseg = seg_starts.shape[0] - 1
        for seg in range(nseg):
            lo = seg_starts[seg]
            hi = seg_starts[seg + 1]
            widths = widths_tab[scheme_ids[seg]]
            for i in range(lo, hi):
                acc, nacc, pos = vlc_put(out, acc, nacc, pos, ms[i], widths)
        pos = flushbits(out, acc, nacc, pos)
        return pos
    return _vlc_encode_segmented


_vlc_put_loop = _make_vlc_put(_putbits)
_cpc_encode_keys_loop = _make_cpc_encode_keys(_putbits, _flushbits, _vlc_put_loop)
_vlc_encode_segmented_loop = _make_vlc_encode_segmented(_putbits, _flushbits,
                                                        _vlc_put_loop)

if NUMBA_ENABLED:
    _vlc_put_jit = _njit(cache=True, inline="always")(_make_vlc_put(_putbits_jit))
    cpc_encode_keys_njit = _njit(cache=True)(
        _make_cpc_encode_keys(_putbits_jit, _flushbits_jit, _vlc_put_jit))
    vlc_encode_segmented_njit = _njit(cache=True)(
        _make_vlc_encode_segmented(_putbits_jit, _flushbits_jit, _vlc_put_jit))
else:
    cpc_encode_keys_njit = None
    vlc_encode_segmented_njit = None

cpc_encode_keys_fallback = _cpc_encode_keys_loop
vlc_encode_segmented_fallback = _vlc_encode_segmented_loop
cpc_encode_keys = cpc_encode_keys_njit if NUMBA_ENABLED else _cpc_encode_keys_loop
vlc_encode_segmented = (vlc_encode_segmented_njit if NUMBA_ENABLED
                        else _vlc_encode_segmented_loop)


# ----------------------------------------------------------------------
# bit interleaving (Morton-style).  Bit j of field t lands at output bit
# j*f + (f-1-t): field order xx,yy,zz[,vx,vy,vz] from most significant
# within each group.
# ----------------------------------------------------------------------

_SPREAD_MASKS = (
    np.uint64(0x1F00000000FFFF),
    np.uint64(0x1F0000FF0000FF),
    np.uint64(0x100F00F00F00F00F),
    np.uint64(0x10C30C30C30C30C3),
    np.uint64(0x1249249249249249),
)
_SPREAD_SHIFTS = (np.uint64(32), np.uint64(16), np.uint64(8),
                  np.uint64(4), np.uint64(2))
_M21 = np.uint64(0x1FFFFF)


def _spread3(v):
    # no in-place ops: the fallback passes whole arrays through here
    v = v & _M21
    v = (v | (v << _SPREAD_SHIFTS[0])) & _SPREAD_MASKS[0]
    v = (v | (v << _SPREAD_SHIFTS[1])) & _SPREAD_MASKS[1]
    v = (v | (v << _SPREAD_SHIFTS[2])) & _SPREAD_MASKS[2]
    v = (v | (v << _SPREAD_SHIFTS[3])) & _SPREAD_MASKS[3]
    v = (v | (v << _SPREAD_SHIFTS[4])) & _SPREAD_MASKS[4]
    return v


def _compact3(v):
    v = v & _SPREAD_MASKS[4]
    v = (v ^ (v >> _SPREAD_SHIFTS[4])) & _SPREAD_MASKS[3]
    v = (v ^ (v >> _SPREAD_SHIFTS[3])) & _SPREAD_MASKS[2]
    v = (v ^ (v >> _SPREAD_SHIFTS[2])) & _SPREAD_MASKS[1]
    v = (v ^ (v >> _SPREAD_SHIFTS[1])) & _SPREAD_MASKS[0]
    v = (v ^ (v >> _SPREAD_SHIFTS[0])) & _M21
    return v


def _make_interleave3(spread):
    def _interleave3(x, y, z, keys):
        two = np.uint64(2)
        one = np.uint64(1)
        for i in range(x.shape[0]):
            keys[i] = ((spread(np.uint64(x[i])) << two)
                       | (spread(np.uint64(y[i])) << one)
                       | spread(np.uint64(z[i])))
    return _interleave3


def _make_deinterleave3(compact):
    def _deinterleave3(keys, x, y, z):
        two = np.uint64(2)
        one = np.uint64(1)
        for i in range(keys.shape[0]):
            k = keys[i]
            x[i] = np.int64(compact(k >> two))
            y[i] = np.int64(compact(k >> one))
            z[i] = np.int64(compact(k))
    return _deinterleave3


def _interleave_any(ints, nbits, keys):
    f = ints.shape[0]
    for i in range(ints.shape[1]):
        key = _U0
        for t in range(f):
            v = np.uint64(ints[t, i])
            for j in range(nbits):
                bit = (v >> np.uint64(j)) & _U1
                key |= bit << np.uint64(j * f + (f - 1 - t))
        keys[i] = key


def _deinterleave_any(keys, f, nbits, out):
    for i in range(keys.shape[0]):
        k = keys[i]
        for t in range(f):
            v = _U0
            for j in range(nbits):
                bit = (k >> np.uint64(j * f + (f - 1 - t))) & _U1
                v |= bit << np.uint64(j)
            out[t, i] = np.int64(v)


if NUMBA_ENABLED:
    _spread3_jit = _njit(cache=True, inline="always")(_spread3)
    _compact3_jit = _njit(cache=True, inline="always")(_compact3)
    interleave3_njit = _njit(cache=True)(_make_interleave3(_spread3_jit))
    deinterleave3_njit = _njit(cache=True)(_make_deinterleave3(_compact3_jit))
    interleave_any_njit = _njit(cache=True)(_interleave_any)
    deinterleave_any_njit = _njit(cache=True)(_deinterleave_any)
else:
    interleave3_njit = None
    deinterleave3_njit = None
    interleave_any_njit = None
    deinterleave_any_njit = None


def interleave3_fallback(x, y, z, keys):
    keys[:] = ((_spread3(x.astype(np.uint64)) << np.uint64(2))
               | (_spread3(y.astype(np.uint64)) << np.uint64(1))
               | _spread3(z.astype(np.uint64)))


def deinterleave3_fallback(keys, x, y, z):
    x[:] = _compact3(keys >> np.uint64(2)).astype(np.int64)
    y[:] = _compact3(keys >> np.uint64(1)).astype(np.int64)
    z[:] = _compact3(keys).astype(np.int64)


def interleave_any_fallback(ints, nbits, keys):
    f = ints.shape[0]
    keys[:] = 0
    u = ints.astype(np.uint64)
    for t in range(f):
        for j in range(nbits):
            bit = (u[t] >> np.uint64(j)) & np.uint64(1)
            keys |= bit << np.uint64(j * f + (f - 1 - t))


def deinterleave_any_fallback(keys, f, nbits, out):
    out[:] = 0
    tmp = np.zeros(keys.shape[0], np.uint64)
    for t in range(f):
        tmp[:] = 0
        for j in range(nbits):
            bit = (keys >> np.uint64(j * f + (f - 1 - t))) & np.uint64(1)
            tmp |= bit << np.uint64(j)
        out[t] = tmp.astype(np.int64)


interleave3 = interleave3_njit if NUMBA_ENABLED else interleave3_fallback
deinterleave3 = deinterleave3_njit if NUMBA_ENABLED else deinterleave3_fallback
interleave_any = interleave_any_njit if NUMBA_ENABLED else interleave_any_fallback
deinterleave_any = (deinterleave_any_njit if NUMBA_ENABLED
                    else deinterleave_any_fallback)


# ----------------------------------------------------------------------
# segmented partial-radix argsort.
#
# Within each segment, elements are stably ordered by keys >> shift
# using LSD counting sort, digit_bits per round (one bit per interleaved
# field, so 3 or 6).  sort_bits[seg] is the number of significant bits
# left after the shift; 0 means the segment keeps its original order.
# ----------------------------------------------------------------------

def _prx_order(keys, seg_starts, shifts, sort_bits, digit_bits, out):
    nseg = seg_starts.shape[0] - 1
    maxm = 0
    for seg in range(nseg):
        m = seg_starts[seg + 1] - seg_starts[seg]
        if m > maxm:
            maxm = m
    nbuckets = 1 << digit_bits
    dmask = np.uint64(nbuckets - 1)
    idx = np.empty(maxm, np.int64)
    alt = np.empty(maxm, np.int64)
    counts = np.empty(nbuckets + 1, np.int64)
    for seg in range(nseg):
        lo = seg_starts[seg]
        hi = seg_starts[seg + 1]
        m = hi - lo
        if m <= 0:
            continue
        for j in range(m):
            idx[j] = lo + j
        nb = sort_bits[seg]
        sh = shifts[seg]
        rounds = (nb + digit_bits - 1) // digit_bits
        for r in range(rounds):
            dsh = np.uint64(sh + digit_bits * r)
            for c in range(nbuckets + 1):
                counts[c] = 0
            for j in range(m):
                d = np.int64((keys[idx[j]] >> dsh) & dmask)
                counts[d + 1] += 1
            for c in range(1, nbuckets + 1):
                counts[c] += counts[c - 1]
            for j in range(m):
                d = np.int64((keys[idx[j]] >> dsh) & dmask)
                alt[counts[d]] = idx[j]
                counts[d] += 1
            tmp = idx
            idx = alt
            alt = tmp
        for j in range(m):
            out[lo + j] = idx[j]


prx_order_njit = _njit(cache=True)(_prx_order) if NUMBA_ENABLED else None


def prx_order_fallback(keys, seg_starts, shifts, sort_bits, digit_bits, out):
    nseg = seg_starts.shape[0] - 1
    for seg in range(nseg):
        lo = int(seg_starts[seg])
        hi = int(seg_starts[seg + 1])
        if hi <= lo:
            continue
        if sort_bits[seg] <= 0:
            out[lo:hi] = np.arange(lo, hi, dtype=np.int64)
        else:
            sub = keys[lo:hi] >> np.uint64(shifts[seg])
            out[lo:hi] = lo + np.argsort(sub, kind="stable").astype(np.int64)


prx_order = prx_order_njit if NUMBA_ENABLED else prx_order_fallback


# ----------------------------------------------------------------------
# CRC-64/XZ (ECMA-182 polynomial, reflected, init/xorout all ones)
# ----------------------------------------------------------------------

def _crc64_table():
    poly = np.uint64(0xC96C5795D7870F42)
    table = np.arange(256, dtype=np.uint64)
    for _ in range(8):
        odd = (table & np.uint64(1)).astype(bool)
        table = table >> np.uint64(1)
        table[odd] ^= poly
    return table


CRC64_TABLE = _crc64_table()
_CRC64_TABLE_INTS = [int(v) for v in CRC64_TABLE]
_ALL1 = np.uint64(0xFFFFFFFFFFFFFFFF)


def _crc64_loop(data, table):
    crc = _ALL1
    for i in range(data.shape[0]):
        crc = table[np.int64((crc ^ np.uint64(data[i])) & _UFF)] ^ (crc >> _U8)
    return crc ^ _ALL1


crc64_njit = _njit(cache=True)(_crc64_loop) if NUMBA_ENABLED else None


def crc64_fallback(data, table):
    t = _CRC64_TABLE_INTS
    crc = 0xFFFFFFFFFFFFFFFF
    for b in memoryview(np.ascontiguousarray(data)).cast("B"):
        crc = t[(crc ^ b) & 0xFF] ^ (crc >> 8)
    return np.uint64(crc ^ 0xFFFFFFFFFFFFFFFF)


_crc64_impl = crc64_njit if NUMBA_ENABLED else crc64_fallback


def crc64(data) -> int:
    """CRC-64/XZ of a bytes-like or uint8 array."""
    buf = np.frombuffer(bytes(data), np.uint8) if not isinstance(data, np.ndarray) \
        else np.ascontiguousarray(data, np.uint8)
    return int(_crc64_impl(buf, CRC64_TABLE))


def warmup():
    """Trigger JIT compilation of every kernel on tiny inputs."""
    x = np.array([0.5, 1.5, 2.0], np.float32)
    codes = np.zeros(3, np.int32)
    recon = np.zeros(3, np.float32)
    esc = np.zeros(3, np.float32)
    sz_quantize(x, 0.01, 32768, False, codes, recon, esc)
    sz_dequantize(codes, esc, 0.01, 32768, False, recon)
    sz_quantize(x, 0.01, 32768, True, codes, recon, esc)
    sz_dequantize(codes, esc, 0.01, 32768, True, recon)
    huffman_lengths(np.array([1, 2, 4], np.int64))
    eps = np.zeros(3)
    ar1_filter(eps, 0.5, eps)
    keys = np.zeros(3, np.uint64)
    a = np.arange(3, dtype=np.int64)
    interleave3(a, a, a, keys)
    deinterleave3(keys, a.copy(), a.copy(), a.copy())
    ints = np.zeros((6, 3), np.int64)
    interleave_any(ints, 4, keys)
    deinterleave_any(keys, 6, 4, ints)
    seg = np.array([0, 3], np.int64)
    prx_order(keys, seg, np.zeros(1, np.int64), np.full(1, 12, np.int64), 3,
              np.zeros(3, np.int64))
    crc64(b"123456789")
    packed_lut = ((np.array([1, 2], np.uint64) << HUFF_LEN_SHIFT)
                  | np.array([1, 2], np.uint64))
    out = np.zeros(8, np.uint8)
    huff_encode(np.array([0, 1, 1], np.int32), packed_lut, out)
    fc = np.zeros(4, np.uint64)
    cbl = np.zeros(4, np.int64)
    fi = np.zeros(4, np.int64)
    cbl[1] = 1
    cbl[2] = 1
    fc[2] = np.uint64(2)
    syms = np.array([0, 1], np.int32)
    huff_decode(out, 5, 3, 1, 2, fc, cbl, fi, syms, np.zeros(3, np.int32))
    widths = np.array([2, 4, 6, 8, 12, 16, 24, 33], np.uint8)
    ms = np.array([1, 5, 300], np.uint64)
    vout = np.zeros(32, np.uint8)
    _, nbits = vlc_encode(ms, widths, vout)
    dec = np.zeros(3, np.int64)
    vlc_decode_run(vout, nbits, 0, 3, widths, False, dec, 0)
    wt = widths.reshape(1, 8)
    sid = np.zeros(1, np.uint8)
    cpc_decode_keys(vout, nbits, np.array([0, 1], np.int64),
                    np.array([0], np.int64), sid, wt, keys, dec)
    vlc_decode_segmented(vout, nbits, np.array([0, 3], np.int64), sid, wt,
                         False, dec)
    skeys = np.sort(keys)
    cpc_encode_keys(skeys, np.array([0, 3], np.int64),
                    np.array([12], np.int64), sid, wt, vout)
    vlc_encode_segmented(ms, np.array([0, 3], np.int64), sid, wt, vout)
