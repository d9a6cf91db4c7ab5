"""Benchmark of the numba kernels against their pure numpy/Python
fallbacks.

    python -m nbz.bench [--n N] [--repeat R]

Both flavors of every kernel live in nbz._kernels regardless of the
NBZ_DISABLE_NUMBA flag, so one process can time them side by side and
check that their outputs agree.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from . import _kernels as K


def _time(fn, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def _bench_cases(n, rng):
    x = rng.normal(0, 100, n).astype(np.float32)
    codes = np.zeros(n, np.int32)
    recon = np.zeros(n, np.float32)
    esc = np.zeros(n, np.float32)
    K.sz_quantize(x, 0.01, 32768, False, codes, recon, esc)
    n_esc = int((codes == 0).sum())

    freqs = np.bincount(codes)
    syms = np.flatnonzero(freqs > 0).astype(np.int64)
    order = np.argsort(freqs[syms], kind="stable")
    counts_sorted = np.ascontiguousarray(freqs[syms][order])

    from .encode import huffman_build, huffman_encode
    table = huffman_build(freqs)
    d = table._derived
    enc_bits = int(d["enc_lens"][codes].astype(np.int64).sum())
    enc_out = np.zeros((enc_bits + 7) // 8, np.uint8)
    enc_stream = huffman_encode(codes, table).as_array()
    dec_out = np.zeros(n, np.int32)

    ints = rng.integers(-(2 ** 18), 2 ** 18, n)
    from .encode import VLC_SCHEMES, vlc_magnitudes, vlc_cost_per_value
    scheme = VLC_SCHEMES[0]
    ms = vlc_magnitudes(ints, scheme)
    vlc_bits = int(vlc_cost_per_value(ms, scheme).sum())
    vlc_out = np.zeros(vlc_bits // 8 + 16, np.uint8)
    widths = scheme.widths_array()
    vlc_stream = vlc_out.copy()
    _, total_bits = K.vlc_encode(ms, widths, vlc_stream)
    vlc_dec = np.zeros(n, np.int64)

    cols = [rng.integers(0, 1 << 13, n) for _ in range(3)]
    keys = np.zeros(n, np.uint64)
    K.interleave3(cols[0], cols[1], cols[2], keys)
    seg = 16384
    starts = np.arange(0, n, seg, dtype=np.int64)
    starts = np.append(starts, n)
    nseg = starts.shape[0] - 1
    shifts = np.zeros(nseg, np.int64)
    sort_bits = np.full(nseg, 39, np.int64)
    perm = np.zeros(n, np.int64)

    eps = rng.standard_normal(n)
    ar_out = np.zeros(n)

    blob = rng.integers(0, 256, n).astype(np.uint8)

    cases = [
        ("sz_quantize", lambda f: f(x, 0.01, 32768, False, codes.copy(),
                                    recon.copy(), esc.copy()),
         K.sz_quantize_njit, K.sz_quantize_fallback),
        ("sz_dequantize", lambda f: f(codes, esc[:n_esc], 0.01, 32768, False,
                                      recon.copy()),
         K.sz_dequantize_njit, K.sz_dequantize_fallback),
        ("huffman_lengths", lambda f: f(counts_sorted),
         K.huffman_lengths_njit, K.huffman_lengths_fallback),
        ("huff_encode", lambda f: f(codes, d["enc_packed"], enc_out.copy()),
         K.huff_encode_njit, K.huff_encode_fallback),
        ("huff_decode", lambda f: f(enc_stream, enc_bits, n, d["min_len"],
                                    d["max_len"], d["first_code"],
                                    d["counts_by_len"], d["first_idx"],
                                    d["sorted_syms"], dec_out.copy()),
         K.huff_decode_njit, K.huff_decode_fallback),
        ("vlc_encode", lambda f: f(ms, widths, vlc_out.copy()),
         K.vlc_encode_njit, K.vlc_encode_fallback),
        ("vlc_decode", lambda f: f(vlc_stream, total_bits, 0, n, widths, True,
                                   vlc_dec.copy(), 0),
         K._vlc_decode_run_jit, K.vlc_decode_run_fallback),
        ("interleave3", lambda f: f(cols[0], cols[1], cols[2], keys.copy()),
         K.interleave3_njit, K.interleave3_fallback),
        ("prx_order", lambda f: f(keys, starts, shifts, sort_bits, 3,
                                  perm.copy()),
         K.prx_order_njit, K.prx_order_fallback),
        ("ar1_filter", lambda f: f(eps, 0.92, ar_out.copy()),
         K.ar1_filter_njit, K.ar1_filter_fallback),
        ("crc64", lambda f: f(blob, K.CRC64_TABLE),
         K.crc64_njit, K.crc64_fallback),
    ]
    return cases


def run(n: int, repeat: int) -> None:
    rng = np.random.default_rng(0)
    if K.NUMBA_ENABLED:
        K.warmup()
    print(f"kernel benchmark: n={n}, repeat={repeat}, "
          f"numba={'on' if K.NUMBA_ENABLED else 'OFF (NBZ_DISABLE_NUMBA)'}")
    print(f"{'kernel':<18} {'njit':>12} {'fallback':>12} {'speedup':>9}")
    for name, call, jit_fn, fb_fn in _bench_cases(n, rng):
        t_fb, _ = _time(lambda: call(fb_fn), repeat)
        if jit_fn is None:
            print(f"{name:<18} {'n/a':>12} {t_fb * 1e3:>10.2f}ms {'':>9}")
            continue
        call(jit_fn)  # make sure it is compiled before timing
        t_jit, _ = _time(lambda: call(jit_fn), repeat)
        print(f"{name:<18} {t_jit * 1e3:>10.2f}ms {t_fb * 1e3:>10.2f}ms "
              f"{t_fb / t_jit:>8.1f}x")


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--n", type=int, default=200_000,
                        help="elements per kernel (default 200k; the pure "
                             "fallbacks are slow)")
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()
    run(args.n, args.repeat)


if __name__ == "__main__":
    main()
