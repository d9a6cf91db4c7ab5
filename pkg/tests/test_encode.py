import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nbz import encode as E
from nbz.errors import DecodeError, EncodeError


def brute_force_optimal_bits(freqs):
    """Minimum weighted path length over all prefix trees (tiny alphabets)."""
    weights = tuple(sorted(freqs, reverse=True))

    def best(items):
        if len(items) == 1:
            return 0
        costs = []
        for i, j in itertools.combinations(range(len(items)), 2):
            merged = items[i] + items[j]
            rest = [w for k, w in enumerate(items) if k not in (i, j)]
            costs.append(best(rest + [merged]) + merged)
        return min(costs)

    return best(list(weights))


class TestHuffmanBuild:
    def test_single_symbol_gets_one_bit(self):
        t = E.huffman_build({9: 1})
        assert t.code_length(9) == 1

    def test_symmetric_pair(self):
        t = E.huffman_build({0: 5, 1: 5})
        assert t.code_length(0) == 1
        assert t.code_length(1) == 1

    def test_matches_brute_force_on_small_alphabets(self):
        cases = [
            {0: 5, 1: 2, 2: 1, 3: 1},
            {0: 1, 1: 1, 2: 1, 3: 1},
            {0: 8, 1: 4, 2: 2, 3: 1},
            {0: 3, 1: 3, 2: 2},
        ]
        for freqs in cases:
            t = E.huffman_build(freqs)
            got = sum(freqs[s] * t.code_length(s) for s in freqs)
            assert got == brute_force_optimal_bits(freqs.values())

    def test_empty_rejected(self):
        with pytest.raises(EncodeError):
            E.huffman_build({})
        with pytest.raises(EncodeError):
            E.huffman_build(np.zeros(10, np.int64))

    def test_kraft_equality(self, rng):
        freqs = rng.integers(1, 1000, 200)
        t = E.huffman_build(freqs)
        lens = t.lengths.astype(np.int64)
        max_len = int(lens.max())
        assert int(np.sum(1 << (max_len - lens))) == 1 << max_len

    def test_canonical_codes_are_prefix_free(self, rng):
        t = E.huffman_build(rng.integers(1, 50, 40))
        words = t.code_words()
        items = sorted(words.values(), key=lambda cl: (cl[1], cl[0]))
        for (c1, l1), (c2, l2) in itertools.combinations(items, 2):
            if l1 <= l2:
                assert (c2 >> (l2 - l1)) != c1


class TestHuffmanRoundTrip:
    def test_empty(self):
        t = E.huffman_build({0: 1})
        bs = E.huffman_encode(np.zeros(0, np.int32), t)
        assert bs.bit_length == 0
        assert E.huffman_decode(bs, t, 0).size == 0

    def test_single_symbol_stream(self):
        t = E.huffman_build({7: 4})
        bs = E.huffman_encode(np.full(4, 7, np.int32), t)
        assert bs.bit_length == 4
        assert E.huffman_decode(bs, t, 4).tolist() == [7, 7, 7, 7]

    def test_zipf_symbols(self, rng):
        syms = np.minimum(rng.zipf(1.6, 10 ** 5), 5000).astype(np.int32)
        t = E.huffman_build(np.bincount(syms))
        bs = E.huffman_encode(syms, t)
        back = E.huffman_decode(bs, t, syms.size)
        assert np.array_equal(syms, back)

    def test_table_serialization_round_trip(self, rng):
        t = E.huffman_build(rng.integers(1, 99, 300))
        blob = t.serialize()
        t2, consumed = E.HuffmanTable.deserialize(blob)
        assert consumed == len(blob)
        assert np.array_equal(t.symbols, t2.symbols)
        assert np.array_equal(t.lengths, t2.lengths)

    def test_unknown_symbol_rejected(self):
        t = E.huffman_build({1: 3, 2: 1})
        with pytest.raises(EncodeError, match="not in table|outside table"):
            E.huffman_encode(np.array([1, 3], np.int32), t)

    def test_truncated_stream_rejected(self, rng):
        syms = rng.integers(0, 64, 1000).astype(np.int32)
        t = E.huffman_build(np.bincount(syms))
        bs = E.huffman_encode(syms, t)
        with pytest.raises(DecodeError, match="truncated"):
            E.huffman_decode(bs.to_bytes()[:10], t, 1000)

    def test_never_worse_than_fixed_width(self, rng):
        syms = rng.integers(0, 256, 5000).astype(np.int32)
        t = E.huffman_build(np.bincount(syms))
        bs = E.huffman_encode(syms, t)
        assert bs.bit_length <= 5000 * 8 + 8 * len(t.serialize())

    def test_within_one_bit_of_entropy(self, rng):
        syms = np.minimum(rng.geometric(0.3, 20000) - 1, 63).astype(np.int32)
        freqs = np.bincount(syms)
        p = freqs[freqs > 0] / syms.size
        entropy = -(p * np.log2(p)).sum()
        bs = E.huffman_encode(syms, E.huffman_build(freqs))
        per_symbol = bs.bit_length / syms.size
        assert entropy <= per_symbol + 1e-9
        assert per_symbol <= entropy + 1.0


class TestBitStream:
    def test_append_read_inverse_at_arbitrary_offsets(self, rng):
        bs = E.BitStream()
        written = []
        offset = 0
        for _ in range(500):
            nbits = int(rng.integers(1, 33))
            value = int(rng.integers(0, 1 << nbits))
            bs.append_bits(value, nbits)
            written.append((offset, value, nbits))
            offset += nbits
        for off, value, nbits in written:
            assert bs.read_bits(off, nbits) == value

    def test_append_stream_merges_at_bit_boundaries(self, rng):
        for lead in range(1, 9):
            bs = E.BitStream()
            bs.append_bits((1 << lead) - 1, lead)
            other = E.BitStream()
            payload = int(rng.integers(0, 1 << 20))
            other.append_bits(payload, 20)
            bs.append_stream(other.to_bytes(), other.bit_length)
            assert bs.read_bits(lead, 20) == payload

    def test_final_byte_zero_padded(self):
        bs = E.BitStream()
        bs.append_bits(0b101, 3)
        assert bs.to_bytes() == bytes([0b10100000])

    def test_read_past_end_rejected(self):
        bs = E.BitStream()
        bs.append_bits(1, 1)
        with pytest.raises(ValueError):
            bs.read_bits(0, 2)


class TestVlc:
    def test_three_zeros_cost_nine_bits(self):
        bs = E.vlc_encode(np.zeros(3, np.int64), E.VLC_SCHEMES[0])
        assert bs.bit_length == 9

    @pytest.mark.parametrize("scheme_id", [0, 1, 2, 3])
    def test_round_trip_random(self, rng, scheme_id):
        scheme = E.VLC_SCHEMES[scheme_id]
        if scheme.signed:
            ints = rng.integers(-(2 ** 20), 2 ** 20, 10 ** 5)
        else:
            ints = rng.integers(0, 2 ** 21, 10 ** 5)
        bs = E.vlc_encode(ints, scheme)
        back = E.vlc_decode(bs, scheme, ints.size)
        assert np.array_equal(ints, back)

    def test_int64_extremes_round_trip(self):
        ints = np.array([np.iinfo(np.int64).min, -1, 0, 1,
                         np.iinfo(np.int64).max], np.int64)
        bs = E.vlc_encode(ints, E.VLC_SCHEMES[1])
        assert np.array_equal(E.vlc_decode(bs, E.VLC_SCHEMES[1], 5), ints)

    def test_value_outside_buckets_rejected(self):
        with pytest.raises(EncodeError, match="outside all VLC buckets"):
            E.vlc_encode(np.array([1 << 40], np.int64), E.VLC_SCHEMES[0])

    def test_negative_in_unsigned_mode_rejected(self):
        with pytest.raises(EncodeError, match="negative"):
            E.vlc_encode(np.array([-1], np.int64), E.VLC_SCHEMES[2])

    def test_unsigned_cheaper_on_sorted_deltas(self, rng):
        deltas = np.sort(rng.integers(0, 10 ** 6, 5000))
        signed_bits = E.vlc_encoded_bits(deltas, E.VLC_SCHEMES[0])
        unsigned_bits = E.vlc_encoded_bits(deltas, E.VLC_SCHEMES[2])
        assert unsigned_bits < signed_bits

    def test_choose_scheme_minimizes_bits(self, rng):
        ints = rng.integers(-(2 ** 30), 2 ** 30, 2000)
        chosen = E.vlc_choose_scheme(ints, E.SIGNED_CANDIDATES)
        costs = {c.scheme_id: E.vlc_encoded_bits(ints, c)
                 for c in E.SIGNED_CANDIDATES}
        assert costs[chosen.scheme_id] == min(v for v in costs.values()
                                              if v is not None)

    def test_choose_scheme_singleton(self):
        only = (E.VLC_SCHEMES[1],)
        assert E.vlc_choose_scheme(np.zeros(5, np.int64), only) is E.VLC_SCHEMES[1]

    def test_choose_scheme_all_zero_prefers_narrow(self):
        chosen = E.vlc_choose_scheme(np.zeros(100, np.int64), E.SIGNED_CANDIDATES)
        assert chosen.scheme_id == 0

    def test_zigzag_round_trip_property(self):
        @settings(max_examples=200, deadline=None)
        @given(v=st.integers(-(2 ** 63), 2 ** 63 - 1))
        def inner(v):
            arr = np.array([v], np.int64)
            assert E.unzigzag(E.zigzag(arr)).tolist() == [v]
        inner()
