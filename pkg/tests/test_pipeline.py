import numpy as np
import pytest

from conftest import random_snapshot
from nbz import io as nbz_io
from nbz.errors import ArchiveError, BoundTooSmallError
from nbz.model import ErrorBoundSpec, ParticleSnapshot
from nbz.pipeline import (Mode, Settings, compress, decompress, ratio)

ALL_MODES = list(Mode)
REL4 = ErrorBoundSpec.relative(1e-4)


def matched_original(snapshot, result):
    if result.order is None:
        return snapshot
    return ParticleSnapshot(*(f[result.order] for f in snapshot.fields()))


def assert_bound_holds(snapshot, result, recon):
    matched = matched_original(snapshot, result)
    for fi in range(6):
        bound = result.archive.bounds[fi]
        err = np.abs(matched.field(fi).astype(np.float64)
                     - recon.field(fi).astype(np.float64))
        limit = bound if bound > 0 else 0.0
        assert float(err.max(initial=0.0)) <= limit


class TestRoundTrips:
    @pytest.mark.parametrize("mode", ALL_MODES)
    def test_error_bound_random_data(self, rng, mode):
        snap = random_snapshot(rng, 20000)
        result = compress(snap, mode, REL4)
        recon = decompress(result.archive)
        assert_bound_holds(snap, result, recon)

    @pytest.mark.parametrize("mode", ALL_MODES)
    def test_wire_round_trip(self, rng, mode):
        snap = random_snapshot(rng, 5000)
        result = compress(snap, mode, REL4)
        wire = result.archive.serialized()
        again = nbz_io.deserialize_archive(wire)
        assert nbz_io.serialize_archive(again) == wire
        recon_a = decompress(result.archive)
        recon_b = decompress(again)
        for a, b in zip(recon_a.fields(), recon_b.fields()):
            assert np.array_equal(a, b)

    def test_unsorted_mode_preserves_positions(self, rng):
        snap = random_snapshot(rng, 3000)
        result = compress(snap, Mode.SZ_LV, REL4)
        assert result.order is None
        recon = decompress(result.archive)
        assert_bound_holds(snap, result, recon)

    def test_sorted_mode_matches_permuted_original(self, rng):
        snap = random_snapshot(rng, 3000)
        result = compress(snap, Mode.SZ_LV_PRX, REL4)
        assert result.order is not None
        recon = decompress(result.archive)
        matched = matched_original(snap, result)
        for fi in range(6):
            err = np.abs(matched.field(fi).astype(np.float64)
                         - recon.field(fi).astype(np.float64))
            assert float(err.max()) <= result.archive.bounds[fi]

    def test_sorted_output_preserves_tuple_multiset(self, rng):
        snap = random_snapshot(rng, 500)
        result = compress(snap, Mode.CPC2000, ErrorBoundSpec.absolute(1e-3))
        recon = decompress(result.archive)
        matched = matched_original(snap, result)
        # tuples are within-bound reconstructions of the same particles
        for fi in range(6):
            assert np.allclose(matched.field(fi), recon.field(fi), atol=2e-3)


class TestEdgeCases:
    @pytest.mark.parametrize("mode", ALL_MODES)
    def test_empty_snapshot(self, mode):
        snap = ParticleSnapshot.empty()
        result = compress(snap, mode, REL4)
        assert ratio(result.archive) is None
        recon = decompress(result.archive)
        assert recon.n == 0

    @pytest.mark.parametrize("mode", ALL_MODES)
    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_tiny_snapshots(self, rng, mode, n):
        snap = random_snapshot(rng, n)
        result = compress(snap, mode, REL4)
        recon = decompress(result.archive)
        assert_bound_holds(snap, result, recon)

    @pytest.mark.parametrize("mode", ALL_MODES)
    def test_constant_snapshot_fast_path(self, mode):
        snap = ParticleSnapshot(*[np.full(1000, v, np.float32)
                                  for v in (1.0, 2.0, 3.0, -4.0, 5.5, 0.0)])
        result = compress(snap, mode, REL4)  # relative bound, zero range
        assert result.archive.constant_mask == 0b111111
        assert result.archive.total_bytes() < 400
        recon = decompress(result.archive)
        for fi, v in enumerate((1.0, 2.0, 3.0, -4.0, 5.5, 0.0)):
            assert np.all(recon.field(fi) == np.float32(v))

    def test_one_constant_field_among_normal(self, rng):
        snap = random_snapshot(rng, 2000)
        fields = list(snap.fields())
        fields[1] = np.full(2000, 7.25, np.float32)
        snap = ParticleSnapshot(*fields)
        for mode in ALL_MODES:
            result = compress(snap, mode, REL4)
            recon = decompress(result.archive)
            matched = matched_original(snap, result)
            assert np.all(recon.yy == np.float32(7.25))
            assert_bound_holds(snap, result, recon)
            del matched

    @pytest.mark.parametrize("variant", ["coord", "vel", "coordvel"])
    def test_prx_rindex_variants(self, rng, variant):
        from nbz.rindex import RIndexVariant
        lookup = {"coord": RIndexVariant.COORDINATE,
                  "vel": RIndexVariant.VELOCITY,
                  "coordvel": RIndexVariant.COORD_VELOCITY}
        snap = random_snapshot(rng, 8000)
        settings = Settings(segment_size=2048, ignored_groups=2,
                            rindex_variant=lookup[variant])
        result = compress(snap, Mode.SZ_LV_PRX, REL4, settings)
        assert result.archive.rindex_variant is lookup[variant]
        recon = decompress(result.archive)
        assert_bound_holds(snap, result, recon)

    def test_escape_heavy_noise_ratio_above_half(self, rng):
        # incompressible noise at a tiny bound: mostly escapes, ratio stays > 0.5
        snap = random_snapshot(rng, 20000)
        spec = ErrorBoundSpec.relative(1e-9)
        result = compress(snap, Mode.SZ_LV, spec)
        r = ratio(result.archive)
        assert 0.5 < r < 1.2

    def test_bound_too_small_propagates(self):
        arr = np.full(100, 1e30, np.float32)
        arr[0] = 0.0
        snap = ParticleSnapshot(*[arr.copy() for _ in range(6)])
        with pytest.raises(BoundTooSmallError):
            compress(snap, Mode.CPC2000, ErrorBoundSpec.absolute(1e-8))


class TestDeterminismAndEquivalences:
    @pytest.mark.parametrize("mode", ALL_MODES)
    def test_byte_identical_across_runs(self, mode):
        rng1 = np.random.default_rng(5)
        rng2 = np.random.default_rng(5)
        a = compress(random_snapshot(rng1, 4000), mode, REL4).archive.serialized()
        b = compress(random_snapshot(rng2, 4000), mode, REL4).archive.serialized()
        assert a == b

    def test_prx_degenerates_to_sz_lv(self, rng):
        # one segment, every key group ignored: the sort is the identity and
        # the payload streams match plain sz-lv
        snap = random_snapshot(rng, 3000)
        plain = compress(snap, Mode.SZ_LV, REL4)
        degenerate = compress(snap, Mode.SZ_LV_PRX, REL4,
                              Settings(segment_size=10 ** 6, ignored_groups=64))
        assert np.array_equal(degenerate.order, np.arange(3000))
        plain_payloads = [s.payload for s in plain.archive.streams]
        degen_payloads = [s.payload for s in degenerate.archive.streams]
        assert plain_payloads == degen_payloads

    def test_loosening_bound_never_decreases_ratio(self, rng):
        snap = random_snapshot(rng, 30000)
        values = [1e-5, 1e-4, 1e-3, 1e-2]
        ratios = [ratio(compress(snap, Mode.SZ_LV,
                                 ErrorBoundSpec.relative(v)).archive)
                  for v in values]
        assert ratios == sorted(ratios)

    def test_ratio_definition(self, rng):
        snap = random_snapshot(rng, 1000)
        result = compress(snap, Mode.SZ_LV, REL4)
        r = ratio(result.archive)
        assert r == pytest.approx(24000 / result.archive.total_bytes())
        assert ratio(result.archive, original_bytes=2 * result.archive.total_bytes()) == 2.0


class TestCorruptArchives:
    def test_tampered_byte_is_rejected(self, rng):
        snap = random_snapshot(rng, 2000)
        wire = bytearray(compress(snap, Mode.SZ_LV, REL4).archive.serialized())
        for pos in [5, 40, len(wire) // 2, len(wire) - 3]:
            bad = bytearray(wire)
            bad[pos] ^= 0x10
            with pytest.raises(ArchiveError):
                nbz_io.deserialize_archive(bytes(bad))

    def test_truncated_archive_rejected(self, rng):
        snap = random_snapshot(rng, 2000)
        wire = compress(snap, Mode.SZ_LV, REL4).archive.serialized()
        with pytest.raises(ArchiveError):
            nbz_io.deserialize_archive(wire[: len(wire) - 5])
