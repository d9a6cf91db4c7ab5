import numpy as np
import pytest

from conftest import random_snapshot
from nbz import io as nbz_io
from nbz.errors import ArchiveError, ValidationError
from nbz.model import ErrorBoundSpec
from nbz.pipeline import Mode, Settings, compress

REL4 = ErrorBoundSpec.relative(1e-4)


class TestSnapshotFiles:
    def test_round_trip_bit_exact(self, rng, tmp_path):
        snap = random_snapshot(rng, 777)
        nbz_io.write_snapshot(snap, tmp_path / "snap")
        back = nbz_io.read_snapshot(tmp_path / "snap")
        for a, b in zip(snap.fields(), back.fields()):
            assert a.tobytes() == b.tobytes()

    def test_missing_field_named(self, rng, tmp_path):
        snap = random_snapshot(rng, 10)
        nbz_io.write_snapshot(snap, tmp_path / "s")
        (tmp_path / "s.vz").unlink()
        with pytest.raises(ValidationError, match="missing field vz"):
            nbz_io.read_snapshot(tmp_path / "s")

    def test_truncated_file_rejected(self, rng, tmp_path):
        snap = random_snapshot(rng, 10)
        nbz_io.write_snapshot(snap, tmp_path / "s")
        raw = (tmp_path / "s.xx").read_bytes()
        (tmp_path / "s.xx").write_bytes(raw[:-2])
        with pytest.raises(ValidationError, match="not a multiple of 4"):
            nbz_io.read_snapshot(tmp_path / "s")

    def test_length_mismatch_rejected(self, rng, tmp_path):
        snap = random_snapshot(rng, 10)
        nbz_io.write_snapshot(snap, tmp_path / "s")
        raw = (tmp_path / "s.xx").read_bytes()
        (tmp_path / "s.xx").write_bytes(raw[:-4])
        with pytest.raises(ValidationError, match="lengths differ"):
            nbz_io.read_snapshot(tmp_path / "s")

    def test_non_finite_rejected_with_position(self, tmp_path):
        arr = np.zeros(5, "<f4")
        arr[3] = np.inf
        for name in ("xx", "yy", "zz", "vx", "vy", "vz"):
            (tmp_path / f"s.{name}").write_bytes(np.zeros(5, "<f4").tobytes())
        (tmp_path / "s.yy").write_bytes(arr.tobytes())
        with pytest.raises(ValidationError, match="yy.*index 3"):
            nbz_io.read_snapshot(tmp_path / "s")


class TestPermutationSidecar:
    def test_round_trip(self, tmp_path, rng):
        order = rng.permutation(100)
        nbz_io.write_permutation(order, tmp_path / "p.perm")
        back = nbz_io.read_permutation(tmp_path / "p.perm")
        assert np.array_equal(order, back)


class TestArchiveContainer:
    @pytest.mark.parametrize("mode", list(Mode))
    def test_file_round_trip(self, rng, tmp_path, mode):
        snap = random_snapshot(rng, 3000)
        archive = compress(snap, mode, REL4).archive
        nbz_io.write_archive(archive, tmp_path / "a.nbz")
        back = nbz_io.read_archive(tmp_path / "a.nbz")
        assert nbz_io.serialize_archive(back) == archive.serialized()
        assert back.mode == archive.mode
        assert back.n == archive.n
        assert back.bounds == archive.bounds

    def test_foreign_magic_rejected(self):
        with pytest.raises(ArchiveError, match="not an NBZ archive"):
            nbz_io.deserialize_archive(b"GZIP" + b"\x00" * 100)

    def test_version_mismatch_rejected(self, rng):
        snap = random_snapshot(rng, 100)
        wire = bytearray(compress(snap, Mode.SZ_LV, REL4).archive.serialized())
        wire[4] = 99  # version low byte
        with pytest.raises(ArchiveError, match="version"):
            nbz_io.deserialize_archive(bytes(wire))

    def test_payload_flip_is_checksum_error(self, rng):
        snap = random_snapshot(rng, 2000)
        wire = bytearray(compress(snap, Mode.SZ_LV, REL4).archive.serialized())
        wire[-10] ^= 0xFF
        with pytest.raises(ArchiveError, match="checksum"):
            nbz_io.deserialize_archive(bytes(wire))

    @pytest.mark.parametrize("mode", [Mode.SZ_LV, Mode.SZ_LV_PRX, Mode.CPC2000])
    def test_header_overhead_budget(self, rng, mode):
        # header bytes (everything except stream payloads) stay within
        # 1 KiB + 32 bytes per segment
        snap = random_snapshot(rng, 50000)
        archive = compress(snap, mode, REL4,
                           Settings(segment_size=2048)).archive
        payload = sum(len(s.payload) for s in archive.streams)
        overhead = archive.total_bytes() - payload
        assert overhead <= 1024 + 32 * max(1, len(archive.segments))
