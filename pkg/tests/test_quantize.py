import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nbz.errors import BoundTooSmallError, ValidationError
from nbz.predict import PredictorKind
from nbz.quantize import (dequantize_field, integerize, quantize_field,
                          quantize_residual)


class TestQuantizeResidual:
    def test_zero_residual_center_code(self):
        code, recon = quantize_residual(5.0, 5.0, 0.1, 65536)
        assert code == 32769
        assert recon == np.float32(5.0)

    def test_small_residual(self):
        code, recon = quantize_residual(0.19, 0.0, 0.1, 65536)
        assert code == 32770  # q = 1
        assert recon == pytest.approx(0.2, abs=1e-6)
        assert abs(0.19 - recon) <= 0.1 + 1e-7

    def test_out_of_range_escapes(self):
        code, recon = quantize_residual(1e9, 0.0, 0.1, 65536)
        assert code == 0
        assert recon == float(np.float32(1e9))

    def test_bad_params(self):
        with pytest.raises(ValidationError):
            quantize_residual(1.0, 0.0, 0.0, 65536)
        with pytest.raises(ValidationError):
            quantize_residual(1.0, 0.0, 0.1, 3)


class TestFieldRoundTrip:
    @pytest.mark.parametrize("kind", [PredictorKind.LV, PredictorKind.LCF])
    @pytest.mark.parametrize("rel_bound", [1e-1, 1e-3, 1e-5])
    def test_bound_holds_everywhere(self, rng, kind, rel_bound):
        x = rng.normal(0, 50, 20000).astype(np.float32)
        bound = rel_bound * float(x.max() - x.min())
        q, recon = quantize_field(x, kind, bound, 65536)
        err = np.abs(x.astype(np.float64) - recon.astype(np.float64))
        assert float(err.max()) <= bound
        back = dequantize_field(q, kind)
        assert np.array_equal(back, recon)

    def test_escapes_reconstruct_exactly(self, rng):
        x = (rng.normal(0, 1, 5000) * rng.choice([1, 1e8], 5000)).astype(np.float32)
        q, recon = quantize_field(x, PredictorKind.LV, 1e-3, 65536)
        escaped = q.codes == 0
        assert escaped.any()
        assert np.array_equal(recon[escaped], x[escaped])

    def test_determinism(self, rng):
        x = rng.normal(0, 10, 3000).astype(np.float32)
        q1, _ = quantize_field(x, PredictorKind.LV, 0.01, 65536)
        q2, _ = quantize_field(x, PredictorKind.LV, 0.01, 65536)
        assert np.array_equal(q1.codes, q2.codes)
        assert np.array_equal(q1.escapes, q2.escapes)

    def test_codes_concentrate_on_smooth_data(self):
        x = np.sin(np.linspace(0, 20, 50000)).astype(np.float32)
        bound = 1e-4 * 2.0
        q, _ = quantize_field(x, PredictorKind.LV, bound, 65536)
        center = 65536 // 2 + 1
        near = np.abs(q.codes - center) <= 4
        assert near.mean() > 0.9

    @settings(max_examples=60, deadline=None)
    @given(seed=st.integers(0, 2 ** 31), rel=st.floats(1e-6, 1e-1),
           kind=st.sampled_from([PredictorKind.LV, PredictorKind.LCF]))
    def test_bound_property(self, seed, rel, kind):
        r = np.random.default_rng(seed)
        x = r.normal(0, r.uniform(0.1, 1e4), 500).astype(np.float32)
        rng_span = float(x.max() - x.min())
        if rng_span == 0.0:
            return
        bound = rel * rng_span
        _, recon = quantize_field(x, kind, bound, 65536)
        err = np.abs(x.astype(np.float64) - recon.astype(np.float64))
        assert float(err.max()) <= bound


class TestIntegerize:
    def test_zero(self):
        f = integerize(np.array([0.0], np.float32), 0.5)
        assert f.ints.tolist() == [0]

    def test_half_even_rounding(self):
        # 3.05 as float32 is slightly below 3.05, so 3.05/0.1 rounds down
        f = integerize(np.array([1.0, 2.0, 3.05], np.float32), 0.05)
        assert f.ints.tolist() == [10, 20, 30]
        recon = f.reconstruct()
        err = np.abs(np.array([1.0, 2.0, 3.05], np.float64)
                     - recon.astype(np.float64))
        assert float(err.max()) <= 0.05 + 1e-7

    def test_coarse_bound_collapses_values(self, rng):
        x = rng.uniform(0, 1, 100).astype(np.float32)
        f = integerize(x, 1e6)
        assert not f.ints.any()

    def test_bound_too_small(self):
        with pytest.raises(BoundTooSmallError):
            integerize(np.array([1e30], np.float32), 1e-35)

    def test_grid_oracle(self):
        # |x - round(x/2b)*2b| <= b for randomized (x, b), in exact float64
        r = np.random.default_rng(7)
        x = r.normal(0, 1e3, 10 ** 6)
        b = 10.0 ** r.uniform(-6, 2, 10 ** 6)
        q = np.rint(x / (2 * b))
        err = np.abs(x - q * 2 * b)
        assert np.all(err <= b * (1 + 1e-12))
