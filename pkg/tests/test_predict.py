import numpy as np
import pytest

from nbz.errors import DegenerateRangeError
from nbz.predict import PredictorKind, predict, prediction_nrmse


class TestPredict:
    def test_lv_copies_predecessor(self):
        assert predict(PredictorKind.LV, [1.0, 7.25]) == 7.25

    def test_lcf_extrapolates(self):
        assert predict(PredictorKind.LCF, [0.5, 1.0, 3.0]) == 5.0

    def test_first_point_predicts_zero(self):
        assert predict(PredictorKind.LV, []) == 0.0
        assert predict(PredictorKind.LCF, []) == 0.0

    def test_lcf_degrades_to_lv_with_one_predecessor(self):
        assert predict(PredictorKind.LCF, [4.0]) == 4.0


class TestPredictionNrmse:
    def test_lcf_exact_on_linear_data(self):
        # dyadic slope so the float32 values are exactly linear
        field = np.arange(1000, dtype=np.float32) * 0.375 + 5.0
        assert prediction_nrmse(PredictorKind.LCF, field) == 0.0

    def test_lv_on_unit_increments(self):
        n = 101
        field = np.arange(n, dtype=np.float32)
        # every LV residual is 1, range is n-1
        assert prediction_nrmse(PredictorKind.LV, field) == pytest.approx(1.0 / (n - 1))

    def test_constant_field_rejected(self):
        with pytest.raises(DegenerateRangeError):
            prediction_nrmse(PredictorKind.LV, np.full(10, 3.0, np.float32))

    @pytest.mark.parametrize("seed", range(3))
    def test_lv_beats_lcf_on_noise(self, seed):
        rng = np.random.default_rng(seed)
        field = rng.normal(0, 1, 10 ** 5).astype(np.float32)
        lv = prediction_nrmse(PredictorKind.LV, field)
        lcf = prediction_nrmse(PredictorKind.LCF, field)
        assert lv < lcf

    def test_residual_variance_ratio_on_iid(self):
        # expected squared residuals: 2 sigma^2 (LV) vs 6 sigma^2 (LCF)
        rng = np.random.default_rng(99)
        field = rng.normal(0, 1, 10 ** 6).astype(np.float32)
        lv = prediction_nrmse(PredictorKind.LV, field)
        lcf = prediction_nrmse(PredictorKind.LCF, field)
        assert (lcf / lv) ** 2 == pytest.approx(3.0, rel=0.05)
