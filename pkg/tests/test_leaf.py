import math
from fractions import Fraction as F

import numpy as np
import pytest

from artifact.leaf import PeriodicField, Profile, ProfiledSeries, sample_period
from artifact.series import PontryaginSeries

B = Profile("bump", 0.2, 0.5)
ETA = ProfiledSeries(((F(1, 2), 0.3, B), (F(1), 0.1j, Profile("gaussian", 0, 0.1))))


class TestProfile:
    def test_peak_and_support(self):
        assert B(0.2) == pytest.approx(1.0)
        assert B(np.array([-0.31, 0.71])).tolist() == [0.0, 0.0]
        assert B.support() == (-0.3, 0.7)

    def test_reflect(self):
        assert B.reflect()(-0.5) == B(0.5)

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            Profile("box")


class TestProfiledSeries:
    def test_filter_drops_halves(self):
        assert ETA.filtered(1).terms == (ETA.terms[1],)
        assert ETA.filtered(2) == ETA

    def test_band_difference_is_exact(self):
        band = ETA.filtered(2) - ETA.filtered(1)
        assert band.terms == (ETA.terms[0],)

    def test_period_and_l1(self):
        assert ETA.period == 2
        assert ETA.l1() == pytest.approx(0.4)

    def test_window(self):
        assert ETA.y_window() == (-0.8, 0.8)

    def test_conj_reflect_is_an_involution(self):
        x, y = np.meshgrid(np.linspace(0, 12, 9), np.linspace(-1, 1, 7))
        twice = ETA.conj_reflect().conj_reflect()
        assert np.max(np.abs(twice(x, y) - ETA(x, y))) == 0
        assert np.max(np.abs(ETA.conj_reflect()(x, y) - np.conj(ETA(x, -y)))) < 1e-15

    def test_json_round_trip(self):
        assert ProfiledSeries.from_json(ETA.to_json()) == ETA

    def test_from_series(self):
        s = PontryaginSeries({F(1, 3): 2})
        p = ProfiledSeries.from_series(s, B)
        assert p(0.0, 0.2) == pytest.approx(2.0)

    def test_sup_bracket(self):
        lo, up = ETA.sup_bracket()
        assert lo <= up == pytest.approx(0.4)


class TestPeriodicField:
    def field(self):
        return PeriodicField(lambda x, y: np.cos(x / 4) * np.exp(-y * y) + 0.5, 4, (0.0, 0.5))

    def test_average_kills_quarter_mode(self):
        f2 = self.field().filtered(2)
        x = np.linspace(0, 8, 5)
        assert np.max(np.abs(f2(x, 0.0 * x) - 0.5)) < 1e-15

    def test_filter_above_period_is_identity(self):
        f = self.field()
        assert f.filtered(8) is f

    def test_incompatible_level(self):
        with pytest.raises(ValueError):
            self.field().filtered(3)

    def test_sample_period_shape(self):
        x, v = sample_period(self.field(), 4, 8, (0.0, 1.0))
        assert x.size == 32 and v.shape == (2, 32)
        assert x[-1] < 2 * math.pi * 4
