import json
import math
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, strategies as st

from artifact.series import (PontryaginSeries, SQRT3_PI, coeff_l1, constant, derivative_x,
                             eval_baseleaf, eval_solenoid, l2_norm, limit_periodic_modulus,
                             periodic_approximants, shift, sobolev_l1_bound, sup_norm_estimate)
from artifact.solenoid import ChainS, exp_point
from strategies import chain_and_series, chain_series, padic_chains, real_chain_series

C = ChainS.padic(2, 4)


class TestConstruction:
    def test_float_frequency_rejected(self):
        with pytest.raises(TypeError):
            PontryaginSeries({0.5: 1})

    def test_zero_coefficients_pruned(self):
        assert len(PontryaginSeries({F(1, 2): 0, 1: 1})) == 1

    def test_duplicate_frequencies_accumulate(self):
        s = PontryaginSeries([(F(1, 2), 1), ((2, 4), 2)])
        assert s[F(1, 2)] == 3

    def test_big_denominators_stay_exact(self):
        q = F(1, 2 ** 80)
        s = PontryaginSeries({q: 1}) * PontryaginSeries({-q: 1})
        assert s == constant(1)


class TestEvaluation:
    def test_constant(self):
        assert eval_baseleaf(constant(5), 3.7 + 1j) == 5

    def test_vertical_decay(self):
        assert abs(eval_baseleaf(PontryaginSeries({1: 1}), 1j * math.pi) - 0.0432139) < 1e-7

    def test_cosine_pair(self):
        s = PontryaginSeries({F(1, 2): 1, F(-1, 2): 1})
        assert eval_baseleaf(s, 0.0) == 2

    def test_on_solenoid_constant(self):
        p = exp_point(7, 2 + 1j, C)
        assert eval_solenoid(constant(2.5), p) == 2.5

    def test_on_solenoid_half_turn(self):
        v = eval_solenoid(PontryaginSeries({F(1, 2): 1}), exp_point(1, 0, C))
        assert abs(v + 1) < 1e-15

    @given(real_chain_series(C), st.floats(-50, 50))
    def test_reality(self, f, x):
        assert abs(complex(eval_baseleaf(f, x)).imag) <= 1e-12 * max(1.0, coeff_l1(f))

    @given(chain_series(C), st.integers(-1000, 1000), st.floats(0, 6.28), st.floats(-1, 1))
    def test_solenoid_matches_shifted_baseleaf(self, f, a, x, y):
        p = exp_point(a, complex(x, y), C)
        direct = eval_baseleaf(f, p.z + 2 * math.pi * p.a.residues[-1])
        assert abs(eval_solenoid(f, p) - direct) < 1e-9 * max(1.0, coeff_l1(f)) * 10 ** abs(y)


class TestAlgebra:
    def test_product_of_halves(self):
        h = PontryaginSeries({F(1, 2): 1})
        assert h * h == PontryaginSeries({1: 1})

    def test_hand_convolution(self):
        f = PontryaginSeries({F(1, 2): 1, F(1, 3): 2})
        g = PontryaginSeries({F(1, 6): 1})
        assert f * g == PontryaginSeries({F(2, 3): 1, F(1, 2): 2})
        z = np.random.default_rng(1).uniform(-5, 5, 100)
        assert np.max(np.abs(eval_baseleaf(f * g, z) - eval_baseleaf(f, z) * eval_baseleaf(g, z))) < 1e-12

    @given(chain_and_series(), st.data())
    def test_product_agrees_pointwise(self, cs, data):
        chain, f = cs
        g = data.draw(chain_series(chain))
        z = np.linspace(-3, 3, 17)
        lhs = eval_baseleaf(f * g, z)
        rhs = eval_baseleaf(f, z) * eval_baseleaf(g, z)
        assert np.max(np.abs(lhs - rhs)) <= 1e-11 * (1 + coeff_l1(f) * coeff_l1(g))

    @given(chain_and_series())
    def test_sub_self_is_empty(self, cs):
        _, f = cs
        assert len(f - f) == 0


class TestDerivative:
    def test_constant(self):
        assert len(derivative_x(constant(4))) == 0

    def test_unit_mode(self):
        assert derivative_x(PontryaginSeries({1: 1})) == PontryaginSeries({1: 1j})

    def test_half_mode(self):
        assert derivative_x(PontryaginSeries({F(1, 2): 2})) == PontryaginSeries({F(1, 2): 1j})

    @given(chain_series(C, max_num=2), st.floats(-10, 10))
    def test_matches_finite_difference(self, f, x):
        h = 1e-5
        fd = (eval_baseleaf(f, x + h) - eval_baseleaf(f, x - h)) / (2 * h)
        assert abs(fd - eval_baseleaf(derivative_x(f), x)) < 1e-6 * (1 + coeff_l1(f)) * 16


class TestNorms:
    def test_constant(self):
        assert coeff_l1(constant(3)) == 3 and l2_norm(constant(3)) == 3
        assert sup_norm_estimate(constant(3)) == (3, 3)

    def test_l1(self):
        assert coeff_l1(PontryaginSeries({F(1, 2): 1, F(1, 3): 2})) == 3

    @given(chain_and_series())
    def test_sup_bracket_is_ordered(self, cs):
        _, f = cs
        lo, up = sup_norm_estimate(f)
        assert lo <= up + 1e-12
        assert up == coeff_l1(f)

    def test_two_terms_are_exact(self):
        lo, up = sup_norm_estimate(PontryaginSeries({F(1, 3): 1j, F(-5, 2): 2}))
        assert lo == up == 3


class TestSobolevBound:
    @given(chain_and_series())
    def test_bound_with_denominator_holds(self, cs):
        _, f = cs
        assert coeff_l1(f) <= sobolev_l1_bound(f, with_denominator=True) + 1e-10

    @given(chain_series(ChainS.padic(2, 1)))
    def test_plain_bound_holds_for_integer_frequencies(self, f):
        assert coeff_l1(f) <= sobolev_l1_bound(f) + 1e-10

    def test_plain_bound_fails_for_a_half_frequency(self):
        f = PontryaginSeries({F(1, 2): 1})
        assert coeff_l1(f) == 1
        assert sobolev_l1_bound(f) == pytest.approx(SQRT3_PI / 2)
        assert coeff_l1(f) > sobolev_l1_bound(f)


class TestLimitPeriodic:
    def test_periodic_has_zero_modulus(self):
        f = PontryaginSeries({F(1, 4): 1, F(3, 2): 2})
        assert limit_periodic_modulus(f, 4) == (0.0, 0.0)

    def test_half_mode_one_turn(self):
        assert limit_periodic_modulus(PontryaginSeries({F(1, 2): 1}), 1)[1] == pytest.approx(2)

    def test_sixth_mode_two_turns(self):
        lo, up = limit_periodic_modulus(PontryaginSeries({F(1, 6): 1}), 2)
        assert up == pytest.approx(math.sqrt(3)) and lo == pytest.approx(math.sqrt(3))

    @given(chain_and_series(), st.integers(0, 5))
    def test_shift_matches_translation(self, cs, k):
        chain, f = cs
        N = chain.levels[min(k, chain.depth - 1)]
        x = np.linspace(0, 10, 11)
        direct = eval_baseleaf(f, x + 2 * math.pi * N)
        assert np.max(np.abs(eval_baseleaf(shift(f, N), x) - direct)) < 1e-9 * (1 + coeff_l1(f)) * N

    def test_approximants(self):
        f = PontryaginSeries({F(1, 2): 1, 3: 1})
        ap = periodic_approximants(f, ChainS.padic(2, 3))
        assert ap[0] == PontryaginSeries({3: 1}) and ap[1] == f and ap[2] == f
        assert periodic_approximants(PontryaginSeries(), C) == [PontryaginSeries()] * 4


class TestJson:
    @given(chain_and_series())
    def test_round_trip(self, cs):
        _, f = cs
        text = json.dumps(f.to_json(), sort_keys=True)
        assert PontryaginSeries.from_json(json.loads(text)) == f
        assert json.dumps(PontryaginSeries.from_json(json.loads(text)).to_json(), sort_keys=True) == text

    def test_reality_flag_checked(self):
        obj = {"reality": True, "terms": [{"num": 1, "den": 2, "re": 1, "im": 0}]}
        with pytest.raises(ValueError):
            PontryaginSeries.from_json(obj)

    def test_bad_denominator(self):
        with pytest.raises(ValueError):
            PontryaginSeries.from_json({"terms": [{"num": 1, "den": 0, "re": 1}]})
