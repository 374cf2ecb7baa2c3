import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from artifact.solenoid import (ChainS, CuspError, DepthError, NotSolenoidalError, ProfiniteInt,
                               SolenoidPoint, canonicalize, exp_point, extract_degree,
                               fiber_samples, group_inv, group_mul, identity, project)
from strategies import padic_chains

TWO_PI = 2 * math.pi
C4 = ChainS.padic(2, 3)  # levels 1, 2, 4


def brute_canonical(a: int, z: complex, chain):
    """Apply (a, z) ~ (a + 1, z - 2 pi) one step at a time until Re z is in [0, 2 pi)."""
    while not 0 <= z.real < TWO_PI:
        step = 1 if z.real >= TWO_PI else -1
        a, z = a + step, z - step * TWO_PI
    return ProfiniteInt.from_int(a, chain), z


class TestChain:
    def test_padic_levels(self):
        assert ChainS.padic(3, 4).levels == (1, 3, 9, 27)

    def test_factorial_levels(self):
        assert ChainS.factorial(5).levels == (1, 2, 6, 24, 120)

    def test_rejects_non_divisibility(self):
        with pytest.raises(ValueError):
            ChainS.custom((2, 3))

    def test_truncate_and_index(self):
        c = ChainS.padic(2, 5)
        assert c.truncate(2).levels == (1, 2)
        assert c.index(8) == 3
        with pytest.raises(DepthError):
            c.index(3)

    def test_json_round_trip(self):
        for c in (ChainS.padic(2, 4), ChainS.factorial(4), ChainS.custom((2, 6, 12))):
            assert ChainS.from_json(c.to_json()) == c


class TestProfinite:
    def test_residue_compatibility_enforced(self):
        with pytest.raises(ValueError):
            ProfiniteInt((0, 1, 2), C4)

    @given(st.integers(-10**6, 10**6), st.integers(-10**6, 10**6))
    def test_addition_is_integer_addition(self, a, b):
        s = ProfiniteInt.from_int(a, C4) + ProfiniteInt.from_int(b, C4)
        assert s == ProfiniteInt.from_int(a + b, C4)

    def test_negation(self):
        assert (-ProfiniteInt.from_int(1, C4)).residues == (0, 1, 3)


class TestCanonicalForm:
    def test_identity(self):
        p = exp_point(0, 0, C4)
        assert p == identity(C4) and p.z == 0

    def test_kernel_element(self):
        assert exp_point(1, -TWO_PI, C4) == identity(C4)

    def test_four_pi_carries_two(self):
        # Re z = 4 pi carries two full turns into the profinite coordinate
        p = exp_point(0, 2 * TWO_PI, C4)
        assert p.z.real == 0.0
        assert p.a.residues == tuple(2 % n for n in C4.levels)
        a, z = brute_canonical(0, 2 * TWO_PI + 0j, C4)
        assert p.a == a and p.z == z

    @given(st.integers(-50, 50), st.floats(-100, 100), st.floats(-5, 5))
    def test_matches_brute_force(self, a, x, y):
        p = exp_point(a, complex(x, y), C4)
        ref_a, ref_z = brute_canonical(a, complex(x, y), C4)
        assert p.a == ref_a
        assert abs(p.z - ref_z) < 1e-9
        assert 0 <= p.z.real < TWO_PI

    def test_json(self):
        p = exp_point(5, 1.5 + 0.25j, C4)
        assert SolenoidPoint.from_json(p.to_json(), C4) == p


class TestProjection:
    def test_unit(self):
        assert project(exp_point(0, 0, C4), 1) == 1

    def test_half_turn(self):
        assert abs(project(exp_point(1, 0, C4), 2) - (-1)) < 1e-15

    def test_vertical(self):
        assert abs(project(exp_point(0, 1j, C4), 1) - math.exp(-1)) < 1e-15

    @given(st.integers(-1000, 1000), st.floats(0, 6.28), st.floats(-2, 2))
    def test_tower_compatibility(self, a, x, y):
        # pi_2 = pi_4 ** 2 and pi_1 = pi_2 ** 2
        p = exp_point(a, complex(x, y), C4)
        assert abs(project(p, 4) ** 2 - project(p, 2)) < 1e-12
        assert abs(project(p, 2) ** 2 - project(p, 1)) < 1e-12

    def test_level_outside_chain(self):
        with pytest.raises(DepthError):
            project(identity(C4), 3)


class TestGroup:
    def test_identity_law(self):
        p = exp_point(3, 1 + 1j, C4)
        assert group_mul(identity(C4), p) == p

    def test_half_turns_compose(self):
        q = group_mul(exp_point(0, math.pi, C4), exp_point(0, math.pi, C4))
        assert q == exp_point(1, 0, C4)

    def test_integer_coordinates(self):
        assert group_mul(exp_point(1, 0, C4), exp_point(1, 0, C4)) == exp_point(2, 0, C4)

    @given(st.integers(-100, 100), st.floats(0, 6), st.floats(-1, 1))
    def test_inverse(self, a, x, y):
        p = exp_point(a, complex(x, y), C4)
        e = group_mul(p, group_inv(p))
        assert e.a.is_zero() or e.a == ProfiniteInt.from_int(-1, C4)
        assert abs(project(e, 4) - 1) < 1e-12

    @given(padic_chains(), st.integers(-99, 99), st.integers(-99, 99))
    def test_projection_is_a_homomorphism(self, chain, a, b):
        p, q = exp_point(a, 0.3 + 0.1j, chain), exp_point(b, 1.1 - 0.2j, chain)
        n = chain.top
        assert abs(project(group_mul(p, q), n) - project(p, n) * project(q, n)) < 1e-12

    def test_chain_mismatch(self):
        with pytest.raises(DepthError):
            group_mul(identity(C4), identity(ChainS.padic(3, 3)))


class TestFibers:
    def test_four_points_over_one(self):
        pts = fiber_samples(1.0, 1, C4)
        assert len(pts) == 4
        assert all(abs(project(p, 1) - 1) < 1e-12 for p in pts)
        assert sorted(p.a.mod(4) for p in pts) == [0, 1, 2, 3]

    def test_top_level_single_point(self):
        assert len(fiber_samples(1.0, 4, C4)) == 1

    def test_cusp(self):
        with pytest.raises(CuspError):
            fiber_samples(0.0, 1, C4)

    def test_projection_of_fiber(self):
        x = 0.5 * np.exp(0.7j)
        for p in fiber_samples(x, 2, C4):
            assert abs(project(p, 2) - x) < 1e-12


class TestDegree:
    chain = ChainS.factorial(4)
    x = np.linspace(0, 4 * TWO_PI * 24, 8 * 24 * 64, endpoint=False)

    def test_identity(self):
        d = extract_degree(self.x, self.x, self.chain)
        assert d.degree == 1 and np.max(np.abs(d.remainder)) < 1e-9

    def test_three_halves(self):
        d = extract_degree(self.x, 1.5 * self.x + 0.1 * np.sin(self.x / 2), self.chain)
        assert d.degree == Fraction(3, 2)

    def test_degree_two_with_slow_mode(self):
        v = 2 * self.x + np.sin(self.x) + 0.5 * np.sin(self.x / 6)
        assert extract_degree(self.x, v, self.chain).degree == 2

    def test_irrational_slope_rejected(self):
        with pytest.raises(NotSolenoidalError):
            extract_degree(self.x, math.sqrt(2) * self.x, self.chain)

    def test_short_window_rejected(self):
        with pytest.raises(ValueError):
            extract_degree(self.x[:100], self.x[:100], self.chain)
