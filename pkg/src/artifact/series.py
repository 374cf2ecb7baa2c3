"""Finite trigonometric series with rational frequencies.

A limit-periodic function on the baseleaf is stored as {q: a_q} with q an
exact ``Fraction`` and f(x) = sum a_q exp(i q x).  Frequencies stay exact so
that mode filters are decided by integer arithmetic, never by rounding.
Evaluation sums terms in order of decreasing |a_q| (ties by frequency).
"""
from __future__ import annotations

import cmath
import math
from fractions import Fraction
from typing import Iterable, Iterator, Mapping

import numpy as np

from .solenoid import DepthError, SolenoidPoint

SQRT3_PI = math.pi / math.sqrt(3.0)


def as_frequency(q) -> Fraction:
    if isinstance(q, Fraction):
        return q
    if isinstance(q, tuple):
        return Fraction(int(q[0]), int(q[1]))
    if isinstance(q, float):
        raise TypeError("frequencies must be exact; pass a Fraction, int, str or (num, den)")
    return Fraction(q)


class PontryaginSeries:
    """Immutable map frequency -> coefficient with exact zero pruning."""

    __slots__ = ("_terms", "_order")

    def __init__(self, terms: Mapping | Iterable = ()):
        items = terms.items() if isinstance(terms, Mapping) else terms
        acc: dict[Fraction, complex] = {}
        for q, a in items:
            q = as_frequency(q)
            acc[q] = acc.get(q, 0j) + complex(a)
        self._terms = {q: acc[q] for q in sorted(acc) if acc[q] != 0}
        self._order = None

    # -- container protocol -------------------------------------------------
    @property
    def terms(self) -> dict[Fraction, complex]:
        return dict(self._terms)

    def __len__(self) -> int:
        return len(self._terms)

    def __iter__(self) -> Iterator[tuple[Fraction, complex]]:
        return iter(self._terms.items())

    def __getitem__(self, q) -> complex:
        return self._terms.get(as_frequency(q), 0j)

    def __contains__(self, q) -> bool:
        return as_frequency(q) in self._terms

    def __eq__(self, other) -> bool:
        if not isinstance(other, PontryaginSeries):
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self):
        return hash(tuple(self._terms.items()))

    def __repr__(self) -> str:
        body = ", ".join(f"{q}: {a:.6g}" for q, a in self._terms.items())
        return f"PontryaginSeries({{{body}}})"

    @property
    def frequencies(self) -> list[Fraction]:
        return list(self._terms)

    @property
    def lcm_den(self) -> int:
        return math.lcm(1, *(q.denominator for q in self._terms))

    def is_real(self) -> bool:
        """Exact check of a_{-q} = conj(a_q)."""
        return all(self._terms.get(-q, 0j) == a.conjugate() for q, a in self._terms.items())

    def mean(self) -> complex:
        return self._terms.get(Fraction(0), 0j)

    # -- algebra -------------------------------------------------------------
    def __add__(self, other):
        if not isinstance(other, PontryaginSeries):
            other = PontryaginSeries({0: other})
        acc = dict(self._terms)
        for q, a in other._terms.items():
            acc[q] = acc.get(q, 0j) + a
        return PontryaginSeries(acc)

    __radd__ = __add__

    def __neg__(self):
        return PontryaginSeries({q: -a for q, a in self._terms.items()})

    def __sub__(self, other):
        if not isinstance(other, PontryaginSeries):
            other = PontryaginSeries({0: other})
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, c) -> "PontryaginSeries":
        c = complex(c)
        return PontryaginSeries({q: c * a for q, a in self._terms.items()})

    def __mul__(self, other):
        if not isinstance(other, PontryaginSeries):
            return self.scale(other)
        acc: dict[Fraction, complex] = {}
        for q1, a1 in self._terms.items():
            for q2, a2 in other._terms.items():
                q = q1 + q2
                acc[q] = acc.get(q, 0j) + a1 * a2
        return PontryaginSeries(acc)

    def __rmul__(self, other):
        return self.scale(other)

    def map_coefficients(self, fn) -> "PontryaginSeries":
        return PontryaginSeries({q: fn(q, a) for q, a in self._terms.items()})

    # -- evaluation ----------------------------------------------------------
    def summation_order(self) -> list[tuple[Fraction, complex]]:
        if self._order is None:
            self._order = sorted(self._terms.items(), key=lambda t: (-abs(t[1]), t[0]))
        return self._order

    def __call__(self, z):
        return eval_baseleaf(self, z)

    # -- interchange ---------------------------------------------------------
    def to_json(self) -> dict:
        return {
            "reality": self.is_real(),
            "terms": [{"num": q.numerator, "den": q.denominator, "re": a.real, "im": a.imag}
                      for q, a in self._terms.items()],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "PontryaginSeries":
        terms = []
        for t in obj.get("terms", []):
            den = int(t.get("den", 1))
            if den <= 0:
                raise ValueError("denominators must be positive")
            terms.append((Fraction(int(t["num"]), den), complex(t.get("re", 0.0), t.get("im", 0.0))))
        s = cls(terms)
        if obj.get("reality") and not s.is_real():
            raise ValueError("series is flagged real but a_{-q} != conj(a_q)")
        return s


def constant(c) -> PontryaginSeries:
    return PontryaginSeries({0: c})


def eval_baseleaf(f: PontryaginSeries, z):
    """sum a_q e^{iqz}, accumulated in descending |a_q| order."""
    z = np.asarray(z, dtype=complex)
    out = np.zeros(z.shape, dtype=complex)
    for q, a in f.summation_order():
        out = out + a * np.exp(1j * float(q) * z)
    return out if out.ndim else complex(out)


def eval_solenoid(f: PontryaginSeries, p: SolenoidPoint) -> complex:
    """F(a, z) = sum a_q e^{iqz} e^{2 pi i q a}, the phase taken from a mod den(q)."""
    top = p.chain.top
    total = 0j
    for q, a in f.summation_order():
        d = q.denominator
        if top % d:
            raise DepthError(f"frequency {q} needs level {d}, chain top is {top}")
        r = (q.numerator * p.a.mod(d)) % d
        total += a * cmath.exp(1j * float(q) * p.z) * cmath.exp(2j * math.pi * r / d)
    return total


def derivative_x(f: PontryaginSeries) -> PontryaginSeries:
    return PontryaginSeries({q: complex(0.0, float(q)) * a for q, a in f})


def coeff_l1(f: PontryaginSeries) -> float:
    return math.fsum(abs(a) for _, a in f)


def l2_norm(f: PontryaginSeries) -> float:
    return math.sqrt(math.fsum(abs(a) ** 2 for _, a in f))


def period_grid(f: PontryaginSeries, samples: int = 4096, per_wave: int = 16,
                cap: int = 1 << 16) -> np.ndarray:
    """Uniform grid on one full period [0, 2 pi lcm) of the series (at most ``cap`` points)."""
    L = f.lcm_den
    qmax = max((abs(float(q)) for q in f.frequencies), default=0.0)
    n = min(max(samples, int(math.ceil(per_wave * L * qmax)) + 1), max(cap, samples))
    return np.linspace(0.0, 2.0 * math.pi * L, n, endpoint=False)


def sup_norm_estimate(f: PontryaginSeries, samples: int = 4096) -> tuple[float, float]:
    """Certified bracket (lower, upper) for sup |f| on the real axis.

    ``upper`` is the coefficient l1 norm.  ``lower`` is the grid maximum over
    one lcm period, except that series with at most two terms have sup equal
    to the l1 norm (two characters can always be phase-aligned) and the
    bracket collapses.
    """
    upper = coeff_l1(f)
    if len(f) <= 2:
        return upper, upper
    lower = float(np.max(np.abs(eval_baseleaf(f, period_grid(f, samples)))))
    return min(lower, upper), upper


def _shift_phase(q: Fraction, N: int) -> complex:
    """e^{2 pi i q N}, exactly 1 when qN is an integer."""
    k = (q.numerator * N) % q.denominator
    return 1.0 + 0j if k == 0 else cmath.exp(2j * math.pi * k / q.denominator)


def shift(f: PontryaginSeries, N: int) -> PontryaginSeries:
    """x -> f(x + 2 pi N) as a series."""
    return PontryaginSeries({q: a * _shift_phase(q, N) for q, a in f})


def limit_periodic_modulus(f: PontryaginSeries, N: int, grid=None) -> tuple[float, float]:
    """Bracket for sup_x |f(x + 2 pi N) - f(x)|.

    Returns (grid value, term-wise bound sum |a_q| |e^{2 pi i q N} - 1|).
    """
    diff = PontryaginSeries({q: a * (_shift_phase(q, N) - 1.0) for q, a in f})
    upper = coeff_l1(diff)
    if grid is None:
        grid = period_grid(diff)
    lower = float(np.max(np.abs(eval_baseleaf(diff, grid)))) if len(diff) else 0.0
    return min(lower, upper), upper


def sobolev_l1_bound(f: PontryaginSeries, with_denominator: bool = False) -> float:
    """|a_0| + (pi/sqrt 3) ||f'||_2, optionally times the lcm of the denominators.

    Cauchy-Schwarz on the rescaled 2 pi-periodic function x -> f(n x) gives
    sum |a_q| <= |a_0| + (pi/sqrt 3) n ||f'||_2 when all q lie in (1/n)Z.  The
    factor n is essential: {1/2: 1} has l1 norm 1 but |a_0| + (pi/sqrt 3)
    ||f'||_2 = 0.9069.  ``with_denominator=False`` returns the bound without
    the factor, which only holds for integer frequencies.
    """
    n = f.lcm_den if with_denominator else 1
    return abs(f.mean()) + SQRT3_PI * n * l2_norm(derivative_x(f))


def periodic_approximants(f: PontryaginSeries, chain) -> list[PontryaginSeries]:
    from .renorm import mode_filter

    return [mode_filter(f, n) for n in chain.levels]
