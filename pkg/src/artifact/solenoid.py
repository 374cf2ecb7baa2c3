"""Points of the p-adic / adelic solenoid at a finite truncation depth.

A point is stored as exp(a, z) with a a truncated profinite integer and z a
leaf coordinate.  The relation (a + k, z - 2*pi*k) ~ (a, z) is used to keep
Re(z) in [0, 2*pi).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

TWO_PI = 2.0 * math.pi


class DepthError(ValueError):
    """Operands live on different chains or truncation depths."""


class CuspError(ValueError):
    """The requested fiber sits over a cusp (0 or infinity)."""


class NotSolenoidalError(ValueError):
    """No chain rational degree explains the samples at this depth."""


@dataclass(frozen=True)
class ChainS:
    levels: tuple[int, ...]
    kind: str = "custom"
    base: int | None = None

    def __post_init__(self):
        lv = tuple(int(n) for n in self.levels)
        object.__setattr__(self, "levels", lv)
        if not lv:
            raise ValueError("a chain needs at least one level")
        if lv[0] < 1:
            raise ValueError("levels must be positive")
        for a, b in zip(lv, lv[1:]):
            if b <= a or b % a:
                raise ValueError(f"levels must strictly increase by divisibility: {a}, {b}")
        if self.kind == "p-adic":
            if self.base is None or self.base < 2:
                raise ValueError("p-adic chain needs a base p >= 2")
            if lv != tuple(self.base ** j for j in range(len(lv))):
                raise ValueError("p-adic chain levels must be p^0, p^1, ...")
        elif self.kind == "factorial":
            if lv != tuple(math.factorial(j + 1) for j in range(len(lv))):
                raise ValueError("factorial chain levels must be 1!, 2!, ...")
        elif self.kind != "custom":
            raise ValueError(f"unknown chain kind {self.kind!r}")

    @classmethod
    def padic(cls, p: int, depth: int) -> "ChainS":
        return cls(tuple(p ** j for j in range(depth)), "p-adic", p)

    @classmethod
    def factorial(cls, depth: int) -> "ChainS":
        # 1! and 2! are 1 and 2, so the chain is strictly increasing from the start
        return cls(tuple(math.factorial(j + 1) for j in range(depth)), "factorial")

    @classmethod
    def custom(cls, levels: Sequence[int]) -> "ChainS":
        return cls(tuple(levels), "custom")

    @property
    def depth(self) -> int:
        return len(self.levels)

    @property
    def top(self) -> int:
        return self.levels[-1]

    def index(self, n: int) -> int:
        try:
            return self.levels.index(n)
        except ValueError:
            raise DepthError(f"level {n} is not in the chain {self.levels}") from None

    def truncate(self, depth: int) -> "ChainS":
        if not 1 <= depth <= self.depth:
            raise DepthError(f"depth {depth} outside 1..{self.depth}")
        return ChainS(self.levels[:depth], self.kind, self.base)

    def supports(self, den: int) -> bool:
        """True when den divides the top level."""
        return self.top % den == 0

    def to_json(self) -> dict:
        return {"kind": self.kind, "levels": list(self.levels)}

    @classmethod
    def from_json(cls, obj: dict) -> "ChainS":
        kind = obj.get("kind", "custom")
        levels = tuple(obj["levels"])
        base = None
        if kind == "p-adic":
            base = levels[1] if len(levels) > 1 else obj.get("base")
        return cls(levels, kind, base)


@dataclass(frozen=True)
class ProfiniteInt:
    """Truncated element of the profinite completion: residues r_j mod n_j."""

    residues: tuple[int, ...]
    chain: ChainS

    def __post_init__(self):
        r = tuple(int(v) for v in self.residues)
        object.__setattr__(self, "residues", r)
        if len(r) != self.chain.depth:
            raise DepthError("one residue per chain level is required")
        for v, n in zip(r, self.chain.levels):
            if not 0 <= v < n:
                raise ValueError(f"residue {v} not in [0, {n})")
        for j in range(len(r) - 1):
            if r[j + 1] % self.chain.levels[j] != r[j]:
                raise ValueError("residues are not compatible along the chain")

    @classmethod
    def from_int(cls, a: int, chain: ChainS) -> "ProfiniteInt":
        return cls(tuple(a % n for n in chain.levels), chain)

    def mod(self, n: int) -> int:
        """Residue modulo any divisor of the top level."""
        if self.chain.top % n:
            raise DepthError(f"{n} does not divide the top level {self.chain.top}")
        return self.residues[-1] % n

    def __add__(self, other):
        if isinstance(other, int):
            other = ProfiniteInt.from_int(other, self.chain)
        if other.chain != self.chain:
            raise DepthError("chain mismatch")
        return ProfiniteInt.from_int(self.residues[-1] + other.residues[-1], self.chain)

    def __neg__(self):
        return ProfiniteInt.from_int(-self.residues[-1], self.chain)

    def is_zero(self) -> bool:
        return self.residues[-1] == 0


@dataclass(frozen=True)
class SolenoidPoint:
    a: ProfiniteInt
    z: complex

    @property
    def chain(self) -> ChainS:
        return self.a.chain

    def to_json(self) -> dict:
        return {"residues": list(self.a.residues), "z": [self.z.real, self.z.imag]}

    @classmethod
    def from_json(cls, obj: dict, chain: ChainS) -> "SolenoidPoint":
        re, im = obj["z"]
        return exp_point(ProfiniteInt(tuple(obj["residues"]), chain), complex(re, im))


def canonicalize(a: ProfiniteInt, z: complex) -> SolenoidPoint:
    z = complex(z)
    k = math.floor(z.real / TWO_PI)
    x = z.real - TWO_PI * k
    if x < 0:  # the quotient underflowed for a tiny negative Re z
        x += TWO_PI
        k -= 1
    if x >= TWO_PI:  # rounding at the upper edge
        x -= TWO_PI
        k += 1
    if x < 0:  # |Re z| below the spacing of floats near 2 pi
        x = 0.0
    return SolenoidPoint(a + k, complex(x, z.imag))


def exp_point(a, z: complex, chain: ChainS | None = None) -> SolenoidPoint:
    """exp(a, z); ``a`` may be a ProfiniteInt or an int together with ``chain``."""
    if not isinstance(a, ProfiniteInt):
        if chain is None:
            raise DepthError("an integer coordinate needs an explicit chain")
        a = ProfiniteInt.from_int(int(a), chain)
    elif chain is not None and a.chain != chain:
        raise DepthError("profinite coordinate lives on a different chain")
    return canonicalize(a, z)


def identity(chain: ChainS) -> SolenoidPoint:
    return exp_point(0, 0.0, chain)


def project(p: SolenoidPoint, n: int) -> complex:
    """Level-n projection e^{2 pi i (a mod n)/n} e^{i z / n}."""
    p.chain.index(n)
    r = p.a.mod(n)
    return complex(np.exp(2j * math.pi * r / n) * np.exp(1j * p.z / n))


def group_mul(p: SolenoidPoint, q: SolenoidPoint) -> SolenoidPoint:
    if p.chain != q.chain:
        raise DepthError("points live on different chains")
    return canonicalize(p.a + q.a, p.z + q.z)


def group_inv(p: SolenoidPoint) -> SolenoidPoint:
    return canonicalize(-p.a, -p.z)


def fiber_samples(x: complex, n: int, chain: ChainS) -> list[SolenoidPoint]:
    """The n_J/n points over x for the level-n projection, at the chain's depth."""
    x = complex(x)
    if x == 0 or not np.isfinite(x):
        raise CuspError("fibers over the cusps 0 and infinity are single points")
    chain.index(n)
    z0 = -1j * n * np.log(x)
    count = chain.top // n
    return [exp_point(0, z0 + TWO_PI * n * k, chain) for k in range(count)]


@dataclass(frozen=True)
class DegreeDecomposition:
    degree: Fraction
    x: np.ndarray
    remainder: np.ndarray
    drift: float

    @property
    def depth_level(self) -> int:
        return self.degree.denominator


def extract_degree(x: np.ndarray, values: np.ndarray, chain: ChainS,
                   tol: float = 1e-6) -> DegreeDecomposition:
    """Split samples of a leaf map into q*x + h(x) with q a chain rational.

    Candidates are the chain rationals nearest the least-squares slope.  For
    each one the drift sup|h(x + 2 pi n_J) - h(x)| of the remainder is
    measured; a bounded limit-periodic remainder has (almost) no drift over a
    full top-level period, a wrong slope leaves a ramp.  The candidate with
    the smallest drift wins, ties going to the smaller denominator.

    Parameters
    ----------
    x : uniformly spaced real sample positions
    values : samples of the leaf map (real part is used for the slope)
    chain : candidate denominators are the chain levels
    tol : accepted drift, relative to 1 + sup|h|
    """
    x = np.asarray(x, dtype=float)
    values = np.asarray(values)
    dx = x[1] - x[0]
    if not np.allclose(np.diff(x), dx, rtol=1e-9, atol=1e-12):
        raise ValueError("samples must be uniformly spaced")
    period = TWO_PI * chain.top
    if x[-1] - x[0] < 2 * period:
        raise ValueError("window must cover at least two top-level periods")
    slope = np.polyfit(x, values.real, 1)[0]
    candidates = sorted({Fraction(round(slope * n), n) for n in chain.levels},
                        key=lambda q: (q.denominator, q))
    shift = period / dx
    best = None
    for q in candidates:
        h = values - float(q) * x
        if abs(shift - round(shift)) < 1e-9:
            s = int(round(shift))
            drift = float(np.max(np.abs(h[s:] - h[:-s])))
        else:
            hs_re = np.interp(x[x <= x[-1] - period] + period, x, h.real)
            hs_im = np.interp(x[x <= x[-1] - period] + period, x, h.imag)
            hs = hs_re + 1j * hs_im
            drift = float(np.max(np.abs(hs - h[: hs.size])))
        if best is None or drift < best[1] - 1e-12:
            best = (q, drift, h)
    q, drift, h = best
    if drift > tol * (1.0 + float(np.max(np.abs(h - h.mean())))):
        raise NotSolenoidalError(
            f"best candidate {q} leaves drift {drift:.3e} over one top period")
    return DegreeDecomposition(q, x, h, drift)

