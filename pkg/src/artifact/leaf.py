"""Leafwise coefficients: functions of z = x + iy on the baseleaf.

Two representations are used for Beltrami data on the solenoid:

* ``ProfiledSeries`` -- a finite sum c_q * profile_q(y) * e^{iqx}; mode
  filters act exactly on the frequency labels.
* ``PeriodicField`` -- a black-box callable that is exactly 2 pi m periodic
  in x; mode filters are exact fiber averages over the m/n translates.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .series import PontryaginSeries, as_frequency

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class Profile:
    """Named y-profile with peak value 1.

    ``bump``: exp(1 - 1/(1 - s^2)) on |s| < 1, s = (y - center)/width.
    ``gaussian``: exp(-s^2), treated as zero for |s| > 8.
    ``flat``: 1 everywhere (no compact support).
    """

    kind: str = "bump"
    center: float = 0.0
    width: float = 1.0

    def __post_init__(self):
        if self.kind not in ("bump", "gaussian", "flat"):
            raise ValueError(f"unknown profile kind {self.kind!r}")
        if self.width <= 0:
            raise ValueError("profile width must be positive")

    def __call__(self, y):
        y = np.asarray(y, dtype=float)
        s = (y - self.center) / self.width
        if self.kind == "flat":
            return np.ones_like(s)
        if self.kind == "gaussian":
            return np.where(np.abs(s) <= 8.0, np.exp(-s * s), 0.0)
        out = np.zeros_like(s)
        inside = np.abs(s) < 1.0
        si = s[inside]
        out[inside] = np.exp(1.0 - 1.0 / (1.0 - si * si))
        return out

    def support(self) -> tuple[float, float]:
        if self.kind == "flat":
            return (-math.inf, math.inf)
        r = self.width if self.kind == "bump" else 8.0 * self.width
        return (self.center - r, self.center + r)

    def reflect(self) -> "Profile":
        return Profile(self.kind, -self.center, self.width)

    def to_json(self) -> dict:
        return {"kind": self.kind, "center": self.center, "width": self.width}

    @classmethod
    def from_json(cls, obj: dict) -> "Profile":
        return cls(obj.get("kind", "bump"), float(obj.get("center", 0.0)), float(obj.get("width", 1.0)))


@dataclass(frozen=True)
class ProfiledSeries:
    """sum_k c_k * profile_k(y) * exp(i q_k x)."""

    terms: tuple[tuple[Fraction, complex, Profile], ...] = ()

    def __post_init__(self):
        clean = tuple((as_frequency(q), complex(c), p) for q, c, p in self.terms if complex(c) != 0)
        object.__setattr__(self, "terms", clean)

    @classmethod
    def from_series(cls, s: PontryaginSeries, profile: Profile) -> "ProfiledSeries":
        return cls(tuple((q, a, profile) for q, a in s))

    def __call__(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        out = np.zeros(np.broadcast(x, y).shape, dtype=complex)
        for q, c, p in sorted(self.terms, key=lambda t: (-abs(t[1]), t[0])):
            out = out + c * p(y) * np.exp(1j * float(q) * x)
        return out

    def filtered(self, n: int) -> "ProfiledSeries":
        return ProfiledSeries(tuple(t for t in self.terms if (t[0] * n).denominator == 1))

    def __sub__(self, other: "ProfiledSeries") -> "ProfiledSeries":
        # exact set difference when other is a filter of self, general otherwise
        mine = list(self.terms)
        rest = []
        for t in other.terms:
            if t in mine:
                mine.remove(t)
            else:
                rest.append((t[0], -t[1], t[2]))
        return ProfiledSeries(tuple(mine) + tuple(rest))

    def __add__(self, other: "ProfiledSeries") -> "ProfiledSeries":
        return ProfiledSeries(self.terms + other.terms)

    def scale(self, c) -> "ProfiledSeries":
        return ProfiledSeries(tuple((q, complex(c) * a, p) for q, a, p in self.terms))

    def __len__(self):
        return len(self.terms)

    @property
    def period(self) -> int:
        return math.lcm(1, *(q.denominator for q, _, _ in self.terms))

    def l1(self) -> float:
        return math.fsum(abs(c) for _, c, _ in self.terms)

    def y_window(self) -> tuple[float, float]:
        if not self.terms:
            return (0.0, 0.0)
        lo = min(p.support()[0] for _, _, p in self.terms)
        hi = max(p.support()[1] for _, _, p in self.terms)
        return (lo, hi)

    def y_grid(self, count: int = 41) -> np.ndarray:
        lo, hi = self.y_window()
        if not np.isfinite(lo) or not np.isfinite(hi):
            lo, hi = -4.0, 4.0
        return np.linspace(lo, hi, count)

    def sup_bracket(self, samples: int = 2048, ny: int = 41) -> tuple[float, float]:
        upper = self.l1()
        if len(self.terms) <= 1:
            return upper, upper
        x = np.linspace(0.0, TWO_PI * self.period, max(samples, 16 * self.period), endpoint=False)
        y = self.y_grid(ny)
        vals = self(x[None, :], y[:, None])
        return float(min(np.abs(vals).max(), upper)), upper

    def conj_reflect(self) -> "ProfiledSeries":
        """z -> conj(mu(conj z)): frequencies negated, coefficients conjugated, y reflected."""
        return ProfiledSeries(tuple((-q, c.conjugate(), p.reflect()) for q, c, p in self.terms))

    def to_json(self) -> dict:
        return {"terms": [{"num": q.numerator, "den": q.denominator, "re": c.real, "im": c.imag,
                           "profile": p.to_json()} for q, c, p in self.terms]}

    @classmethod
    def from_json(cls, obj: dict) -> "ProfiledSeries":
        terms = []
        for t in obj["terms"]:
            prof = Profile.from_json(t["profile"]) if "profile" in t else Profile("flat")
            terms.append((Fraction(int(t["num"]), int(t.get("den", 1))),
                          complex(t.get("re", 0.0), t.get("im", 0.0)), prof))
        return cls(tuple(terms))


@dataclass(frozen=True)
class PeriodicField:
    """A callable mu(x, y) that is exactly 2 pi * period periodic in x.

    ``sup_upper`` is an analytic bound on sup |mu| when one is known;
    ``y_samples`` is the y-grid used for grid sups.
    """

    fn: Callable = field(compare=False)
    period: int = 1
    y_samples: tuple[float, ...] = (0.0,)
    sup_upper: float | None = None
    y_support: tuple[float, float] = (-math.inf, math.inf)
    name: str = ""

    def __call__(self, x, y):
        return self.fn(np.asarray(x, dtype=float), np.asarray(y, dtype=float))

    def filtered(self, n: int) -> "PeriodicField":
        from .renorm import fiber_average

        m = self.period
        if n % m == 0:
            return self
        if m % n:
            raise ValueError(f"level {n} does not divide the period {m}")
        fn = self.fn

        def averaged(x, y):
            return fiber_average(lambda xx: fn(xx, y), m, n, x)

        return PeriodicField(averaged, n, self.y_samples, self.sup_upper, self.y_support,
                             f"I_{n}({self.name})")

    def y_grid(self, count: int = 0) -> np.ndarray:
        return np.asarray(self.y_samples, dtype=float)

    def y_window(self) -> tuple[float, float]:
        return self.y_support


LeafCoefficient = ProfiledSeries | PeriodicField


def sample_period(mu, m: int, per_2pi: int, y: Sequence[float]) -> tuple[np.ndarray, np.ndarray]:
    """Samples of mu on [0, 2 pi m) x y, ``per_2pi`` points per 2 pi."""
    x = np.arange(m * per_2pi) * (TWO_PI / per_2pi)
    y = np.asarray(y, dtype=float)
    return x, mu(x[None, :], y[:, None])
