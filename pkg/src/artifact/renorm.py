"""Renormalization operators, renormalized norms and admission checks."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .leaf import PeriodicField, ProfiledSeries, sample_period
from .series import (PontryaginSeries, coeff_l1, eval_baseleaf, shift,
                     sup_norm_estimate)
from .solenoid import ChainS

TWO_PI = 2.0 * math.pi


def mode_filter(f, n: int):
    """I_n: keep exactly the modes with q*n an integer.

    Works on PontryaginSeries and ProfiledSeries (exact) and on PeriodicField
    (exact fiber average over the translates).
    """
    if n < 1:
        raise ValueError("filter level must be >= 1")
    if isinstance(f, PontryaginSeries):
        return PontryaginSeries({q: a for q, a in f if (q * n).denominator == 1})
    return f.filtered(n)


def fiber_average(f, m: int, n: int, x):
    """(n/m) sum_{k < m/n} f(x + 2 pi n k) for a 2 pi m periodic callable f."""
    if m % n:
        raise ValueError(f"{n} does not divide {m}")
    x = np.asarray(x, dtype=float)
    count = m // n
    acc = np.zeros(x.shape, dtype=complex)
    for k in range(count):
        acc = acc + f(x + TWO_PI * n * k)
    return acc / count


def fiber_average_samples(values: np.ndarray, m: int, n: int) -> np.ndarray:
    """Fiber average of samples on a uniform grid over [0, 2 pi m).

    The last axis must hold m*s samples (s per 2 pi); the result holds the
    n*s samples of I_n f on [0, 2 pi n), obtained by folding the grid.
    """
    if m % n:
        raise ValueError(f"{n} does not divide {m}")
    values = np.asarray(values)
    total = values.shape[-1]
    if total % m:
        raise ValueError("sample count must be a multiple of the period")
    s = total // m
    folded = values.reshape(values.shape[:-1] + (m // n, n * s))
    return folded.mean(axis=-2)


@dataclass
class RenNormReport:
    head: float
    terms: list[float]
    total: float
    depth: int
    tail_flag: str
    head_lower: float = 0.0
    terms_lower: list[float] = field(default_factory=list)
    residual: float = 0.0
    certified: bool = True

    def to_json(self) -> dict:
        return {"head": self.head, "terms": list(self.terms), "total": self.total,
                "tail_flag": self.tail_flag}


def tail_flag(terms, residual: float = 0.0) -> str:
    """Heuristic verdict on the tail of the renormalized series.

    diverging: the last three terms are non-decreasing and positive.
    converged: the series terminates (trailing zeros, no residual) or a
    geometric fit through the last five positive terms has ratio < 0.8.
    """
    t = [float(v) for v in terms]
    if not t:
        return "converged" if residual == 0 else "inconclusive"
    if t[-1] == 0 and residual == 0:
        return "converged"
    if len(t) >= 3 and 0 < t[-3] <= t[-2] <= t[-1]:
        return "diverging"
    tail = [v for v in t[-5:] if v > 0]
    if len(tail) >= 2:
        ratio = math.exp(np.polyfit(np.arange(len(tail)), np.log(tail), 1)[0])
        if ratio < 0.8 and residual == 0:
            return "converged"
    return "inconclusive"


def _series_sup(f: PontryaginSeries, samples: int):
    if len(f) == 0:
        return 0.0, 0.0
    return sup_norm_estimate(f, samples)


def ren_norm(mu, chain: ChainS, depth: int | None = None, samples: int = 2048,
             per_2pi: int = 16) -> RenNormReport:
    """Renormalized norm n_1 ||I_{n_1} mu|| + sum n_{j+1} ||I_{n_{j+1}} mu - I_{n_j} mu||.

    Series: band sups use the l1 upper bound (the reported value) with the
    grid lower bound recorded.  Periodic fields: bands come from exact fiber
    averages of grid samples and the sups are grid values (not certified).
    """
    if depth is not None:
        chain = chain.truncate(depth)
    levels = chain.levels
    if isinstance(mu, PontryaginSeries):
        filt = [mode_filter(mu, n) for n in levels]
        head_lo, head_up = _series_sup(filt[0], samples)
        terms, terms_lo = [], []
        for j in range(len(levels) - 1):
            lo, up = _series_sup(filt[j + 1] - filt[j], samples)
            terms.append(levels[j + 1] * up)
            terms_lo.append(levels[j + 1] * lo)
        residual = coeff_l1(mu - filt[-1])
        head = levels[0] * head_up
        return RenNormReport(head, terms, head + math.fsum(terms), len(levels),
                             tail_flag(terms, residual), levels[0] * head_lo, terms_lo, residual)
    if isinstance(mu, ProfiledSeries):
        filt = [mu.filtered(n) for n in levels]
        head_lo, head_up = filt[0].sup_bracket(samples)
        terms, terms_lo = [], []
        for j in range(len(levels) - 1):
            lo, up = (filt[j + 1] - filt[j]).sup_bracket(samples)
            terms.append(levels[j + 1] * up)
            terms_lo.append(levels[j + 1] * lo)
        residual = (mu - filt[-1]).l1()
        head = levels[0] * head_up
        return RenNormReport(head, terms, head + math.fsum(terms), len(levels),
                             tail_flag(terms, residual), levels[0] * head_lo, terms_lo, residual)
    if isinstance(mu, PeriodicField):
        m = mu.period
        if any(m % n and n % m for n in levels):
            raise ValueError(f"period {m} is not comparable with the chain {levels}")
        x, vals = sample_period(mu, m, per_2pi, mu.y_grid())
        prev = None
        sups = []
        for n in levels:
            if m % n == 0:
                cur = fiber_average_samples(vals, m, n)
                cur = np.tile(cur, (1,) * (cur.ndim - 1) + (m // n,))
            else:
                cur = vals
            sups.append(float(np.abs(cur if prev is None else cur - prev).max()))
            prev = cur
        head = levels[0] * sups[0]
        terms = [levels[j + 1] * sups[j + 1] for j in range(len(levels) - 1)]
        return RenNormReport(head, terms, head + math.fsum(terms), len(levels),
                             tail_flag(terms), head, list(terms), 0.0, certified=False)
    raise TypeError(f"unsupported coefficient type {type(mu).__name__}")


@dataclass
class SubmultiplicativityReport:
    lhs: float
    rhs: float
    lhs_lower: float
    rhs_lower: float

    @property
    def holds(self) -> bool:
        return self.lhs <= self.rhs * (1 + 1e-12)

    @property
    def violated(self) -> bool:
        """Certain violation: even the lower bracket of ||fg|| beats the upper product."""
        return self.lhs_lower > self.rhs * (1 + 1e-12)


def submultiplicativity_check(f: PontryaginSeries, g: PontryaginSeries, chain: ChainS,
                              samples: int = 1024) -> SubmultiplicativityReport:
    """Both sides of ||fg||_P <= ||f||_P ||g||_P along a p-adic chain."""
    if chain.kind != "p-adic":
        raise ValueError("the algebra norm is defined along a p-adic chain")
    fg = f * g
    reports = [ren_norm(s, chain, samples=samples) for s in (fg, f, g)]
    for r in reports:
        if r.residual:
            raise ValueError("series reach beyond the chain depth")
    prod, rf, rg = reports
    lower = lambda r: r.head_lower + math.fsum(r.terms_lower)
    return SubmultiplicativityReport(prod.total, rf.total * rg.total, lower(prod),
                                     lower(rf) * lower(rg))


def vertical_modulus(mu: PontryaginSeries, chain: ChainS) -> list[float]:
    """Upper bounds coeff_l1(mu - I_{n_j} mu) for every chain level."""
    return [coeff_l1(mu - mode_filter(mu, n)) for n in chain.levels]


@dataclass
class VerticalDerivativeReport:
    levels: list[int]
    values: list[float]
    lower: list[float]
    bound: list[float]

    @property
    def dominated(self) -> bool:
        return all(v <= b * (1 + 1e-12) + 1e-15 for v, b in zip(self.values, self.bound))


def vertical_derivative_along(mu: PontryaginSeries, chain: ChainS,
                              samples: int = 1024) -> VerticalDerivativeReport:
    """n_j ||mu(x + 2 pi n_j) - mu(x)|| along the chain, with the comparison bound.

    The bound at level n_j is 2 sum_{i >= j} t_i from the renormalized series,
    plus 2 n_j times the l1 mass beyond the top level (zero for series
    supported on the chain).
    """
    rep = ren_norm(mu, chain, samples=samples)
    values, lower, bound = [], [], []
    for j, n in enumerate(chain.levels):
        diff = shift(mu, n) - mu
        lo, up = _series_sup(diff, samples)
        values.append(n * up)
        lower.append(n * lo)
        bound.append(2.0 * (math.fsum(rep.terms[j:]) + n * rep.residual))
    return VerticalDerivativeReport(list(chain.levels), values, lower, bound)


def padic_valuation(x: int, p: int) -> int | None:
    if x == 0:
        return None
    v = 0
    while x % p == 0:
        x //= p
        v += 1
    return v


def padic_norm(x: int, p: int, depth: int) -> Fraction:
    """|x|_p for x taken modulo p^depth (residue 0 counts as the zero element)."""
    x %= p ** depth
    v = padic_valuation(x, p)
    return Fraction(0) if v is None else Fraction(1, p ** v)


def padic_norm_derivative(x: int, p: int, depth: int) -> list[Fraction]:
    """Difference quotients (|x + p^k|_p - |x|_p)/|p^k|_p for k < depth - 1.

    Along the transversal direction these settle at 1 for x = 0 and at 0 for
    any x that is nonzero at a coarser level.
    """
    base = padic_norm(x, p, depth)
    return [(padic_norm(x + p ** k, p, depth) - base) / padic_norm(p ** k, p, depth)
            for k in range(depth - 1)]


@dataclass
class AdmissionReport:
    admitted: bool
    verdict: str
    sup_lower: float
    sup_upper: float
    ren: RenNormReport | None
    warnings: list[str] = field(default_factory=list)
    real: bool | None = None

    def to_json(self) -> dict:
        return {"admitted": self.admitted, "verdict": self.verdict,
                "sup": [self.sup_lower, self.sup_upper],
                "ren": self.ren.to_json() if self.ren else None,
                "real": self.real, "warnings": list(self.warnings)}


def sup_bracket(mu, samples: int = 2048) -> tuple[float, float]:
    if isinstance(mu, PontryaginSeries):
        return _series_sup(mu, samples)
    if isinstance(mu, ProfiledSeries):
        return mu.sup_bracket(samples)
    if isinstance(mu, PeriodicField):
        x, vals = sample_period(mu, mu.period, 16, mu.y_grid())
        lower = float(np.abs(vals).max())
        upper = mu.sup_upper if mu.sup_upper is not None else math.inf
        return lower, max(lower, upper)
    raise TypeError(f"unsupported coefficient type {type(mu).__name__}")


def admit_beltrami(mu, chain: ChainS, samples: int = 2048) -> AdmissionReport:
    """Admission of a leafwise coefficient as an adelic Beltrami differential."""
    lo, up = sup_bracket(mu, samples)
    warnings = []
    real = mu.is_real() if isinstance(mu, PontryaginSeries) else None
    if lo >= 1.0:
        return AdmissionReport(False, f"rejected: sup norm {lo:.6g} >= 1", lo, up, None, warnings, real)
    if up >= 1.0:
        warnings.append(f"sup bracket [{lo:.6g}, {up:.6g}] straddles 1")
    rep = ren_norm(mu, chain, samples=samples)
    if rep.tail_flag == "diverging":
        return AdmissionReport(False, "rejected: vertical-continuous yet non-renormalizable",
                               lo, up, rep, warnings, real)
    if rep.tail_flag == "inconclusive":
        warnings.append("renormalized series tail is inconclusive at this depth")
    return AdmissionReport(True, "admitted", lo, up, rep, warnings, real)
