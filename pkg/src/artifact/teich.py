"""Circle-solenoid diffeomorphisms, their extensions and Beltrami coefficients."""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy import integrate

from .leaf import PeriodicField, ProfiledSeries
from .renorm import ren_norm
from .series import (SQRT3_PI, PontryaginSeries, coeff_l1, derivative_x,
                     eval_baseleaf)
from .solenoid import ChainS

TWO_PI = 2.0 * math.pi
E = math.e
NV_RATIO_BOUND = (E - 1.0) / (E + 1.0)


class DenominatorError(ValueError):
    """The extension's z-derivative is not certified away from zero."""


@dataclass(frozen=True)
class SolenoidDiffeo:
    """f_0(x) = x + h(x) with h a real series fixing the unit."""

    h: PontryaginSeries
    chain: ChainS

    def __post_init__(self):
        if not self.h.is_real():
            raise ValueError("h must be real (a_{-q} = conj a_q)")
        if abs(complex(eval_baseleaf(self.h, 0.0))) > 1e-12:
            raise ValueError("h(0) must vanish so that the unit is fixed")
        for q in self.h.frequencies:
            if not self.chain.supports(q.denominator):
                raise ValueError(f"frequency {q} is not supported by the chain")
        if not self.orientation_preserving():
            raise ValueError("1 + h' must stay positive")

    @classmethod
    def identity(cls, chain: ChainS) -> "SolenoidDiffeo":
        return cls(PontryaginSeries(), chain)

    def orientation_preserving(self, samples: int = 4096) -> bool:
        dh = derivative_x(self.h)
        if coeff_l1(dh) < 1.0:
            return True
        from .series import period_grid
        return bool(np.min(1.0 + eval_baseleaf(dh, period_grid(dh, samples)).real) > 0)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return x + eval_baseleaf(self.h, x).real


def l_eval(x):
    """l(x) = sin x / x - (1 - cos x)/x, with a Taylor branch near 0."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < 1e-3
    xs = np.where(small, 1.0, x)
    direct = np.sin(xs) / xs - (1.0 - np.cos(xs)) / xs
    taylor = 1.0 - x / 2 - x ** 2 / 6 + x ** 3 / 24 + x ** 4 / 120 - x ** 5 / 720
    out = np.where(small, taylor, direct)
    return out if out.ndim else float(out)


def l_prime(x):
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < 1e-3
    xs = np.where(small, 1.0, x)
    direct = (xs * np.cos(xs) - np.sin(xs) - xs * np.sin(xs) + 1.0 - np.cos(xs)) / xs ** 2
    taylor = -0.5 - x / 3 + x ** 2 / 8 + x ** 3 / 30 - x ** 4 / 144
    out = np.where(small, taylor, direct)
    return out if out.ndim else float(out)


def ab_extension(f: SolenoidDiffeo, z):
    """Closed form w(z) = z + sum a_q e^{iqx} l(qy)."""
    z = np.asarray(z, dtype=complex)
    acc = np.zeros(z.shape, dtype=complex)
    # same order as eval_baseleaf, and l(0) = 1, so the y = 0 trace is bit-identical
    for q, a in f.h.summation_order():
        qf = float(q)
        acc = acc + a * np.exp(1j * qf * z.real) * l_eval(qf * z.imag)
    out = z + acc
    return out if out.ndim else complex(out)


def ab_integral(f0, x: float, y: float) -> complex:
    """(1/2) int_0^1 [(1+i) f0(x + t y) + (1-i) f0(x - t y)] dt by adaptive quadrature."""
    def re(t):
        return 0.5 * (f0(x + t * y) + f0(x - t * y))

    def im(t):
        return 0.5 * (f0(x + t * y) - f0(x - t * y))

    opts = dict(epsabs=1e-13, epsrel=1e-13, limit=200)
    return complex(integrate.quad(re, 0.0, 1.0, **opts)[0], integrate.quad(im, 0.0, 1.0, **opts)[0])


def _nv_parts(h: PontryaginSeries, x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    num = np.zeros(np.broadcast(x, y).shape, dtype=complex)
    den = np.zeros_like(num)
    for q, a in h.summation_order():
        qf = float(q)
        c = 1j * qf * a * np.exp(1j * qf * x)
        l, lp = l_eval(qf * y), l_prime(qf * y)
        num = num + c * (l + lp) / 2
        den = den + c * (l - lp) / 2
    return num, 1.0 + den


@dataclass(frozen=True)
class NVCoefficient:
    """Leafwise Beltrami coefficient of the AB extension of f."""

    f: SolenoidDiffeo
    denominator_margin: float
    bound: float
    d_c2: float

    def __call__(self, x, y):
        num, den = _nv_parts(self.f.h, x, y)
        return num / den

    def numerator(self, x, y):
        return _nv_parts(self.f.h, x, y)[0]

    def denominator(self, x, y):
        return _nv_parts(self.f.h, x, y)[1]


def cm_distance(f: SolenoidDiffeo, g: SolenoidDiffeo, m: int) -> float:
    """Renormalized norm of the m-th derivative of h_f - h_g along the chain."""
    if f.chain != g.chain:
        raise ValueError("diffeomorphisms live on different chains")
    d = f.h - g.h
    for _ in range(m):
        d = derivative_x(d)
    rep = ren_norm(d, f.chain)
    if rep.residual:
        raise ValueError("difference is not supported on the chain")
    return rep.total


def nv_bound(d_c2: float) -> float:
    c = SQRT3_PI * d_c2
    return c / (1.0 - c) if c < 1.0 else math.inf


def denominator_certificate(h: PontryaginSeries, y=None) -> float:
    """Lower bound for |1 + sum iq a_q e^{iqx}(l - l')/2| (global, or per y)."""
    if y is None:
        # |l - l'|/2 < 1 everywhere
        return 1.0 - math.fsum(abs(float(q) * a) for q, a in h)
    y = np.asarray(y, dtype=float)
    acc = np.zeros_like(y)
    for q, a in h:
        qf = float(q)
        acc = acc + abs(qf * a) * np.abs(l_eval(qf * y) - l_prime(qf * y)) / 2
    return 1.0 - acc


def nag_verjovsky_mu(f: SolenoidDiffeo, y_check=None) -> NVCoefficient:
    margin = denominator_certificate(f.h)
    if margin <= 0:
        ys = np.linspace(-50, 50, 2001) if y_check is None else np.asarray(y_check)
        margin = float(np.min(denominator_certificate(f.h, ys)))
        if margin <= 0:
            raise DenominatorError("denominator not certified away from 0; f is too far from id")
    d2 = cm_distance(SolenoidDiffeo.identity(f.chain), f, 2)
    return NVCoefficient(f, margin, nv_bound(d2), d2)


def d_id_phi(v: PontryaginSeries):
    """Linearization of the coefficient at the identity: the NV numerator."""
    if v.mean() != 0:
        raise ValueError("tangent series must have zero mean")

    def coefficient(x, y):
        return _nv_parts(v, x, y)[0]

    return coefficient


def almost_complex_J(v: PontryaginSeries) -> PontryaginSeries:
    """a_q -> -i sg(q) a_q on zero-mean series."""
    if v.mean() != 0:
        raise ValueError("J is defined on the zero-mean subspace")
    return PontryaginSeries({q: (-1j if q > 0 else 1j) * a for q, a in v})


def J_samples(v: np.ndarray) -> np.ndarray:
    """The same multiplier applied to uniform samples of a periodic function."""
    c = np.fft.fft(v)
    k = np.fft.fftfreq(v.size, 1.0 / v.size)
    return np.fft.ifft(-1j * np.sign(k) * c)


def mirror_extend(mu: ProfiledSeries) -> ProfiledSeries:
    """Extend a coefficient on the upper band y > 0 by z -> conj(mu(conj z)).

    In the plane coordinate w = e^{iz} this is the reflection across the unit
    circle, mu(w) -> conj(mu(1/conj w)) (w / conj w)^2.
    """
    lo, _ = mu.y_window()
    if lo < 0:
        raise ValueError("coefficient must live on the upper band y >= 0")
    return mu + mu.conj_reflect()


def mirror_extend_plane(mu):
    """Plane version: keep mu on the disk, reflect it to |w| > 1."""
    def extended(w):
        w = np.asarray(w, dtype=complex)
        inside = np.abs(w) <= 1.0
        out = np.zeros(w.shape, dtype=complex)
        out[inside] = mu(w[inside])
        wo = w[~inside]
        out[~inside] = np.conj(mu(1.0 / np.conj(wo))) * (wo / np.conj(wo)) ** 2
        return out

    return extended


def reflect_plane(mu):
    """Pullback of a coefficient by the reflection w -> 1/conj(w)."""
    def reflected(w):
        w = np.asarray(w, dtype=complex)
        return np.conj(mu(1.0 / np.conj(w))) * (w / np.conj(w)) ** 2

    return reflected


def _factorials(N):
    return [math.factorial(n) for n in range(1, N + 1)]


def _counterexample_parts(N, x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    num = np.zeros(np.broadcast(x, y).shape, dtype=complex)
    den = np.zeros_like(num)
    for a in _factorials(N):
        env = np.exp(-(y / a) ** 2) / (2 * a)
        c, s = np.cos(x / a), np.sin(x / a)
        num = num + (c - 2j * y / a * s) * env
        den = den + (c + 2j * y / a * s) * env
    return num / (2 * E), 1.0 + den / (2 * E)


def counterexample_sup_bound(N: int) -> float:
    s = math.fsum(1.0 / a for a in _factorials(N)) / (2 * E)
    return s / (1.0 - s)


def counterexample_mu(N: int) -> PeriodicField:
    """The N-term truncation of the limit-periodic coefficient with no renormalizable tail."""
    if N < 1:
        raise ValueError("truncation N must be >= 1")

    def mu(x, y):
        num, den = _counterexample_parts(N, x, y)
        return num / den

    facts = _factorials(N)
    ys = sorted({0.0} | {float(a * t) for a in facts for t in np.linspace(-2.0, 2.0, 9)})
    return PeriodicField(mu, facts[-1], tuple(ys), counterexample_sup_bound(N),
                         (-math.inf, math.inf), f"counterexample:N={N}")


@dataclass(frozen=True)
class CounterexampleSolution:
    N: int

    def __call__(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        acc = np.zeros(np.broadcast(x, y).shape)
        for a in _factorials(self.N):
            acc = acc + np.sin(x / a) * np.exp(-(y / a) ** 2)
        return x + 1j * y + acc / (2 * E)

    def dz(self, x, y):
        return _counterexample_parts(self.N, x, y)[1]

    def dzbar(self, x, y):
        return _counterexample_parts(self.N, x, y)[0]


def counterexample_solution(N: int) -> CounterexampleSolution:
    return CounterexampleSolution(N)


def _counterexample_shift(N: int, x, y):
    acc = 0.0
    for a in _factorials(N):
        acc = acc + np.sin(x / a) * np.exp(-(y / a) ** 2)
    return acc / (2 * E)


def counterexample_residual(N: int, x, y, h: float = 1e-30) -> np.ndarray:
    """|f_zbar - mu f_z| with f_x, f_y taken by complex-step differentiation of the explicit map."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    sx = np.imag(_counterexample_shift(N, x + 1j * h, y.astype(complex))) / h
    sy = np.imag(_counterexample_shift(N, x.astype(complex), y + 1j * h)) / h
    fx = 1.0 + sx
    fy = 1j + sy
    fz = (fx - 1j * fy) / 2
    fzbar = (fx + 1j * fy) / 2
    return np.abs(fzbar - counterexample_mu(N)(x, y) * fz)
