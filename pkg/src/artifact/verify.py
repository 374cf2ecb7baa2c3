"""Deterministic self-check suites behind ``artifact verify``.

Each suite returns a list of Check records.  These are quick sanity runs of
the same properties the test suite covers in depth; seeds are fixed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .series import PontryaginSeries, coeff_l1, constant, eval_baseleaf
from .solenoid import ChainS


@dataclass
class Check:
    name: str
    passed: bool
    detail: dict

    def to_json(self) -> dict:
        return {"name": self.name, "passed": self.passed, "detail": self.detail}


def random_chain_series(rng, chain: ChainS, terms: int = 6, real: bool = False) -> PontryaginSeries:
    out = {}
    for _ in range(terms):
        den = int(rng.choice(chain.levels))
        q = Fraction(int(rng.integers(-3 * den, 3 * den + 1)), den)
        c = complex(rng.normal(), rng.normal()) * 0.5
        out[q] = out.get(q, 0) + c
        if real:
            out[-q] = out.get(-q, 0) + c.conjugate()
    s = PontryaginSeries(out)
    if real:
        s = s.map_coefficients(lambda q, a: a.real if q == 0 else a)
    return s


def suite_filter(seed: int = 0, count: int = 200) -> list[Check]:
    from .renorm import fiber_average, mode_filter
    rng = np.random.default_rng(seed)
    bad = {"idempotent": 0, "gcd": 0, "linear": 0, "contraction": 0, "fiber": 0}
    for _ in range(count):
        p = int(rng.choice([2, 3]))
        chain = ChainS.padic(p, 5)
        f = random_chain_series(rng, chain)
        g = random_chain_series(rng, chain)
        m, n = (int(v) for v in rng.choice(chain.levels, 2))
        fm = mode_filter(f, m)
        bad["idempotent"] += mode_filter(fm, m) != fm
        bad["gcd"] += mode_filter(fm, n) != mode_filter(f, math.gcd(m, n))
        lhs = mode_filter(f + g.scale(2.0), m)
        rhs = fm + mode_filter(g, m).scale(2.0)
        x = np.linspace(0.0, 2 * math.pi * chain.top, 64)
        bad["linear"] += float(np.max(np.abs(eval_baseleaf(lhs - rhs, x)))) > 1e-12
        bad["contraction"] += coeff_l1(fm) > coeff_l1(f) + 1e-12
        top = chain.top
        f = mode_filter(f, top)
        x = np.linspace(0.0, 2 * math.pi * top, 32)
        diff = fiber_average(f, top, m, x) - eval_baseleaf(mode_filter(f, m), x)
        bad["fiber"] += float(np.max(np.abs(diff))) > 1e-12
    return [Check(f"filter.{k}", v == 0, {"violations": int(v), "samples": count}) for k, v in bad.items()]


def suite_norm(seed: int = 0, count: int = 200) -> list[Check]:
    from .renorm import mode_filter, ren_norm
    rep = ren_norm(constant(3), ChainS.padic(2, 6))
    checks = [Check("norm.constant", abs(rep.total - 3) < 1e-12, {"total": rep.total})]
    rng = np.random.default_rng(seed)
    lower_bad = density_bad = 0
    for _ in range(count):
        chain = ChainS.padic(int(rng.choice([2, 3])), 5)
        f = random_chain_series(rng, chain)
        r = ren_norm(f, chain)
        lower_bad += r.head_lower > r.total + 1e-12
        i = int(rng.integers(0, chain.depth))
        tail = ren_norm(f - mode_filter(f, chain.levels[i]), chain)
        density_bad += abs(tail.total - math.fsum(r.terms[i:])) > 1e-9 * max(1.0, r.total)
    checks.append(Check("norm.sup_below_ren", lower_bad == 0, {"violations": lower_bad}))
    checks.append(Check("norm.density_identity", density_bad == 0, {"violations": density_bad}))
    return checks


def suite_solver(N: int = 512, R: float = 4.0) -> list[Check]:
    from .plane import GridField, solve_normal
    chi = GridField.from_function(lambda w: 0.3 * (np.abs(w) < 1), R, N, support_radius=1.0,
                                  supersample=4)
    f = solve_normal(chi)
    zero = solve_normal(GridField.zeros(R, N))
    ident = float(np.max(np.abs(zero.grid_values() - chi.centers())))
    return [Check("solver.residual", f.residual <= 1e-3, {"residual": f.residual, "k": 0.3}),
            Check("solver.zero_is_identity", ident <= 1e-10, {"error": ident})]


def suite_counterexample(N: int = 6) -> list[Check]:
    from .renorm import ren_norm, sup_bracket
    from .teich import counterexample_mu, counterexample_residual
    rng = np.random.default_rng(0)
    mu = counterexample_mu(N)
    top = math.factorial(N)
    x = rng.uniform(0.0, 2 * math.pi * top, 10_000)
    y = rng.uniform(-2.0 * top, 2.0 * top, 10_000)
    res = float(np.max(counterexample_residual(N, x, y)))
    lo, up = sup_bracket(mu)
    ren = ren_norm(mu, ChainS.factorial(N))
    floor = min(ren.terms) if ren.terms else 0.0
    limit = (math.e - 1) / (math.e + 1)
    return [Check("counterexample.residual", res <= 1e-10, {"residual": res}),
            Check("counterexample.sup", lo < limit, {"grid_sup": lo, "analytic_bound": up, "limit": limit}),
            Check("counterexample.ren_terms_floor", floor > 0,
                  {"terms": ren.terms, "head": ren.head, "tail_flag": ren.tail_flag})]


def suite_teich() -> list[Check]:
    from .teich import (SolenoidDiffeo, ab_extension, almost_complex_J, l_eval, l_prime,
                        nag_verjovsky_mu)
    chain = ChainS.padic(2, 4)
    x = np.linspace(-200.0, 200.0, 100_001)
    l, lp = l_eval(x), l_prime(x)
    kb = float(max(np.max(np.abs(l + lp)), np.max(np.abs(l - lp))) / 2)
    h = PontryaginSeries({Fraction(1, 2): 0.05, Fraction(-1, 2): 0.05, 0: -0.1})
    f = SolenoidDiffeo(h, chain)
    xs = np.linspace(0, 4 * math.pi, 33)
    trace = float(np.max(np.abs(ab_extension(f, xs.astype(complex)) - f(xs))))
    v = PontryaginSeries({Fraction(1, 4): 1 + 2j, Fraction(-1, 4): 1 - 2j, 3: 0.5j, -3: -0.5j})
    jj = almost_complex_J(almost_complex_J(v)) == v.scale(-1)
    nv0 = nag_verjovsky_mu(SolenoidDiffeo.identity(chain))
    nv0_val = float(np.max(np.abs(nv0(xs, xs))))
    return [Check("teich.kernel_bound", kb < 1, {"max_half": kb}),
            Check("teich.ab_trace", trace == 0.0, {"error": trace}),
            Check("teich.J_squared", bool(jj), {}),
            Check("teich.nv_identity", nv0_val == 0.0, {"sup": nv0_val})]


def geometric_padic_series(rng, p: int, bands: int, decay: float = 2.0) -> PontryaginSeries:
    """One primitive random mode per level p^j with |c_j| ~ p^(-decay j); j < bands."""
    terms = {}
    for j in range(bands):
        n = p ** j
        k = int(rng.integers(1, n + 1))
        while j and k % p == 0:
            k = int(rng.integers(1, n + 1))
        q = Fraction(k, n) if j else Fraction(int(rng.integers(-2, 3)))
        c = complex(rng.normal(), rng.normal())
        terms[q] = terms.get(q, 0) + 0.3 * c / abs(c) * p ** (-decay * j)
    return PontryaginSeries(terms)


def suite_vertical(seed: int = 0, count: int = 50) -> list[Check]:
    from .renorm import vertical_derivative_along
    rng = np.random.default_rng(seed)
    bad = decay_bad = 0
    for _ in range(count):
        p = int(rng.choice([2, 3]))
        rep = vertical_derivative_along(geometric_padic_series(rng, p, 10), ChainS.padic(p, 6))
        bad += not rep.dominated
        decay_bad += not rep.values[-1] < 0.1 * rep.values[0]
    return [Check("vertical.dominated", bad == 0, {"violations": bad, "samples": count}),
            Check("vertical.decay", decay_bad == 0, {"violations": decay_bad, "samples": count})]


SUITES = {
    "filter": suite_filter,
    "norm": suite_norm,
    "solver": suite_solver,
    "counterexample": suite_counterexample,
    "teich": suite_teich,
    "vertical": suite_vertical,
}
