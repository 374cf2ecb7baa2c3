"""Tower of planar solutions approximating a solenoidal quasiconformal map.

Level n works in the coordinate w = e^{iz/n}.  The filtered leaf
coefficient I_n(mu) is pushed to the level plane (with the phase of a
(-1,1)-differential), solved there, normalized to fix 0, 1 and infinity,
and lifted back to a leaf map g_n(z) = z - i n log(f_n(w)/w).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .leaf import PeriodicField, ProfiledSeries
from .plane import (GridField, PlanarQCMap, WindowError, normalize_fix01inf,
                    solve_normal)
from .renorm import AdmissionReport, admit_beltrami, mode_filter, sup_bracket
from .solenoid import ChainS, SolenoidPoint, canonicalize, exp_point, group_inv, group_mul

TWO_PI = 2.0 * math.pi


class AdmissionError(ValueError):
    def __init__(self, report: AdmissionReport):
        super().__init__(report.verdict)
        self.report = report


class BranchError(RuntimeError):
    pass


@dataclass
class AdelicBeltrami:
    coefficient: ProfiledSeries | PeriodicField
    chain: ChainS
    y_window: tuple[float, float] | None = None
    admission: AdmissionReport | None = None

    def __post_init__(self):
        if self.admission is None:
            self.admission = admit_beltrami(self.coefficient, self.chain)
        if not self.admission.admitted:
            raise AdmissionError(self.admission)
        if self.y_window is None:
            self.y_window = tuple(self.coefficient.y_window())
        lo, hi = self.y_window
        if not (np.isfinite(lo) and np.isfinite(hi)):
            raise ValueError("the coefficient must be supported in a bounded y-band")

    def filtered(self, n: int):
        return mode_filter(self.coefficient, n)

    def same_filter(self, n_a: int, n_b: int) -> bool:
        c = self.coefficient
        if isinstance(c, ProfiledSeries):
            return set(c.filtered(n_a).terms) == set(c.filtered(n_b).terms)
        return n_a % c.period == 0 and n_b % c.period == 0


def level_field(mu: AdelicBeltrami, n: int):
    """mu_n(w) = -I_n(mu)(x, y) (w/|w|)^2 with x = n arg w, y = -n log|w|."""
    eta = mu.filtered(n)
    y0, y1 = mu.y_window

    def field_fn(w):
        w = np.asarray(w, dtype=complex)
        out = np.zeros(w.shape, complex)
        r = np.abs(w)
        nz = r > 0
        y = np.full(w.shape, np.inf)
        y[nz] = -n * np.log(r[nz])
        keep = nz & (y >= y0) & (y <= y1)
        if np.any(keep):
            wk = w[keep]
            x = n * np.angle(wk)
            out[keep] = -eta(x, y[keep]) * (wk / np.abs(wk)) ** 2
        return out

    return field_fn


def pullback(field_fn, n: int, z):
    """Leaf coefficient of field_fn pulled back through w = e^{iz/n}."""
    z = np.asarray(z, dtype=complex)
    return -field_fn(np.exp(1j * z / n)) * np.exp(-2j * z.real / n)


def outer_radius(mu: AdelicBeltrami, n: int) -> float:
    return math.exp(-mu.y_window[0] / n)


def level_coefficient(mu: AdelicBeltrami, n: int, R: float = 4.0, N: int = 512,
                      margin: float = 0.9) -> GridField:
    rho = outer_radius(mu, n)
    if rho >= margin * R:
        raise WindowError(f"level {n} needs R > {rho / margin:.4g} (got R = {R})")
    return GridField.from_function(level_field(mu, n), R, N, support_radius=rho)


class LeafMap:
    """g(z) = z - i n log(f(w)/w), w = e^{iz/n}, with the branch tracked from w = 1."""

    def __init__(self, level: int, f: PlanarQCMap, step: float | None = None,
                 floor: float = 1e-3):
        self.level = level
        self.f = f
        self.step = f.mu.cell / 2 if step is None else step
        self.floor = floor

    def _tracked_angle(self, w_end: complex) -> float:
        r, theta = abs(w_end), math.atan2(w_end.imag, w_end.real)
        n_rad = max(2, int(math.ceil(abs(r - 1.0) / self.step)) + 1)
        n_arc = max(2, int(math.ceil(abs(theta) * r / self.step)) + 1)
        path = np.concatenate([np.linspace(1.0, r, n_rad),
                               r * np.exp(1j * np.linspace(0.0, theta, n_arc))[1:]])
        F = self.f.interp(path) / path
        if np.min(np.abs(F)) < self.floor:
            raise BranchError("image winds too close to 0; refine the path or the grid")
        return float(np.unwrap(np.angle(F))[-1])

    def log_ratio(self, w):
        w = np.atleast_1d(np.asarray(w, dtype=complex))
        F = self.f(w) / w
        out = np.log(F)
        for k, wk in enumerate(w):
            tracked = self._tracked_angle(complex(wk))
            turns = round((tracked - out[k].imag) / TWO_PI)
            out[k] += 2j * math.pi * turns
        return out

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        flat = z.ravel()
        w = np.exp(1j * flat / self.level)
        g = flat - 1j * self.level * self.log_ratio(w)
        return g.reshape(z.shape)


class ReusedLeafMap:
    """Leaf map of a lower level whose filtered coefficient is unchanged."""

    def __init__(self, base, level: int):
        self.base = base
        self.level = level

    def __call__(self, z):
        return self.base(z)


@dataclass
class ConvergenceDiagnostics:
    levels: list[int]
    L: int
    diffs: list[float]
    band_sups: list[float]
    shapes: list[float]
    M_L_est: float
    A_est: float
    ratios: list[float]
    violations: list[int] = field(default_factory=list)
    probe_scale: float = 1.0

    @property
    def bound_terms(self) -> list[float]:
        return [self.A_est * s for s in self.shapes]

    def to_json(self) -> dict:
        return {"levels": self.levels, "L": self.L, "diffs": self.diffs,
                "band_sups": self.band_sups, "bound_terms": self.bound_terms,
                "M_L_est": self.M_L_est, "A_est": self.A_est, "violations": self.violations,
                "probe_scale": self.probe_scale}


def default_probes(mu: AdelicBeltrami, top: int, per_line: int = 64, boundary: int = 32):
    """Three horizontal lines inside the y-band and one boundary line y = 0."""
    lo, hi = mu.y_window
    xs = TWO_PI * top * (np.arange(per_line) + 0.5) / per_line
    lines = [lo + (hi - lo) * t for t in (0.25, 0.5, 0.75)]
    band = np.concatenate([xs + 1j * y for y in lines])
    xb = TWO_PI * top * (np.arange(boundary) + 0.25) / boundary
    return np.concatenate([band, xb.astype(complex)])


class Tower:
    """Per-level solutions for an admissible leaf coefficient."""

    def __init__(self, mu: AdelicBeltrami, R: float = 4.0, N: int = 512, tol: float = 1e-8,
                 max_iter: int = 200, reuse_periodic: bool = True):
        self.mu = mu
        self.levels = list(mu.chain.levels)
        self.R, self.N, self.tol, self.max_iter = R, N, tol, max_iter
        self.reuse_periodic = reuse_periodic
        self._fields: dict[int, GridField] = {}
        self._maps: dict[int, PlanarQCMap] = {}
        self._lifts: dict[int, object] = {}

    def level_coefficient(self, j: int) -> GridField:
        if j not in self._fields:
            self._fields[j] = level_coefficient(self.mu, self.levels[j], self.R, self.N)
        return self._fields[j]

    def _source_level(self, j: int) -> int:
        if self.reuse_periodic:
            for i in range(j):
                if self.mu.same_filter(self.levels[i], self.levels[j]):
                    return i
        return j

    def solve_level(self, j: int) -> PlanarQCMap:
        if j not in self._maps:
            f = solve_normal(self.level_coefficient(j), self.tol, self.max_iter)
            self._maps[j] = normalize_fix01inf(f)
        return self._maps[j]

    def lift(self, j: int):
        """Leaf map of level j (shared with a lower level when I_n(mu) did not change)."""
        if j not in self._lifts:
            src = self._source_level(j)
            if src != j:
                self._lifts[j] = ReusedLeafMap(self.lift(src), self.levels[j])
            else:
                self._lifts[j] = LeafMap(self.levels[j], self.solve_level(j))
        return self._lifts[j]

    def band_sup(self, i: int) -> float:
        a = self.mu.filtered(self.levels[i])
        b = self.mu.filtered(self.levels[i + 1])
        if isinstance(a, ProfiledSeries):
            return (b - a).sup_bracket()[1]
        diff = PeriodicField(lambda x, y: b(x, y) - a(x, y), b.period, b.y_samples)
        return sup_bracket(diff)[0]

    def cauchy_diagnostics(self, probes=None, L: int | None = None,
                           levels: int | None = None) -> ConvergenceDiagnostics:
        count = len(self.levels) if levels is None else levels
        if count < 2:
            raise ValueError("at least two levels are needed")
        L = self.levels[0] if L is None else L
        top = self.levels[count - 1]
        if probes is None:
            probes = default_probes(self.mu, top)
        probes = np.asarray(probes, dtype=complex)
        proj = [np.exp(1j * self.lift(j)(probes) / L) for j in range(count)]
        base = np.maximum(1.0, np.abs(np.exp(1j * probes / L)))
        M_L = max(1.0, max(float(np.max(np.abs(p) / base)) for p in proj))
        diffs, sups, shapes = [], [], []
        for i in range(count - 1):
            diffs.append(float(np.max(np.abs(proj[i + 1] - proj[i]))))
            s = self.band_sup(i)
            sups.append(s)
            shapes.append(self.levels[i + 1] * s * M_L * float(base.max()) / L)
        ratios = [d / s if s > 0 else (0.0 if d == 0 else math.inf) for d, s in zip(diffs, shapes)]
        finite = [r for r in ratios if np.isfinite(r) and r > 0]
        A_est = max(finite) if finite else 0.0
        typical = float(np.median(finite)) if finite else 0.0
        violations = [i for i, (d, s) in enumerate(zip(diffs, shapes))
                      if (s == 0 and d > 1e-9) or (s > 0 and d > 10 * typical * s)]
        return ConvergenceDiagnostics(self.levels[:count], L, diffs, sups, shapes, M_L, A_est,
                                      ratios, violations, float(base.max()))

    def evaluate(self, p: SolenoidPoint, i: int | None = None) -> SolenoidPoint:
        """Leaf-preserving image of p through the level-i lift, renormalized at the unit."""
        i = len(self.levels) - 1 if i is None else i
        n = self.levels[i]
        lo, hi = self.mu.y_window
        if abs(math.exp(-p.z.imag / n)) >= 0.95 * self.R:
            raise WindowError("point outside the resolved band")
        g = self.lift(i)
        r = p.a.mod(n)
        image = canonicalize(p.a, complex(g(np.array([p.z + TWO_PI * r]))[0]) - TWO_PI * r)
        unit = exp_point(0, complex(g(np.array([0j]))[0]), p.chain)
        return group_mul(image, group_inv(unit))

    def leaf_offsets(self, i: int | None = None) -> list[complex]:
        """g(2 pi r) - 2 pi r for r < n: per-leaf displacement left by the global normalization."""
        i = len(self.levels) - 1 if i is None else i
        n = self.levels[i]
        z = TWO_PI * np.arange(n)
        return list(self.lift(i)(z.astype(complex)) - z)

    def boundary_trace(self, points: list[SolenoidPoint], i: int | None = None, L: int | None = None):
        if not is_mirror_symmetric(self.mu.coefficient):
            raise ValueError("boundary traces need a mirror-symmetric coefficient")
        L = self.levels[0] if L is None else L
        images = [self.evaluate(p, i) for p in points]
        from .solenoid import project
        modulus = [abs(project(q, L)) for q in images]
        return BoundaryTrace(points, images, float(max(abs(m - 1.0) for m in modulus)))


@dataclass
class BoundaryTrace:
    points: list
    images: list
    modulus_defect: float

    def lifted_angles(self) -> np.ndarray:
        """Leaf coordinates of the images, unwrapped along the input order."""
        return np.array([q.z.real + TWO_PI * q.a.residues[-1] for q in self.images])


def is_mirror_symmetric(c, tol: float = 1e-12) -> bool:
    if isinstance(c, ProfiledSeries):
        ref = c.conj_reflect()
        x = np.linspace(0.0, TWO_PI * c.period, 97)
        lo, hi = c.y_window()
        y = np.linspace(-max(abs(lo), abs(hi)), max(abs(lo), abs(hi)), 41)
        X, Y = np.meshgrid(x, y)
        return bool(np.max(np.abs(c(X, Y) - ref(X, Y))) <= tol * max(1.0, c.l1()))
    return False
