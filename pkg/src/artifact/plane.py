"""Planar quasiconformal maps on a uniform grid.

Fields live on cell centres of an N x N grid over [-R, R]^2, stored row
major with rows indexed by y.  The normal solution of f_zbar = mu f_z is
f = z + P h where h = f_zbar solves h = mu (1 + S h); S is applied
spectrally on the periodized grid and P by direct quadrature.
"""
from __future__ import annotations

import io
import math
import struct
from dataclasses import dataclass, field, replace

import numpy as np

HEADER = struct.Struct("<dqd")


class SolverError(RuntimeError):
    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class WindowError(ValueError):
    pass


@dataclass
class GridField:
    R: float
    N: int
    values: np.ndarray
    support_radius: float

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.shape != (self.N, self.N):
            raise ValueError(f"values must have shape {(self.N, self.N)}")
        if not self.support_radius < self.R:
            raise WindowError(f"support radius {self.support_radius} must be < R = {self.R}")

    @property
    def cell(self) -> float:
        return 2.0 * self.R / self.N

    @staticmethod
    def axis(R: float, N: int) -> np.ndarray:
        return -R + (np.arange(N) + 0.5) * (2.0 * R / N)

    def centers(self) -> np.ndarray:
        t = self.axis(self.R, self.N)
        return t[None, :] + 1j * t[:, None]

    @classmethod
    def zeros(cls, R: float = 4.0, N: int = 512) -> "GridField":
        return cls(R, N, np.zeros((N, N), complex), 0.0)

    @classmethod
    def from_function(cls, fn, R: float = 4.0, N: int = 512, support_radius: float | None = None,
                      supersample: int = 1) -> "GridField":
        """Cell averages of fn(z) using supersample^2 points per cell."""
        t = cls.axis(R, N)
        h = 2.0 * R / N
        acc = np.zeros((N, N), complex)
        offs = (np.arange(supersample) + 0.5) / supersample - 0.5
        for oy in offs:
            for ox in offs:
                acc += fn((t[None, :] + ox * h) + 1j * (t[:, None] + oy * h))
        acc /= supersample ** 2
        z = t[None, :] + 1j * t[:, None]
        if support_radius is None:
            nz = np.abs(acc) > 0
            support_radius = float(np.abs(z[nz]).max() + h) if nz.any() else 0.0
        else:
            acc[np.abs(z) > support_radius + h] = 0.0
        return cls(R, N, acc, min(support_radius, R * (1 - 1e-12)))

    def sup(self) -> float:
        return float(np.abs(self.values).max()) if self.values.size else 0.0

    def to_bytes(self) -> bytes:
        buf = io.BytesIO()
        buf.write(HEADER.pack(self.R, self.N, self.support_radius))
        buf.write(np.ascontiguousarray(self.values, dtype=np.complex64).tobytes())
        return buf.getvalue()

    @classmethod
    def from_bytes(cls, data: bytes) -> "GridField":
        R, N, sr = HEADER.unpack_from(data, 0)
        vals = np.frombuffer(data, dtype=np.complex64, offset=HEADER.size, count=N * N)
        return cls(R, N, vals.reshape(N, N).astype(complex), sr)

    def to_csv(self, fh, stride: int = 1) -> None:
        z = self.centers()[::stride, ::stride].ravel()
        v = self.values[::stride, ::stride].ravel()
        fh.write("x,y,re,im\n")
        for zi, vi in zip(z, v):
            fh.write(f"{zi.real:.17g},{zi.imag:.17g},{vi.real:.17g},{vi.imag:.17g}\n")


def _wavenumbers(R: float, N: int) -> np.ndarray:
    k = 2.0 * np.pi * np.fft.fftfreq(N, d=2.0 * R / N)
    xi = k[None, :] + 1j * k[:, None]
    return xi


def beurling_multiplier(R: float, N: int) -> np.ndarray:
    xi = _wavenumbers(R, N)
    xi[0, 0] = 1.0
    m = np.conj(xi) / xi
    m[0, 0] = 0.0
    if N % 2 == 0:
        # the Nyquist row/column aliases +k and -k; zeroing it keeps the
        # multiplier symmetric under reflections of the grid
        m[N // 2, :] = 0.0
        m[:, N // 2] = 0.0
    return m


def apply_beurling(values: np.ndarray, multiplier: np.ndarray) -> np.ndarray:
    return np.fft.ifft2(np.fft.fft2(values) * multiplier)


def beurling_transform(h: GridField) -> GridField:
    """Spectral multiplier conj(xi)/xi on the periodized grid, DC mode removed."""
    out = apply_beurling(h.values, beurling_multiplier(h.R, h.N))
    return GridField(h.R, h.N, out, h.support_radius)


def disk_weights(c: np.ndarray, s, area: float) -> np.ndarray:
    """Integral of 1/(z - s) over the disk of the given area centred at c.

    Outside the disk this is the midpoint value area/(c - s); inside it is
    -pi conj(s - c), which removes the singularity.
    """
    d = s - c
    r2 = area / np.pi
    inside = (d.real ** 2 + d.imag ** 2) < r2
    safe = np.where(inside, 1.0, d)
    return np.where(inside, -np.pi * np.conj(d), -area / safe)


def _support_cells(g: GridField, values: np.ndarray):
    idx = np.nonzero(values)
    return g.centers()[idx], values[idx]


def _kernel_sum(c, v, targets, area, kernel, chunk=2048):
    targets = np.asarray(targets, dtype=complex)
    flat = targets.ravel()
    out = np.empty(flat.shape, complex)
    for s in range(0, flat.size, chunk):
        t = flat[s:s + chunk]
        out[s:s + chunk] = kernel(c[None, :], t[:, None], area) @ v
    return out.reshape(targets.shape)


def cauchy_transform_P(h: GridField, targets, values: np.ndarray | None = None):
    """P h(zeta) = -(1/pi) sum_c h_c [W(c, zeta) - W(c, 0)] with disk-corrected weights."""
    vals = h.values if values is None else values
    c, v = _support_cells(h, vals)
    area = h.cell ** 2
    if v.size == 0:
        return np.zeros(np.shape(targets), complex)

    def kernel(cc, t, a):
        return disk_weights(cc, t, a) - disk_weights(cc, 0.0, a)

    return -_kernel_sum(c, v, targets, area, kernel) / np.pi


def cauchy_transform_grid(h: GridField, values: np.ndarray | None = None) -> np.ndarray:
    """P h at every cell centre via a zero-padded FFT convolution."""
    vals = h.values if values is None else values
    N, cell = h.N, h.cell
    off = np.arange(-N + 1, N) * cell
    d = off[None, :] + 1j * off[:, None]
    kern = disk_weights(np.zeros_like(d), d, cell * cell)
    M = 2 * N - 1
    shape = (M + N - 1, M + N - 1)
    conv = np.fft.ifft2(np.fft.fft2(vals, shape) * np.fft.fft2(kern, shape))
    conv = conv[N - 1:2 * N - 1, N - 1:2 * N - 1]
    c, v = _support_cells(h, vals)
    at0 = np.sum(disk_weights(c, 0.0, cell * cell) * v) if v.size else 0.0
    return -(conv - at0) / np.pi


@dataclass
class PlanarQCMap:
    """f = scale * (z + P h) with h = f_zbar of the normal solution."""

    mu: GridField
    h: np.ndarray
    Sh: np.ndarray
    iterations: int = 0
    update_norm: float = 0.0
    residual: float = 0.0
    scale: complex = 1.0 + 0j
    normalization: str = "normal"
    _grid_values: np.ndarray | None = field(default=None, repr=False)

    @property
    def R(self) -> float:
        return self.mu.R

    @property
    def N(self) -> int:
        return self.mu.N

    @property
    def fz(self) -> np.ndarray:
        return self.scale * (1.0 + self.Sh)

    @property
    def fzbar(self) -> np.ndarray:
        return self.scale * self.h

    def grid_values(self) -> np.ndarray:
        """f at the cell centres."""
        if self._grid_values is None:
            self._grid_values = self.mu.centers() + cauchy_transform_grid(self.mu, self.h)
        return self.scale * self._grid_values

    def __call__(self, points):
        """Evaluate f by quadrature of P (accurate off the grid)."""
        points = np.asarray(points, dtype=complex)
        if np.any(np.abs(points.real) > self.R) or np.any(np.abs(points.imag) > self.R):
            raise WindowError("evaluation point outside the grid window")
        return self.scale * (points + cauchy_transform_P(self.mu, points, self.h))

    def interp(self, points):
        """Bilinear interpolation of f - z between cell centres."""
        points = np.asarray(points, dtype=complex)
        g = self.grid_values() / self.scale - self.mu.centers()
        cell, N = self.mu.cell, self.N
        u = (points.real + self.R) / cell - 0.5
        v = (points.imag + self.R) / cell - 0.5
        if np.any(u < 0) or np.any(v < 0) or np.any(u > N - 1) or np.any(v > N - 1):
            raise WindowError("interpolation point outside the grid of cell centres")
        i0 = np.minimum(np.floor(u).astype(int), N - 2)
        j0 = np.minimum(np.floor(v).astype(int), N - 2)
        a, b = u - i0, v - j0
        val = ((1 - a) * (1 - b) * g[j0, i0] + a * (1 - b) * g[j0, i0 + 1]
               + (1 - a) * b * g[j0 + 1, i0] + a * b * g[j0 + 1, i0 + 1])
        return self.scale * (points + val)

    def jacobian(self) -> np.ndarray:
        return np.abs(self.fz) ** 2 - np.abs(self.fzbar) ** 2

    def beltrami_residual(self) -> float:
        r = self.h - self.mu.values * (1.0 + self.Sh)
        return float(np.linalg.norm(r) / np.linalg.norm(1.0 + self.Sh))


def identity_map(mu: GridField) -> PlanarQCMap:
    z = np.zeros((mu.N, mu.N), complex)
    return PlanarQCMap(mu, z, z.copy(), 0, 0.0, 0.0)


def solve_normal(mu: GridField, tol: float = 1e-8, max_iter: int = 200) -> PlanarQCMap:
    """Normal solution by the fixed point h <- mu (1 + S h).

    Stops when the relative l2 update falls below ``tol``.  Raises
    SolverError when that does not happen within ``max_iter`` sweeps.
    """
    k = mu.sup()
    if k >= 1.0:
        raise ValueError(f"sup |mu| = {k:.6g} must be < 1")
    if k == 0.0:
        return identity_map(mu)
    mult = beurling_multiplier(mu.R, mu.N)
    m = mu.values
    h = m.copy()
    upd = math.inf
    for it in range(1, max_iter + 1):
        Sh = apply_beurling(h, mult)
        h_new = m * (1.0 + Sh)
        upd = float(np.linalg.norm(h_new - h) / max(np.linalg.norm(h_new), 1e-300))
        h = h_new
        if upd < tol:
            break
    else:
        raise SolverError(f"no convergence in {max_iter} iterations (last update {upd:.3e})",
                          residual=upd, iterations=max_iter)
    Sh = apply_beurling(h, mult)
    out = PlanarQCMap(mu, h, Sh, it, upd)
    out.residual = out.beltrami_residual()
    return out


def normalize_fix01inf(f: PlanarQCMap) -> PlanarQCMap:
    """Post-compose with w -> w / f(1); f(1) comes from the corrected quadrature."""
    f1 = complex(f(np.array([1.0 + 0j]))[0])
    if abs(f1) < 1e-9:
        raise SolverError("f(1) vanishes; cannot normalize")
    return replace(f, scale=f.scale / f1, normalization="fix01inf")


def infinitesimal_deformation(eta: GridField, targets):
    """-(1/pi) int eta(z) zeta(zeta-1)/(z(z-1)(z-zeta)) dA with disk-corrected weights.

    The kernel is split as 1/(z-zeta) + (zeta-1)/z - zeta/(z-1); each pole is
    integrated with the equal-area disk rule, so zeta = 0 and zeta = 1 give
    exactly zero.
    """
    targets = np.asarray(targets, dtype=complex)
    if np.any(np.abs(targets.real) > eta.R) or np.any(np.abs(targets.imag) > eta.R):
        raise WindowError("target outside the grid window")
    c, v = _support_cells(eta, eta.values)
    if v.size == 0:
        return np.zeros(targets.shape, complex)
    area = eta.cell ** 2
    w0 = disk_weights(c, 0.0, area) @ v
    w1 = disk_weights(c, 1.0, area) @ v

    def kernel(cc, t, a):
        return disk_weights(cc, t, a)

    wz = _kernel_sum(c, v, targets, area, kernel)
    out = -(wz + (targets - 1.0) * w0 - targets * w1) / np.pi
    # the kernel carries the factor zeta (zeta - 1); keep the cancellation exact
    out[(targets == 0) | (targets == 1)] = 0.0
    return out


@dataclass
class HolderFit:
    A_est: float
    p_est: float
    B_est: float
    exponent: float


def holder_diagnostics(f: PlanarQCMap, mu_sup: float | None = None, rays: int = 8,
                       radii: np.ndarray | None = None) -> HolderFit:
    """Fit |f(z) - z| <= A k |z|^{1-2/p} and the companion inverse bound.

    Uses the normal solution (scale removed).  Purely diagnostic.
    """
    k = f.mu.sup() if mu_sup is None else mu_sup
    if k == 0 or not np.any(f.h):
        return HolderFit(0.0, math.inf, 0.0, 1.0)
    if radii is None:
        radii = np.geomspace(0.05, 0.8 * f.R, 24)
    ang = np.exp(2j * np.pi * (np.arange(rays) + 0.5) / rays)
    zeta = (radii[:, None] * ang[None, :]).ravel()
    fz = zeta + cauchy_transform_P(f.mu, zeta, f.h)
    dev = np.abs(fz - zeta) / k
    ok = dev > 0
    e, logA = np.polyfit(np.log(np.abs(zeta[ok])), np.log(dev[ok]), 1)
    e = min(e, 1.0 - 1e-12)
    A = float(np.max(dev[ok] / np.abs(zeta[ok]) ** e))
    p = 2.0 / (1.0 - e)
    af = np.abs(fz)
    B = float(max(0.0, np.max((np.abs(zeta) - af) / (k * af ** e))))
    return HolderFit(A, p, B, float(e))


def derivatives_fd(f: PlanarQCMap) -> tuple[np.ndarray, np.ndarray]:
    """(f_z, f_zbar) from central differences of the grid values."""
    g = f.grid_values()
    cell = f.mu.cell
    gy, gx = np.gradient(g, cell)
    return 0.5 * (gx - 1j * gy), 0.5 * (gx + 1j * gy)


def composition_coefficient(f1: PlanarQCMap, f2: PlanarQCMap):
    """Coefficient of f1 o f2^{-1}, measured at the points f2(z) of the grid.

    Uses finite-difference derivatives of both maps and the chain rule, so no
    inverse map is needed.  Returns (points, coefficient).
    """
    a_z, a_zb = derivatives_fd(f1)
    b_z, b_zb = derivatives_fd(f2)
    gw = a_z * np.conj(b_z) - a_zb * np.conj(b_zb)
    gwb = a_zb * b_z - a_z * b_zb
    return f2.grid_values(), gwb / gw


def composition_formula(mu1, mu2, f2_z):
    """(mu1 - mu2)/(1 - mu1 conj mu2) times the phase f2_z / conj(f2_z)."""
    return (mu1 - mu2) / (1.0 - mu1 * np.conj(mu2)) * f2_z / np.conj(f2_z)
