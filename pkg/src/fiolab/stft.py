"""Short-time Fourier transform on a time-frequency lattice and its inversion."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .grid import GridError, GridSpec, SampledFunction, fourier, lp_norm, sample
from .smooth import bump

__all__ = [
    "Window",
    "GaborCoefficients",
    "gaussian_window",
    "bump_window",
    "default_lattice",
    "stft",
    "istft",
]

_CHUNK = 1 << 21  # complex entries per FFT batch


@dataclass(frozen=True)
class Window:
    base: SampledFunction
    l2_normalized: bool = True
    support_radius: Optional[float] = None

    @property
    def grid(self) -> GridSpec:
        return self.base.grid


@dataclass(frozen=True)
class GaborCoefficients:
    """``V_g f`` sampled on ``a Z^d x b Z^d`` inside the grid's cube.

    ``matrix`` has shape ``(nx,)*d + (neta,)*d``; ``x_points`` and
    ``eta_points`` are the 1-d lattice coordinates per axis.
    """

    grid: GridSpec
    a: float
    b: float
    x_points: np.ndarray
    eta_points: np.ndarray
    matrix: np.ndarray

    @property
    def cell(self) -> float:
        return (self.a * self.b) ** self.grid.d


def gaussian_window(grid: GridSpec) -> Window:
    """``2^{d/4} exp(-pi |t|^2)`` renormalized to unit ``L^2`` norm on ``grid``."""
    d = grid.d
    tail = 2 ** (d / 4) * np.exp(-np.pi * grid.L ** 2)
    if tail >= 1e-12:
        need = np.sqrt(np.log(2 ** (d / 4) / 1e-12) / np.pi)
        raise GridError(
            f"Gaussian tail {tail:.2e} at the boundary exceeds 1e-12; use L > {need:.2f}"
        )
    g = sample(lambda t: 2 ** (d / 4) * np.exp(-np.pi * _sq(t, d)), grid)
    return Window(g * (1.0 / lp_norm(g, 2)))


def bump_window(grid: GridSpec, radius: float, domain: str = "time") -> Window:
    """Unit-norm smooth bump supported in ``|t| < radius``.

    With ``domain="frequency"`` the bump is placed on the Fourier side, so the
    window's transform is the compactly supported one.
    """
    if domain == "time":
        g = sample(lambda t: bump(np.sqrt(_sq(t, grid.d)), radius), grid)
        support = radius
    else:
        gh = sample(lambda e: bump(np.sqrt(_sq(e, grid.d)), radius), grid, "frequency")
        g = fourier(gh, "inverse")
        support = None
    return Window(g * (1.0 / lp_norm(g, 2)), True, support)


def _sq(t, d):
    return t * t if d == 1 else np.sum(t * t, axis=-1)


def default_lattice(grid: GridSpec, target: float = 0.25) -> tuple[float, float]:
    """Grid-commensurate steps close to ``target`` (coarsened to one grid step if needed)."""

    def snap(delta):
        k = max(0, int(np.floor(np.log2(target / delta + 1e-12))))
        return delta * 2 ** min(k, int(np.log2(grid.N)) - 1)

    return snap(grid.dt), snap(grid.deta)


def _steps(grid: GridSpec, a: float, b: float) -> tuple[int, int]:
    sa, sb = a / grid.dt, b / grid.deta
    for name, s in (("time step", sa), ("frequency step", sb)):
        if s < 1 - 1e-9 or abs(s - round(s)) > 1e-9 or grid.N % int(round(s)):
            raise GridError(f"{name} is not a grid-commensurate divisor of the lattice: {s}")
    return int(round(sa)), int(round(sb))


def _lattice_index(N: int, step: int) -> np.ndarray:
    # indices whose coordinate is a multiple of the step, ascending
    return np.arange(N // 2 % step, N, step)


def stft(f: SampledFunction, g: Window, a: float, b: float) -> GaborCoefficients:
    """Lattice samples of ``V_g f(x, eta) = <f, M_eta T_x g>``."""
    grid = f.grid
    if g.grid != grid:
        raise GridError("window and function live on different grids")
    if f.domain != "time":
        raise GridError("stft expects a time-domain function")
    d = grid.d
    sa, sb = _steps(grid, a, b)
    xi = _lattice_index(grid.N, sa)
    ei = _lattice_index(grid.N, sb)
    nx, ne = len(xi), len(ei)
    axes = tuple(range(1, d + 1))
    gv = np.conj(g.base.values)
    fv = f.values
    centers = list(itertools.product(xi - grid.N // 2, repeat=d))
    out = np.empty((len(centers),) + (ne,) * d, dtype=complex)
    per = max(1, _CHUNK // grid.N ** d)
    sel = np.ix_(*([ei] * d))
    for s in range(0, len(centers), per):
        block = centers[s:s + per]
        prod = np.stack([fv * np.roll(gv, c, axis=tuple(range(d))) for c in block])
        spectrum = np.fft.fftshift(np.fft.fftn(np.fft.ifftshift(prod, axes), axes=axes), axes)
        spectrum *= grid.dt ** d
        for i in range(len(block)):
            out[s + i] = spectrum[i][sel]
    out = out.reshape((nx,) * d + (ne,) * d)
    return GaborCoefficients(
        grid, float(a), float(b),
        (xi - grid.N // 2) * grid.dt, (ei - grid.N // 2) * grid.deta, out,
    )


def _frame_symbol(g: Window, sa: int, sb: int) -> np.ndarray:
    """``W_m(t) = sum_j g(t - x_j) conj g(t - m/b - x_j)`` for ``m`` in ``Z_sb^d``."""
    grid = g.grid
    d, N = grid.d, grid.N
    R = N // sb
    ax = tuple(range(d))
    xi = _lattice_index(N, sa) - N // 2
    gv = g.base.values
    W = np.zeros((sb,) * d + grid.shape, dtype=complex)
    for c in itertools.product(xi, repeat=d):
        gj = np.roll(gv, c, axis=ax)
        for m in itertools.product(range(sb), repeat=d):
            W[m] += gj * np.conj(np.roll(gj, tuple(mi * R for mi in m), axis=ax))
    return W


def istft(c: GaborCoefficients, g: Window) -> SampledFunction:
    """Invert :func:`stft` with the exact lattice frame operator of ``g``.

    The frame operator ``S f(t) = a^d sum_m W_m(t) f(t - m/b)`` decouples into
    small blocks over residues of ``t`` modulo ``1/b``; each block is solved
    directly.
    """
    grid = c.grid
    if g.grid != grid:
        raise GridError("window and coefficients live on different grids")
    if c.a * c.b > 0.5 + 1e-12:
        raise GridError(f"lattice too coarse for inversion: a*b = {c.a * c.b}")
    d, N = grid.d, grid.N
    sa, sb = _steps(grid, c.a, c.b)
    ax = tuple(range(d))

    # synthesis D c = a^d b^d sum_j T_{x_j} g * sum_k c_jk e^{2 pi i eta_k t}
    ei = _lattice_index(N, sb)
    nx = len(c.x_points)
    mat = c.matrix.reshape((nx ** d,) + (len(ei),) * d)
    centers = list(itertools.product(np.round(c.x_points / grid.dt).astype(int), repeat=d))
    full = np.zeros(grid.shape, dtype=complex)
    sel = np.ix_(*([ei] * d))
    syn = np.zeros(grid.shape, dtype=complex)
    for j, cen in enumerate(centers):
        full[...] = 0
        full[sel] = mat[j]
        wave = np.fft.fftshift(np.fft.ifftn(np.fft.ifftshift(full, ax)), ax) * N ** d
        syn += np.roll(g.base.values, cen, axis=ax) * wave
    syn *= (c.a * c.b) ** d

    W = _frame_symbol(g, sa, sb) * c.a ** d
    R = N // sb
    # block system: unknowns h(r + q R), q in Z_sb^d, for each residue r in Z_R^d
    qs = list(itertools.product(range(sb), repeat=d))
    nb = len(qs)
    B = np.empty((R ** d, nb, nb), dtype=complex)
    rhs = np.empty((R ** d, nb), dtype=complex)
    rs = list(itertools.product(range(R), repeat=d))
    r_arr = np.array(rs).reshape(R ** d, d)
    for i, q in enumerate(qs):
        t_idx = tuple(r_arr[:, k] + q[k] * R for k in range(d))
        rhs[:, i] = syn[t_idx]
        for k, q2 in enumerate(qs):
            m = tuple((q[ax_] - q2[ax_]) % sb for ax_ in range(d))
            B[:, i, k] = W[m][t_idx]
    cond = np.linalg.cond(B)
    if not np.all(np.isfinite(cond)) or cond.max() > 1e8:
        raise GridError(f"lattice frame operator is numerically singular (cond {np.max(cond):.2e})")
    sol = np.linalg.solve(B, rhs[..., None])[..., 0]
    h = np.empty(grid.shape, dtype=complex)
    for i, q in enumerate(qs):
        t_idx = tuple(r_arr[:, k] + q[k] * R for k in range(d))
        h[t_idx] = sol[:, i]
    return SampledFunction(grid, h, "time")
