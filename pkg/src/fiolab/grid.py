"""Periodic sampled grids and the continuum-normalized discrete Fourier transform.

The domain is the periodic cube ``[-L, L)^d`` sampled with ``N`` points per
axis.  The forward transform carries the measure ``dt^d`` and the offset phase
so that its output approximates

    f^(eta) = int f(t) exp(-2 pi i t.eta) dt

at the frequency lattice ``eta_k = k / (2L)``, ``k = -N/2, ..., N/2 - 1``.
Values are stored in natural (ascending coordinate) order on both sides.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Literal

import numpy as np

Domain = Literal["time", "frequency"]

__all__ = [
    "GridError",
    "GridSpec",
    "SampledFunction",
    "sample",
    "fourier",
    "lp_norm",
    "inner",
    "shift",
]


class GridError(ValueError):
    """Raised for malformed grids, mismatched operands or non-finite data."""


def _is_pow2(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class GridSpec:
    """Periodic cube ``[-L, L)^d`` with ``N`` samples per axis."""

    d: int
    N: int
    L: float

    def __post_init__(self):
        if self.d not in (1, 2):
            raise GridError(f"dimension must be 1 or 2, got {self.d}")
        if not _is_pow2(int(self.N)) or self.N < 8:
            raise GridError(f"N must be a power of two >= 8, got {self.N}")
        if not (self.L > 0 and np.isfinite(self.L)):
            raise GridError(f"half-width must be positive, got {self.L}")
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "L", float(self.L))

    @property
    def dt(self) -> float:
        return 2.0 * self.L / self.N

    @property
    def deta(self) -> float:
        return 1.0 / (2.0 * self.L)

    @property
    def nyquist(self) -> float:
        """Largest representable |eta| per axis, ``N / (4L)``."""
        return self.N * self.deta / 2.0

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.N,) * self.d

    def spacing(self, domain: Domain) -> float:
        return self.dt if domain == "time" else self.deta

    def axis(self, domain: Domain = "time") -> np.ndarray:
        k = np.arange(self.N) - self.N // 2
        return k * self.spacing(domain)

    def coords(self, domain: Domain = "time"):
        """Coordinate array: shape ``(N,)`` for d=1, ``(N, N, 2)`` for d=2."""
        ax = self.axis(domain)
        if self.d == 1:
            return ax
        X1, X2 = np.meshgrid(ax, ax, indexing="ij")
        return np.stack([X1, X2], axis=-1)

    def radius(self, domain: Domain = "time") -> np.ndarray:
        """``|t|`` (or ``|eta|``) at every lattice point, shaped like the values."""
        c = self.coords(domain)
        return np.abs(c) if self.d == 1 else np.sqrt(np.sum(c * c, axis=-1))

    def rescaled(self, factor: float) -> "GridSpec":
        """Same ``N`` and ``d`` with half-width multiplied by ``factor``."""
        return GridSpec(self.d, self.N, self.L * factor)


@dataclass(frozen=True, eq=False)
class SampledFunction:
    """Complex samples of a function on a :class:`GridSpec` lattice.

    ``values`` has shape ``(N,)*d`` in row-major axis order; ``domain`` says
    whether indices refer to the ``t`` or the ``eta`` lattice.
    """

    grid: GridSpec
    values: np.ndarray
    domain: Domain = "time"

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.shape != self.grid.shape:
            if v.size == self.grid.N ** self.grid.d:
                v = v.reshape(self.grid.shape)
            else:
                raise GridError(f"values shape {v.shape} does not match grid {self.grid.shape}")
        if self.domain not in ("time", "frequency"):
            raise GridError(f"unknown domain tag {self.domain!r}")
        if not np.all(np.isfinite(v)):
            raise GridError("values contain non-finite entries")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def spacing(self) -> float:
        return self.grid.spacing(self.domain)

    def with_values(self, values) -> "SampledFunction":
        return SampledFunction(self.grid, values, self.domain)

    def __add__(self, other: "SampledFunction") -> "SampledFunction":
        _check_compatible(self, other)
        return self.with_values(self.values + other.values)

    def __sub__(self, other: "SampledFunction") -> "SampledFunction":
        _check_compatible(self, other)
        return self.with_values(self.values - other.values)

    def __mul__(self, c) -> "SampledFunction":
        if isinstance(c, SampledFunction):
            _check_compatible(self, c)
            return self.with_values(self.values * c.values)
        return self.with_values(self.values * c)

    __rmul__ = __mul__


def _check_compatible(f: SampledFunction, g: SampledFunction) -> None:
    if f.grid != g.grid:
        raise GridError(f"grid mismatch: {f.grid} vs {g.grid}")
    if f.domain != g.domain:
        raise GridError(f"domain mismatch: {f.domain} vs {g.domain}")


def sample(closure: Callable, grid: GridSpec, domain: Domain = "time") -> SampledFunction:
    """Evaluate ``closure`` at every lattice point.

    For d=1 the closure receives the 1-d coordinate array; for d=2 it receives
    an array with a trailing axis of length 2.
    """
    c = grid.coords(domain)
    vals = np.broadcast_to(np.asarray(closure(c), dtype=complex), grid.shape)
    bad = ~np.isfinite(vals)
    if np.any(bad):
        idx = tuple(int(i[0]) for i in np.nonzero(bad))
        point = c[idx]
        raise GridError(f"closure is not finite at lattice point {idx} = {np.asarray(point).tolist()}")
    return SampledFunction(grid, np.array(vals), domain)


def fourier(f: SampledFunction, direction: Literal["forward", "inverse"] = "forward") -> SampledFunction:
    """Continuum-normalized transform; forward maps time -> frequency."""
    g = f.grid
    axes = tuple(range(g.d))
    if direction == "forward":
        if f.domain != "time":
            raise GridError("forward transform expects a time-domain function")
        v = np.fft.fftshift(np.fft.fftn(np.fft.ifftshift(f.values, axes), axes=axes), axes)
        return SampledFunction(g, v * g.dt ** g.d, "frequency")
    if direction == "inverse":
        if f.domain != "frequency":
            raise GridError("inverse transform expects a frequency-domain function")
        v = np.fft.fftshift(np.fft.ifftn(np.fft.ifftshift(f.values, axes), axes=axes), axes)
        return SampledFunction(g, v * (g.N * g.deta) ** g.d, "time")
    raise GridError(f"unknown direction {direction!r}")


def lp_norm(f: SampledFunction, p: float) -> float:
    """Riemann-sum ``L^p`` norm on ``f``'s own lattice; ``p = inf`` is the max."""
    if not p >= 1:
        raise GridError(f"p must be >= 1, got {p}")
    a = np.abs(f.values).ravel()
    if np.isinf(p):
        return float(a.max())
    w = f.spacing ** f.grid.d
    if p == 1:
        return float(a.sum() * w)
    if p == 2:
        return float(np.sqrt((a * a).sum() * w))
    return float(((a ** p).sum() * w) ** (1.0 / p))


def inner(f: SampledFunction, g: SampledFunction) -> complex:
    """``<f, g> = int f conj(g)``, Riemann sum."""
    _check_compatible(f, g)
    return complex((f.values * np.conj(g.values)).ravel().sum() * f.spacing ** f.grid.d)


def shift(f: SampledFunction, x=0.0, eta=0.0) -> SampledFunction:
    """Time-frequency shift ``M_eta T_x f``.

    Translations by whole grid steps are circular index shifts; other offsets
    go through the frequency side (trigonometric interpolation).
    """
    if f.domain != "time":
        raise GridError("shift expects a time-domain function")
    g = f.grid
    x = np.broadcast_to(np.asarray(x, dtype=float), (g.d,))
    eta = np.broadcast_to(np.asarray(eta, dtype=float), (g.d,))
    v = f.values
    if np.any(x != 0):
        steps = x / g.dt
        if np.allclose(steps, np.round(steps), rtol=0, atol=1e-9):
            v = np.roll(v, tuple(int(s) for s in np.round(steps)), axis=tuple(range(g.d)))
        else:
            fh = fourier(f)
            c = g.coords("frequency")
            dot = c * x[0] if g.d == 1 else c @ x
            v = fourier(fh.with_values(fh.values * np.exp(-2j * np.pi * dot)), "inverse").values
    if np.any(eta != 0):
        c = g.coords("time")
        dot = c * eta[0] if g.d == 1 else c @ eta
        v = v * np.exp(2j * np.pi * dot)
    return SampledFunction(g, np.array(v), "time")
