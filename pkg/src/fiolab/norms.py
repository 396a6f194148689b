"""Fourier-Lebesgue and modulation-space norms.

Modulation norms are estimated two independent ways: a lattice Riemann sum
of the STFT (method ``"stft"``) and the frequency-uniform decomposition
``sum_k ||phi(D - k) u||_p^p <k>^{ps}`` over integer centers ``k`` (method
``"decomp"``).  Both are window/partition dependent, so downstream code only
compares ratios and fitted exponents.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .grid import GridError, GridSpec, SampledFunction, fourier, lp_norm
from .smooth import smooth_step
from .stft import Window, default_lattice, gaussian_window, stft

__all__ = [
    "NormEstimate",
    "fl_norm",
    "mp_norm",
    "bessel",
    "uniform_partition",
    "partition_sum",
    "equivalence_report",
    "EquivalenceReport",
]


@dataclass(frozen=True)
class NormEstimate:
    value: float
    method: str
    p: float
    s: float = 0.0
    descriptor: str = ""

    def __float__(self):
        return self.value


def _check_p(p):
    if not p >= 1:
        raise GridError(f"p must be in [1, inf], got {p}")


def fl_norm(f: SampledFunction, p: float) -> NormEstimate:
    """``||f||_{FL^p} = ||f^||_{L^p}`` on the frequency lattice."""
    _check_p(p)
    if f.domain != "time":
        raise GridError("fl_norm expects a time-domain function")
    return NormEstimate(lp_norm(fourier(f), p), "fl", p)


def uniform_partition(eta):
    """1-d bump ``phi(eta) = s(eta + 1) - s(eta)``; integer translates sum to 1."""
    eta = np.asarray(eta, dtype=float)
    return smooth_step(eta + 1.0) - smooth_step(eta)


def partition_sum(grid: GridSpec) -> np.ndarray:
    """``sum_k phi(eta - k)`` at every grid frequency (tensorized in d=2)."""
    ax = grid.axis("frequency")
    ks = np.arange(np.floor(ax.min()) - 1, np.ceil(ax.max()) + 2)
    s1 = sum(uniform_partition(ax - k) for k in ks)
    return s1 if grid.d == 1 else np.multiply.outer(s1, s1)


def _bracket(k, s):
    return (1.0 + np.sum(np.square(k), axis=-1)) ** (s / 2.0)


def _mp_decomp(f: SampledFunction, p: float, s: float) -> float:
    grid = f.grid
    d, N = grid.d, grid.N
    fh = fourier(f).values
    ax = grid.axis("frequency")
    ks = np.arange(int(np.floor(ax.min())) - 1, int(np.ceil(ax.max())) + 2)
    # per-axis partition factors and index windows (support of phi(. - k) is (k-1, k+1))
    factors = []
    for k in ks:
        idx = np.nonzero(np.abs(ax - k) < 1.0)[0]
        factors.append((idx, uniform_partition(ax[idx] - k)))
    axes = tuple(range(1, d + 1))
    scale = (N * grid.deta) ** d
    w = grid.dt ** d
    per = max(1, (1 << 21) // N ** d)
    combos = [c for c in itertools.product(range(len(ks)), repeat=d)
              if all(len(factors[i][0]) for i in c)]
    total = 0.0
    best = 0.0
    for start in range(0, len(combos), per):
        block = combos[start:start + per]
        buf = np.zeros((len(block),) + grid.shape, dtype=complex)
        for b, c in enumerate(block):
            if d == 1:
                idx, phi = factors[c[0]]
                buf[b, idx] = phi * fh[idx]
            else:
                (i1, p1), (i2, p2) = factors[c[0]], factors[c[1]]
                buf[b][np.ix_(i1, i2)] = np.multiply.outer(p1, p2) * fh[np.ix_(i1, i2)]
        vals = np.abs(np.fft.ifftn(buf, axes=axes)) * scale
        centers = np.array([[ks[i] for i in c] for c in block], dtype=float)
        wt = _bracket(centers, s)
        flat = vals.reshape(len(block), -1)
        if np.isinf(p):
            best = max(best, float((flat.max(axis=1) * wt).max()))
        else:
            total += float(((flat ** p).sum(axis=1) * w * wt ** p).sum())
    return best if np.isinf(p) else total ** (1.0 / p)


def _mp_stft(f: SampledFunction, p: float, s: float, window: Optional[Window], lattice) -> float:
    g = window if window is not None else gaussian_window(f.grid)
    a, b = lattice if lattice is not None else default_lattice(f.grid)
    c = stft(f, g, a, b)
    d = f.grid.d
    A = np.abs(c.matrix)
    if s != 0:
        e = c.eta_points
        r2 = e * e if d == 1 else np.add.outer(e * e, e * e)
        A = A * (1.0 + r2) ** (s / 2.0)
    if np.isinf(p):
        return float(A.max())
    return float(((A.ravel() ** p).sum() * c.cell) ** (1.0 / p))


def mp_norm(
    f: SampledFunction,
    p: float,
    s: float = 0.0,
    method: str = "stft",
    window: Optional[Window] = None,
    lattice: Optional[tuple[float, float]] = None,
) -> NormEstimate:
    """Modulation norm ``||f||_{M^p_s}`` by STFT Riemann sum or uniform decomposition."""
    _check_p(p)
    if f.domain != "time":
        raise GridError("mp_norm expects a time-domain function")
    if method == "stft":
        v = _mp_stft(f, p, s, window, lattice)
        desc = "gaussian window" if window is None else "custom window"
    elif method == "decomp":
        v = _mp_decomp(f, p, s)
        desc = "uniform partition s(eta+1)-s(eta)"
    else:
        raise GridError(f"unknown method {method!r}")
    return NormEstimate(v, method, p, s, desc)


def bessel(f: SampledFunction, s: float) -> SampledFunction:
    """Fourier multiplier ``<D>^s = (1 + |eta|^2)^{s/2}``."""
    if f.domain != "time":
        raise GridError("bessel expects a time-domain function")
    if s == 0:
        return f
    fh = fourier(f)
    r = f.grid.radius("frequency")
    return fourier(fh.with_values(fh.values * (1.0 + r * r) ** (s / 2.0)), "inverse")


@dataclass(frozen=True)
class EquivalenceReport:
    ratios: list
    min: float
    max: float

    @property
    def spread(self) -> float:
        return self.max / self.min


def _support_mass(f: SampledFunction, support: Sequence[tuple[float, float]]) -> float:
    grid = f.grid
    ax = grid.axis("time")
    masks = [(ax >= lo) & (ax <= hi) for lo, hi in support]
    m = masks[0] if grid.d == 1 else np.logical_and.outer(masks[0], masks[1])
    e = np.abs(f.values) ** 2
    tot = e.sum()
    return float(e[m].sum() / tot) if tot > 0 else 1.0


def equivalence_report(
    family: Iterable[SampledFunction],
    p: float,
    support=(0.0, 1.0),
    method: str = "stft",
) -> EquivalenceReport:
    """Ratios ``||u||_{FL^p} / ||u||_{M^p}`` over a family supported in ``support``.

    ``support`` is an interval (applied on every axis) or one interval per axis.
    """
    ratios = []
    for i, u in enumerate(family):
        sup = [support] * u.grid.d if np.ndim(support[0]) == 0 else list(support)
        mass = _support_mass(u, sup)
        if mass < 1 - 1e-8:
            raise GridError(f"family member {i} is not supported in {sup} (mass inside {mass:.3e})")
        ratios.append(fl_norm(u, p).value / mp_norm(u, p, 0.0, method).value)
    if not ratios:
        raise GridError("empty family")
    return EquivalenceReport(ratios, min(ratios), max(ratios))
