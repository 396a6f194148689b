"""Counterexample machinery for the loss-of-derivatives threshold.

A non-linear diffeomorphism ``phi`` (identity outside ``(0, 1)``), the family
``f_n = chi * exp(2 pi i n t)`` (tensorized in d=2), the test operator
``F f = G * (f o phi)`` after the multiplier ``<D>^m``, oscillatory-integral
sweeps and log-log exponent fits.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .fio import AxisMap, FioOperator, apply_fio, change_of_variables_phase, product_symbol
from .grid import GridError, GridSpec, SampledFunction, fourier, lp_norm, sample
from .norms import fl_norm, mp_norm
from .parallel import parallel_map
from .smooth import interval_bump, plateau

__all__ = [
    "Diffeo",
    "CounterexampleFamily",
    "ExperimentResult",
    "QuadratureError",
    "default_diffeo",
    "default_family",
    "cutoff_G",
    "make_fn",
    "test_operator",
    "sharpness_experiment",
    "vdc_check",
    "diffeo_vdc",
    "fit_exponent",
    "snapped_interval",
    "indicator_wave",
]


class QuadratureError(RuntimeError):
    """Oscillatory quadrature failed to stabilize under refinement."""


def _w(t):
    return interval_bump(t, 0.0, 1.0)


def _w1(t):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    m = (t > 0) & (t < 1)
    s = t[m] * (1 - t[m])
    out[m] = np.exp(-1 / s) * (1 - 2 * t[m]) / s ** 2
    return out


def _w2(t):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    m = (t > 0) & (t < 1)
    tm = t[m]
    s = tm * (1 - tm)
    sp = 1 - 2 * tm
    out[m] = np.exp(-1 / s) * (sp ** 2 / s ** 4 + (-2 * s - 2 * sp ** 2) / s ** 3)
    return out


def _golden_max(fn, lo, hi, iters=200):
    g = (np.sqrt(5) - 1) / 2
    a, b = lo, hi
    c, d = b - g * (b - a), a + g * (b - a)
    for _ in range(iters):
        if fn(c) > fn(d):
            b, d = d, c
            c = b - g * (b - a)
        else:
            a, c = c, d
            d = a + g * (b - a)
    x = 0.5 * (a + b)
    return x, fn(x)


@dataclass(frozen=True)
class Diffeo:
    """``phi`` with inverse and derivatives, certified interval ``I`` and bounds."""

    phi: Callable
    phi_inv: Callable
    phi_prime: Callable
    phi_second: Callable
    interval: tuple[float, float]
    rho: float
    bounds: tuple[float, float]
    beta: float = 0.0

    def axis_map(self) -> AxisMap:
        return AxisMap(self.phi, self.phi_inv, self.phi_prime)


def default_diffeo() -> Diffeo:
    """``phi(t) = t + beta w(t)``, ``w = exp(-1/(t(1-t)))`` on ``(0, 1)``.

    ``beta = 0.2 / max|w'|`` keeps ``phi'`` in ``[0.8, 1.2]``.
    """
    coarse = np.linspace(0, 1, 20001)[1:-1]
    i = int(np.argmax(np.abs(_w1(coarse))))
    h = coarse[1] - coarse[0]
    _, wmax = _golden_max(lambda t: abs(float(_w1(np.array([t]))[0])), coarse[i] - h, coarse[i] + h)
    beta = 0.2 / wmax

    def phi(t):
        t = np.asarray(t, dtype=float)
        return t + beta * _w(t)

    def dphi(t):
        return 1.0 + beta * _w1(t)

    def d2phi(t):
        return beta * _w2(t)

    def phi_inv(y):
        y = np.asarray(y, dtype=float)
        x = y.copy()
        for _ in range(60):
            step = (phi(x) - y) / dphi(x)
            x = x - step
            if np.all(np.abs(step) < 1e-15):
                break
        return x

    # certified interval: where |w''| >= half its max on the central concave
    # lobe (w'' < 0 around t = 1/2); twice as long as the outer lobes at the same rho
    fine = np.linspace(0, 1, 200001)[1:-1]
    w2 = _w2(fine)
    a2 = np.where(w2 < 0, -w2, 0.0)
    k = int(np.argmax(a2))
    half = 0.5 * a2[k]
    lo = k
    while lo > 0 and a2[lo - 1] >= half:
        lo -= 1
    hi = k
    while hi < len(fine) - 1 and a2[hi + 1] >= half:
        hi += 1
    interval = (float(fine[lo]), float(fine[hi]))
    rho = float(beta * a2[lo:hi + 1].min())
    d1 = dphi(fine)
    return Diffeo(phi, phi_inv, dphi, d2phi, interval, rho, (float(d1.min()), float(d1.max())), beta)


@dataclass(frozen=True)
class CounterexampleFamily:
    chi: Callable
    n_list: tuple
    d: int = 1


def default_family(n_list=(8, 16, 32, 64, 128, 256, 512), d: int = 1) -> CounterexampleFamily:
    """``chi = exp(-1/(t(1-t)))`` normalized to peak 1, supported in ``(0, 1)``."""
    return CounterexampleFamily(lambda t: np.exp(4.0) * interval_bump(t, 0.0, 1.0), tuple(n_list), d)


def make_fn(family: CounterexampleFamily, n: float, grid: GridSpec) -> SampledFunction:
    """``f_n(t) = chi(t) exp(2 pi i n t)``, tensorized over the grid's axes."""
    if grid.d != family.d:
        raise GridError(f"family dimension {family.d} differs from grid dimension {grid.d}")
    if abs(n) >= 0.4 * grid.nyquist:
        raise GridError(f"n = {n} is not below 0.4 x Nyquist ({0.4 * grid.nyquist:g})")
    ax = grid.axis("time")
    f1 = family.chi(ax) * np.exp(2j * np.pi * n * ax)
    vals = f1 if grid.d == 1 else np.multiply.outer(f1, f1)
    return SampledFunction(grid, vals, "time")


def cutoff_G(x, d: int = 1, margin: float = 0.5):
    """Smooth ``G >= 0``, ``G = 1`` on ``[0, 1]^d``, supported in ``(-margin, 1 + margin)^d``."""
    if d == 1:
        return plateau(x, 0.0, 1.0, margin)
    return np.prod([plateau(x[..., i], 0.0, 1.0, margin) for i in range(d)], axis=0)


def test_operator(diffeo: Diffeo, m: float, grid: GridSpec, margin: float = 0.5) -> FioOperator:
    """``F f(x) = G(x) [T_phi <D>^m f](x)`` with phase ``phi(x) . eta``."""
    d = grid.d
    phase = change_of_variables_phase([diffeo.axis_map()] * d)

    def bracket(e):
        r2 = e * e if d == 1 else np.sum(e * e, axis=-1)
        return (1.0 + r2) ** (m / 2.0)

    radius = (0.5 + margin) * np.sqrt(d)
    sym = product_symbol(lambda x: cutoff_G(x, d, margin), bracket, m, radius, x_center=0.5)
    return FioOperator(phase, sym, grid)


test_operator.__test__ = False  # not a pytest test


@dataclass
class ExperimentResult:
    p: float
    m: float
    d: int
    rows: list
    fitted_exponent: float
    fit_residual: float
    theory_exponent: float
    grid: GridSpec
    norm_method: str = "decomp"
    extra: dict = field(default_factory=dict)


def fit_exponent(pairs: Sequence[tuple[float, float]]) -> dict:
    """Least-squares slope of ``log value`` against ``log n``; residual is the RMS misfit."""
    pairs = list(pairs)
    if len(pairs) < 3:
        raise ValueError(f"need at least 3 pairs, got {len(pairs)}")
    n = np.array([p[0] for p in pairs], dtype=float)
    v = np.array([p[1] for p in pairs], dtype=float)
    if np.any(v <= 0) or np.any(n <= 0) or not np.all(np.isfinite(v)):
        raise ValueError("values and abscissae must be positive and finite")
    X = np.log(n)
    Y = np.log(v)
    A = np.vstack([np.ones_like(X), X]).T
    coef, *_ = np.linalg.lstsq(A, Y, rcond=None)
    res = float(np.sqrt(np.mean((A @ coef - Y) ** 2)))
    return {"slope": float(coef[1]), "intercept": float(coef[0]), "residual": res}


def sharpness_experiment(
    p: float,
    m: float,
    family: CounterexampleFamily,
    diffeo: Diffeo,
    grid: GridSpec,
    norm_method: Optional[str] = "decomp",
) -> ExperimentResult:
    """Growth of ``||F f_n|| / ||f_n||`` in ``FL^p`` (and ``M^p``) along the family.

    ``norm_method=None`` skips the modulation norms (columns become NaN).
    """
    if not 1 <= p <= 2:
        raise GridError(f"direct sharpness runs need 1 <= p <= 2, got {p}")
    T = test_operator(diffeo, m, grid)
    fns = [make_fn(family, n, grid) for n in family.n_list]
    outs = apply_fio(T, fns)

    def row(i):
        f, g = fns[i], outs[i]
        fi, fo = fl_norm(f, p).value, fl_norm(g, p).value
        if norm_method is None:
            mi = mo = float("nan")
        else:
            mi = mp_norm(f, p, 0.0, norm_method).value
            mo = mp_norm(g, p, 0.0, norm_method).value
        vals = (fi, fo, mi, mo)
        if not all(np.isfinite(v) for v in vals[:2]) or (norm_method and not all(np.isfinite(vals))):
            raise GridError(f"non-finite norm for n = {family.n_list[i]}")
        return (family.n_list[i],) + vals

    rows = parallel_map(row, range(len(fns)))
    fit = fit_exponent([(r[0], r[2]) for r in rows])
    extra = {}
    if norm_method is not None:
        extra["mp_fit"] = fit_exponent([(r[0], r[4]) for r in rows])["slope"]
    return ExperimentResult(
        p, m, grid.d, rows, fit["slope"], fit["residual"],
        grid.d * (1.0 / p - 0.5) + m, grid, norm_method or "none", extra,
    )


def _gauss_legendre_integral(phase_fn, a, b, lam, panels, order=10):
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(a, b, panels + 1)
    total = 0j
    step = max(1, (1 << 20) // order)
    for s in range(0, panels, step):
        e = min(s + step, panels)
        lo = edges[s:e][:, None]
        hi = edges[s + 1:e + 1][:, None]
        mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
        t = mid + half * x[None, :]
        total += np.sum(np.exp(1j * lam * phase_fn(t)) * w[None, :] * half)
    return total


def vdc_check(
    phi: Callable,
    interval: tuple[float, float],
    k: int,
    lambdas: Sequence[float],
    density: int = 20,
    order: int = 10,
) -> dict:
    """``lambda^{1/k} |int_I exp(i lambda phi)|`` for each lambda.

    Composite Gauss-Legendre with at least ``density`` nodes per local
    oscillation period; the whole sweep is repeated at twice the density.
    """
    a, b = interval
    probe = np.linspace(a, b, 4001)
    dphi = np.abs(np.gradient(phi(probe), probe)).max()

    def run(dens):
        vals = []
        for lam in lambdas:
            periods = lam * dphi * (b - a) / (2 * np.pi) + 1
            panels = int(np.ceil(dens * periods / order)) + 4
            I = _gauss_legendre_integral(phi, a, b, lam, panels, order)
            vals.append(lam ** (1.0 / k) * abs(I))
        return vals

    v1 = run(density)
    v2 = run(2 * density)
    change = float(max(abs(x - y) / max(abs(y), 1e-300) for x, y in zip(v1, v2)))
    if change > 0.05:
        raise QuadratureError(f"oscillatory quadrature not converged (relative change {change:.3g})")
    return {"sup_scaled": max(v2), "per_lambda": v2, "refinement_change": change}


def diffeo_vdc(diffeo: Diffeo, lambdas: Sequence[float], **kw) -> dict:
    """``(rho lambda)^{1/2} |int_I exp(-2 pi i lambda phi)|`` on the certified interval.

    Uses the normalized phase ``-phi / rho`` (second derivative >= 1 on I) at
    frequency ``2 pi rho lambda``.
    """
    rho = diffeo.rho
    eff = [2 * np.pi * rho * lam for lam in lambdas]
    res = vdc_check(lambda t: -diffeo.phi(t) / rho, diffeo.interval, 2, eff, **kw)
    scaled = [v / np.sqrt(2 * np.pi) for v in res["per_lambda"]]
    return {"sup_scaled": max(scaled), "per_lambda": scaled,
            "van_der_corput_sup": res["sup_scaled"], "refinement_change": res["refinement_change"]}


def snapped_interval(interval: tuple[float, float], grid: GridSpec) -> tuple[float, float]:
    """Largest grid-aligned subinterval of ``interval``."""
    a, b = interval
    dt = grid.dt
    return float(np.ceil(a / dt) * dt), float(np.floor(b / dt) * dt)


def indicator_wave(diffeo: Diffeo, n: float, grid: GridSpec, interval=None) -> SampledFunction:
    """Sharp ``1_I(t) exp(-2 pi i n phi(t))`` sampled with ``a <= t < b``."""
    a, b = interval if interval is not None else snapped_interval(diffeo.interval, grid)
    t = grid.axis("time")
    eps = 1e-9 * grid.dt
    ind = (t >= a - eps) & (t < b - eps)
    return SampledFunction(grid, ind * np.exp(-2j * np.pi * n * diffeo.phi(t)), "time")
