"""Discretized Fourier integral operators

    T f(x) = int exp(2 pi i Phi(x, eta)) sigma(x, eta) f^(eta) d eta

by direct quadrature over the frequency lattice, plus the diagnostics that go
with them: non-degeneracy of the mixed Hessian, Gabor-matrix decay, the
change-of-variables adjoint and the ``FL^1`` bound for ``exp(2 pi i Phi(x, .)) chi``.

Coordinates follow the :mod:`fiolab.grid` convention: plain arrays for d=1,
arrays with a trailing axis of length 2 for d=2.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np

from .grid import GridError, GridSpec, SampledFunction, fourier, lp_norm, sample
from .smooth import radial_cutoff
from .stft import Window, stft

__all__ = [
    "Phase",
    "Symbol",
    "FioOperator",
    "AxisMap",
    "linear_phase",
    "change_of_variables_phase",
    "radial_phase",
    "product_symbol",
    "apply_fio",
    "check_nondegeneracy",
    "gabor_matrix",
    "GaborMatrix",
    "adjoint_apply",
    "phase_fl1_bound",
]

_CHUNK = 1 << 21


def _dot(x, eta, d):
    return x * eta if d == 1 else np.sum(x * eta, axis=-1)


def _norm(v, d):
    return np.abs(v) if d == 1 else np.sqrt(np.sum(v * v, axis=-1))


@dataclass(frozen=True)
class AxisMap:
    """One-dimensional change of variables with its inverse and derivative."""

    phi: Callable
    phi_inv: Optional[Callable] = None
    phi_prime: Optional[Callable] = None


@dataclass(frozen=True)
class Phase:
    """Real phase ``Phi(x, eta)`` with analytic first derivatives.

    ``cone(x, eta)`` returns a boolean mask of points where the evaluators are
    valid (``None`` means everywhere).  ``axis_maps`` is set for phases of the
    form ``sum_i psi_i(x_i) eta_i``, which lets operators use a separable
    quadrature.
    """

    d: int
    eval: Callable
    grad_x: Callable
    grad_eta: Callable
    mixed_hessian: Callable
    homogeneous: bool = True
    cone: Optional[Callable] = None
    axis_maps: Optional[tuple] = None
    name: str = "phase"

    def __call__(self, x, eta):
        with np.errstate(invalid="ignore", divide="ignore"):
            v = self.eval(x, eta)
        if self.homogeneous:
            v = np.where(_norm(eta, self.d) == 0, 0.0, v)
        return v

    def homogeneity_error(self, xs, etas, lams=(2.0, 0.5)) -> float:
        """Max relative deviation of ``Phi(x, lam eta)`` from ``lam Phi(x, eta)``."""
        base = self(xs, etas)
        scale = np.maximum(np.abs(base), 1e-300)
        return max(float(np.max(np.abs(self(xs, lam * etas) - lam * base) / scale)) for lam in lams)

    def gradient_error(self, xs, etas, h=1e-5) -> float:
        """Max relative deviation of the gradients from central differences."""
        d = self.d
        worst = 0.0
        for which, grad in (("x", self.grad_x), ("eta", self.grad_eta)):
            g = np.asarray(grad(xs, etas), dtype=float)
            for i in range(d):
                e = np.zeros(d) if d > 1 else 1.0
                if d > 1:
                    e[i] = 1.0
                if which == "x":
                    fd = (self(xs + h * e, etas) - self(xs - h * e, etas)) / (2 * h)
                else:
                    fd = (self(xs, etas + h * e) - self(xs, etas - h * e)) / (2 * h)
                gi = g if d == 1 else g[..., i]
                scale = np.maximum(np.abs(gi), 1.0)
                worst = max(worst, float(np.max(np.abs(fd - gi) / scale)))
        return worst


def linear_phase(d: int = 1) -> Phase:
    """``Phi(x, eta) = x . eta``."""
    if d == 1:
        hess = lambda x, e: np.ones(np.broadcast(x, e).shape)
    else:
        hess = lambda x, e: np.broadcast_to(np.eye(d), np.broadcast(x, e).shape[:-1] + (d, d))
    ident = AxisMap(lambda t: t, lambda t: t, lambda t: np.ones_like(t))
    return Phase(
        d,
        eval=lambda x, e: _dot(x, e, d),
        grad_x=lambda x, e: np.broadcast_to(e, np.broadcast(x, e).shape),
        grad_eta=lambda x, e: np.broadcast_to(x, np.broadcast(x, e).shape),
        mixed_hessian=hess,
        homogeneous=True,
        axis_maps=(ident,) * d,
        name="x.eta",
    )


def change_of_variables_phase(maps: Sequence[AxisMap], name: str = "phi(x).eta") -> Phase:
    """``Phi(x, eta) = sum_i phi_i(x_i) eta_i``; derivatives need ``phi_prime``."""
    maps = tuple(maps)
    d = len(maps)
    m0 = maps[0]
    if d == 1:
        return Phase(
            1,
            eval=lambda x, e: m0.phi(x) * e,
            grad_x=lambda x, e: m0.phi_prime(x) * e,
            grad_eta=lambda x, e: np.broadcast_to(m0.phi(x), np.broadcast(x, e).shape),
            mixed_hessian=lambda x, e: np.broadcast_to(m0.phi_prime(x), np.broadcast(x, e).shape),
            homogeneous=True,
            axis_maps=maps,
            name=name,
        )

    def _stack(fn_name, x):
        return np.stack([getattr(m, fn_name)(x[..., i]) for i, m in enumerate(maps)], axis=-1)

    def hess(x, e):
        shape = np.broadcast(x, e).shape[:-1]
        diag = np.broadcast_to(_stack("phi_prime", x), shape + (d,))
        out = np.zeros(shape + (d, d))
        for i in range(d):
            out[..., i, i] = diag[..., i]
        return out

    return Phase(
        d,
        eval=lambda x, e: np.sum(_stack("phi", x) * e, axis=-1),
        grad_x=lambda x, e: _stack("phi_prime", x) * e,
        grad_eta=lambda x, e: np.broadcast_to(_stack("phi", x), np.broadcast(x, e).shape),
        mixed_hessian=hess,
        homogeneous=True,
        axis_maps=maps,
        name=name,
    )


def radial_phase(phi: Callable, phi_prime: Callable) -> Phase:
    """``Phi(x, eta) = phi(x) |eta|`` in d=1: homogeneous, kinked at ``eta = 0``."""
    return Phase(
        1,
        eval=lambda x, e: phi(x) * np.abs(e),
        grad_x=lambda x, e: phi_prime(x) * np.abs(e),
        grad_eta=lambda x, e: phi(x) * np.sign(e),
        mixed_hessian=lambda x, e: phi_prime(x) * np.sign(e),
        homogeneous=True,
        cone=lambda x, e: np.broadcast_to(e != 0, np.broadcast(x, e).shape),
        name="phi(x)|eta|",
    )


@dataclass(frozen=True)
class Symbol:
    """Symbol ``sigma(x, eta)`` of order ``m``.

    ``x_support_radius=None`` means no x-localization (a pure multiplier).
    ``x_factor``/``eta_factor`` are set when ``sigma = a(x) b(eta)``.
    """

    order: float
    eval: Callable
    x_support_radius: Optional[float] = None
    eta_window: Optional[tuple[float, float]] = None
    x_factor: Optional[Callable] = None
    eta_factor: Optional[Callable] = None
    x_center: float = 0.0

    def __call__(self, x, eta):
        return self.eval(x, eta)

    def support_violation(self, xs, etas, d: int = 1) -> float:
        """Max ``|sigma|`` at samples outside the declared supports (0 when compliant)."""
        vals = np.abs(self(xs, etas))
        bad = np.zeros(vals.shape, dtype=bool)
        if self.x_support_radius is not None:
            bad |= np.broadcast_to(_norm(xs - self.x_center, d) > self.x_support_radius, vals.shape)
        if self.eta_window is not None:
            r = np.broadcast_to(_norm(etas, d), vals.shape)
            bad |= (r < self.eta_window[0]) | (r > self.eta_window[1])
        return float(vals[bad].max()) if np.any(bad) else 0.0

    def class_constants(self, xs, etas, h=1e-3, d: int = 1) -> tuple[float, float]:
        """Sampled ``sup |sigma| <eta>^{-m}`` and ``sup |d_eta sigma| <eta>^{1-m}`` (d=1)."""
        br = 1.0 + np.square(_norm(etas, d))
        c0 = float(np.max(np.abs(self(xs, etas)) * br ** (-self.order / 2)))
        if d == 1:
            deriv = (self(xs, etas + h) - self(xs, etas - h)) / (2 * h)
        else:
            e1 = np.zeros(d)
            e1[0] = h
            deriv = (self(xs, etas + e1) - self(xs, etas - e1)) / (2 * h)
        c1 = float(np.max(np.abs(deriv) * br ** ((1 - self.order) / 2)))
        return c0, c1


def product_symbol(
    x_factor: Callable,
    eta_factor: Callable,
    order: float,
    x_support_radius: Optional[float] = None,
    eta_window=None,
    x_center: float = 0.0,
) -> Symbol:
    """``sigma(x, eta) = a(x) b(eta)``."""
    return Symbol(
        order,
        lambda x, e: x_factor(x) * eta_factor(e),
        x_support_radius,
        eta_window,
        x_factor,
        eta_factor,
        x_center,
    )


def _ones(x):
    return np.ones(np.shape(x) if np.ndim(x) else ())


@dataclass(frozen=True)
class FioOperator:
    """``(Phi, sigma)`` on a grid, with a smooth radial taper near Nyquist.

    The taper is 1 below ``taper[0] * nyquist`` and vanishes from
    ``taper[1] * nyquist`` on.
    """

    phase: Phase
    symbol: Symbol
    grid: GridSpec
    taper: tuple[float, float] = (0.7, 0.9)

    def __post_init__(self):
        if self.phase.d != self.grid.d:
            raise GridError("phase and grid dimensions differ")

    def taper_values(self, eta):
        nyq = self.grid.nyquist
        return radial_cutoff(_norm(eta, self.grid.d), self.taper[0] * nyq, self.taper[1] * nyq)

    def with_symbol(self, symbol: Symbol) -> "FioOperator":
        return replace(self, symbol=symbol)

    @property
    def separable(self) -> bool:
        return (
            self.phase.axis_maps is not None
            and self.symbol.x_factor is not None
            and self.symbol.eta_factor is not None
        )


def _as_batch(f):
    if isinstance(f, SampledFunction):
        return [f], True
    return list(f), False


def apply_fio(T: FioOperator, f):
    """Apply ``T`` to one function or a list of functions (batched)."""
    fs, single = _as_batch(f)
    grid = T.grid
    for u in fs:
        if u.grid != grid or u.domain != "time":
            raise GridError("input must be a time-domain function on the operator's grid")
    d, N = grid.d, grid.N
    eta = grid.coords("frequency")
    x = grid.coords("time")
    F = np.stack([fourier(u).values for u in fs], axis=-1)  # shape (N,)*d + (M,)
    M = F.shape[-1]
    if T.separable:
        b = np.asarray(T.symbol.eta_factor(eta), dtype=complex) * T.taper_values(eta)
        H = F * np.broadcast_to(b, grid.shape)[..., None]
        ax = grid.axis("time")
        ea = grid.axis("frequency")
        mats = []
        for m in T.phase.axis_maps:
            y = np.asarray(m.phi(ax), dtype=float)
            mats.append(_exp_matrix(y, ea))
        if d == 1:
            out = mats[0] @ H
        else:
            out = np.einsum("ik,klm,jl->ijm", mats[0], H, mats[1], optimize=True)
        a = np.broadcast_to(np.asarray(T.symbol.x_factor(x), dtype=complex), grid.shape)
        out = out * a[..., None] * grid.deta ** d
    else:
        out = _apply_direct(T, F.reshape(-1, M), x, eta).reshape(grid.shape + (M,))
    res = [SampledFunction(grid, out[..., i], "time") for i in range(M)]
    return res[0] if single else res


def _exp_matrix(y, eta):
    out = np.empty((len(y), len(eta)), dtype=complex)
    per = max(1, _CHUNK // len(eta))
    for s in range(0, len(y), per):
        out[s:s + per] = np.exp(2j * np.pi * np.multiply.outer(y[s:s + per], eta))
    return out


def _apply_direct(T: FioOperator, Fflat, x, eta):
    grid = T.grid
    d = grid.d
    xs = x.reshape(-1) if d == 1 else x.reshape(-1, d)
    es = eta.reshape(-1) if d == 1 else eta.reshape(-1, d)
    tap = T.taper_values(es)
    out = np.empty((len(xs), Fflat.shape[1]), dtype=complex)
    per = max(1, _CHUNK // len(es))
    for s in range(0, len(xs), per):
        xc = xs[s:s + per]
        xb = xc[:, None] if d == 1 else xc[:, None, :]
        eb = es[None, :] if d == 1 else es[None, :, :]
        sig = np.asarray(T.symbol(xb, eb), dtype=complex) * tap
        if T.phase.cone is not None:
            ok = T.phase.cone(xb, eb)
            bad = (~ok) & (sig != 0)
            if np.any(bad):
                i, j = np.argwhere(bad)[0]
                raise GridError(
                    f"phase cone violated at x={np.asarray(xc[i]).tolist()}, eta={np.asarray(es[j]).tolist()}"
                )
        K = np.exp(2j * np.pi * T.phase(xb, eb)) * sig
        out[s:s + per] = K @ Fflat
    return out * grid.deta ** d


def check_nondegeneracy(phase: Phase, xs, etas) -> dict:
    """Minimum ``|det d^2 Phi / dx deta|`` over all sample pairs.

    ``etas`` should be unit directions; the determinant is homogeneous of
    degree 0 in ``eta`` for degree-1 phases.
    """
    d = phase.d
    xs = np.asarray(xs, dtype=float)
    etas = np.asarray(etas, dtype=float)
    if d == 1:
        X, E = np.meshgrid(xs, etas, indexing="ij")
        dets = np.abs(phase.mixed_hessian(X, E))
        i, j = np.unravel_index(np.argmin(dets), dets.shape)
        return {"min_abs_det": float(dets[i, j]), "argmin": (float(xs[i]), float(etas[j]))}
    X = xs[:, None, :]
    E = etas[None, :, :]
    dets = np.abs(np.linalg.det(phase.mixed_hessian(X, E)))
    i, j = np.unravel_index(np.argmin(dets), dets.shape)
    return {"min_abs_det": float(dets[i, j]), "argmin": (xs[i].tolist(), etas[j].tolist())}


@dataclass
class GaborMatrix:
    """Entries ``<T(M_w T_y g), M_w' T_y' gamma>`` indexed ``[y, w, y', w']``."""

    ys: np.ndarray
    omegas: np.ndarray
    ys_out: np.ndarray
    omegas_out: np.ndarray
    entries: np.ndarray
    decay_order: float = float("nan")
    residual: float = float("nan")
    n_fit: int = 0
    peak: float = 0.0
    extra: dict = field(default_factory=dict)


def gabor_matrix(
    T: FioOperator,
    g: Window,
    gamma: Window,
    ys: Sequence[float],
    omegas: Sequence[float],
    a: float,
    b: float,
    min_separation: float = 2.0,
    floor: float = 1e-14,
) -> GaborMatrix:
    """Gabor matrix of ``T`` (d=1) and its fitted polynomial decay order.

    Input atoms sit at ``(y, omega)``; outputs are read on the ``(a, b)``
    lattice of the whole grid.  The decay order is the negated slope of
    ``log|entry|`` against ``log(<grad_x Phi(y', w) - w'> <grad_eta Phi(y', w) - y>)``
    over entries at least ``min_separation`` lattice steps from the predicted
    peak.
    """
    grid = T.grid
    if grid.d != 1:
        raise GridError("gabor_matrix is implemented for d=1")
    ys = np.asarray(ys, dtype=float)
    omegas = np.asarray(omegas, dtype=float)
    if np.any(np.abs(ys) >= grid.L) or np.any(np.abs(omegas) >= grid.nyquist):
        raise GridError("input lattice exceeds the grid")
    atoms = [_tf_shift(g.base, y, w) for y in ys for w in omegas]
    images = apply_fio(T, atoms)
    blocks = [stft(im, gamma, a, b) for im in images]
    c0 = blocks[0]
    E = np.stack([c.matrix for c in blocks]).reshape(len(ys), len(omegas), len(c0.x_points), len(c0.eta_points))
    out = GaborMatrix(ys, omegas, c0.x_points, c0.eta_points, E)
    out.peak = float(np.abs(E).max())

    Y, W, Yp, Wp = np.meshgrid(ys, omegas, c0.x_points, c0.eta_points, indexing="ij")
    gx = T.phase.grad_x(Yp, W)
    ge = T.phase.grad_eta(Yp, W)
    dw = np.abs(gx - Wp)
    dy = np.abs(ge - Y)
    sep = np.maximum(dw / b, dy / a)
    mag = np.abs(E)
    use = (sep >= min_separation) & (mag > floor)
    out.n_fit = int(use.sum())
    if out.n_fit >= 3:
        X = np.log((1 + dw[use] ** 2) ** 0.5 * (1 + dy[use] ** 2) ** 0.5)
        Z = np.log(mag[use])
        A = np.vstack([np.ones_like(X), X]).T
        coef, *_ = np.linalg.lstsq(A, Z, rcond=None)
        out.decay_order = float(-coef[1])
        out.residual = float(np.sqrt(np.mean((A @ coef - Z) ** 2)))
    return out


def _tf_shift(f: SampledFunction, y: float, w: float) -> SampledFunction:
    from .grid import shift

    return shift(f, y, w)


def _interp_matrix(points, grid: GridSpec):
    """Rows evaluate the trigonometric interpolant of grid samples at ``points``."""
    ea = grid.axis("frequency")
    E = _exp_matrix(np.asarray(points, dtype=float), ea)
    return E * grid.deta


def adjoint_apply(T: FioOperator, h: SampledFunction) -> SampledFunction:
    """Adjoint of a change-of-variables FIO ``Phi = sum phi_i(x_i) eta_i``.

    Substituting ``z = phi(x)`` turns ``T`` into a pseudodifferential operator
    ``tau(z, D)`` acting after composition; the adjoint is
    ``tau(z, D)^* [ h(phi^{-1}(z)) / |J_phi(phi^{-1}(z))| ]``.
    """
    maps = T.phase.axis_maps
    if maps is None or any(m.phi_inv is None or m.phi_prime is None for m in maps):
        raise GridError("adjoint_apply needs a phase phi(x).eta with inverse and derivative closures")
    grid = T.grid
    if h.grid != grid or h.domain != "time":
        raise GridError("h must be a time-domain function on the operator's grid")
    d = grid.d
    ax = grid.axis("time")
    hh = fourier(h).values
    inv = [np.asarray(m.phi_inv(ax), dtype=float) for m in maps]
    jac = [np.abs(np.asarray(m.phi_prime(v), dtype=float)) for m, v in zip(maps, inv)]
    mats = [_interp_matrix(v, grid) for v in inv]
    if d == 1:
        k = (mats[0] @ hh) / jac[0]
        zx = inv[0]
    else:
        k = mats[0] @ hh @ mats[1].T / np.multiply.outer(jac[0], jac[1])
        X1, X2 = np.meshgrid(inv[0], inv[1], indexing="ij")
        zx = np.stack([X1, X2], axis=-1)
    eta = grid.coords("frequency")
    tap = T.taper_values(eta)
    sym = T.symbol
    if sym.x_factor is not None and sym.eta_factor is not None:
        kk = SampledFunction(grid, np.conj(np.asarray(sym.x_factor(zx), dtype=complex)) * k)
        kh = fourier(kk).values * np.conj(np.asarray(sym.eta_factor(eta), dtype=complex)) * tap
        return fourier(SampledFunction(grid, kh, "frequency"), "inverse")
    # general symbol: hat(a^* k)(eta) = sum_z e^{-2 pi i z eta} conj tau(z, eta) k(z) dt^d
    z = grid.coords("time")
    zs = z.reshape(-1) if d == 1 else z.reshape(-1, d)
    xs = zx.reshape(-1) if d == 1 else zx.reshape(-1, d)
    ks = k.reshape(-1)
    es = eta.reshape(-1) if d == 1 else eta.reshape(-1, d)
    ts = tap.reshape(-1)
    res = np.empty(len(es), dtype=complex)
    per = max(1, _CHUNK // len(zs))
    for s in range(0, len(es), per):
        ec = es[s:s + per]
        eb = ec[:, None] if d == 1 else ec[:, None, :]
        zb = zs[None, :] if d == 1 else zs[None, :, :]
        xb = xs[None, :] if d == 1 else xs[None, :, :]
        K = np.exp(-2j * np.pi * _dot(zb, eb, d)) * np.conj(np.asarray(sym(xb, eb), dtype=complex))
        res[s:s + per] = (K @ ks) * ts[s:s + per]
    kh = res.reshape(grid.shape) * grid.dt ** d
    return fourier(SampledFunction(grid, kh, "frequency"), "inverse")


def phase_fl1_bound(phase: Phase, chi: Callable, xs: Sequence[float], grid: GridSpec) -> dict:
    """``sup_x ||exp(2 pi i Phi(x, .)) chi||_{FL^1}`` over ``xs`` (d=1), with an N-doubling check.

    The eta variable is sampled on ``grid``'s time lattice.
    """
    if grid.d != 1:
        raise GridError("phase_fl1_bound is implemented for d=1")

    def sup_on(gr):
        vals = []
        for x in xs:
            h = sample(lambda e: np.exp(2j * np.pi * phase(x, e)) * chi(e), gr)
            vals.append(lp_norm(fourier(h), 1))
        return max(vals), vals

    s1, per = sup_on(grid)
    s2, _ = sup_on(GridSpec(1, grid.N * 2, grid.L))
    ratio = abs(s2 - s1) / s2 if s2 > 0 else 0.0
    return {"sup_value": s1, "refined_sup": s2, "convergence_ratio": ratio, "per_x": per}
