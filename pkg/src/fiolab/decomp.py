"""Littlewood-Paley pieces, dilations and the dyadic conjugation of FIOs."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

from .fio import AxisMap, FioOperator, Phase, Symbol, _exp_matrix, apply_fio
from .grid import GridError, GridSpec, SampledFunction, fourier, lp_norm
from .norms import mp_norm
from .parallel import parallel_map
from .smooth import radial_cutoff, smooth_step

__all__ = [
    "LPSystem",
    "DilationIndices",
    "lp_system",
    "psi0",
    "psi",
    "highpass",
    "apply_multiplier",
    "dilate",
    "relabel",
    "highpassed",
    "dyadic_piece",
    "conjugated_operator",
    "conjugation_residual",
    "shell_packets",
    "almost_orthogonality",
]


def _r(eta, d):
    return np.abs(eta) if d == 1 else np.sqrt(np.sum(np.square(eta), axis=-1))


def psi0(eta, d: int = 1):
    """1 on ``|eta| <= 1``, 0 on ``|eta| >= 2``."""
    return radial_cutoff(_r(eta, d), 1.0, 2.0)


def psi(eta, d: int = 1):
    """``psi0(eta) - psi0(2 eta)``, supported in ``1/2 <= |eta| <= 2``."""
    eta = np.asarray(eta, dtype=float)
    return psi0(eta, d) - psi0(2.0 * eta, d)


def highpass(eta, d: int = 1, cut: float = 2.0):
    """0 on ``|eta| <= cut``, 1 on ``|eta| >= 2 cut``."""
    return smooth_step((_r(eta, d) - cut) / cut)


@dataclass(frozen=True)
class LPSystem:
    J_max: int
    grid: GridSpec

    def piece(self, j: int) -> Callable:
        d = self.grid.d
        if j == 0:
            return lambda eta: psi0(eta, d)
        s = 2.0 ** (-j)
        return lambda eta: psi(s * np.asarray(eta, dtype=float), d)

    def values(self, j: int) -> np.ndarray:
        return self.piece(j)(self.grid.coords("frequency"))

    def tail(self) -> np.ndarray:
        total = sum(self.values(j) for j in range(self.J_max + 1))
        return 1.0 - total

    def partition_deviation(self) -> float:
        """Max ``|psi_0 + sum_j psi_j + tail - 1|`` over grid frequencies."""
        total = sum(self.values(j) for j in range(self.J_max + 1))
        return float(np.max(np.abs(total + (1.0 - total) - 1.0)))

    def full_partition_deviation(self) -> float:
        """Max ``|sum_{j>=0} psi_j - 1|`` with enough shells to cover the grid."""
        rmax = float(self.grid.radius("frequency").max())
        J = max(self.J_max, int(np.ceil(np.log2(max(rmax, 1.0)))) + 1)
        total = sum(LPSystem(J, self.grid).values(j) for j in range(J + 1))
        return float(np.max(np.abs(total - 1.0)))


def lp_system(J_max: int, grid: GridSpec) -> LPSystem:
    if J_max < 1:
        raise GridError("J_max must be a positive integer")
    if 2.0 ** (J_max + 1) > grid.nyquist * (1 + 1e-12):
        raise GridError(f"2^(J_max+1) = {2 ** (J_max + 1)} exceeds the grid Nyquist {grid.nyquist:g}")
    return LPSystem(int(J_max), grid)


@dataclass(frozen=True)
class DilationIndices:
    p: float
    mu1: float
    mu2: float

    @classmethod
    def of(cls, p: float) -> "DilationIndices":
        if not p >= 1:
            raise ValueError(f"p must be in [1, inf], got {p}")
        inv_p = 0.0 if np.isinf(p) else 1.0 / p
        inv_q = 1.0 - inv_p
        if p <= 2:
            return cls(p, 0.0 - inv_q, 0.0 - inv_p)
        return cls(p, -inv_p, -inv_q)


def apply_multiplier(f: SampledFunction, m: Callable) -> SampledFunction:
    """``m(D) f = F^{-1}[m f^]``; ``m`` takes frequency coordinates."""
    if f.domain != "time":
        raise GridError("apply_multiplier expects a time-domain function")
    fh = fourier(f)
    return fourier(fh.with_values(fh.values * m(f.grid.coords("frequency"))), "inverse")


# -- dilations ---------------------------------------------------------------

def _eval_axis(coefs, grid: GridSpec, domain: str, points, axis: int):
    """Trigonometric interpolant of samples evaluated at ``points`` along one axis."""
    if domain == "time":
        dual = grid.axis("frequency")
        E = _exp_matrix(np.asarray(points, dtype=float), dual) * grid.deta
    else:
        dual = grid.axis("time")
        E = _exp_matrix(np.asarray(points, dtype=float), -dual) * grid.dt
    return np.moveaxis(np.tensordot(E, coefs, axes=([1], [axis])), 0, axis)


def _dual(f: SampledFunction) -> np.ndarray:
    return fourier(f).values if f.domain == "time" else fourier(f, "inverse").values


def _upsample(f: SampledFunction, k: int) -> np.ndarray:
    """Samples at spacing ``h / 2^k`` over the same cube (exact for band-limited data)."""
    g = f.grid
    N, s = g.N, 2 ** k
    Nf = N * s
    coefs = _dual(f)
    lo = (Nf - N) // 2
    sl = tuple(slice(lo, lo + N) for _ in range(g.d))
    pad = np.zeros((Nf,) * g.d, dtype=complex)
    pad[sl] = coefs
    if f.domain == "time":
        fine = GridSpec(g.d, Nf, g.L)
        return fourier(SampledFunction(fine, pad, "frequency"), "inverse").values
    fine = GridSpec(g.d, Nf, g.L * s)
    return fourier(SampledFunction(fine, pad, "time")).values


def dilate(f: SampledFunction, lam: float) -> SampledFunction:
    """``U_lam f(x) = f(lam x)`` on the same grid, ``f`` taken as zero outside the cube.

    ``lam = 2^k`` uses exact index maps, ``lam = 2^{-k}`` exact band-limited
    upsampling, anything else direct trigonometric interpolation.
    """
    if lam <= 0:
        raise GridError("dilation factor must be positive")
    if lam == 1:
        return f
    g = f.grid
    d, N = g.d, g.N
    h = f.spacing
    half = N * h / 2.0
    c = np.arange(N) - N // 2  # coordinate / spacing
    if lam < 1:
        # mass of f outside [-lam*half, lam*half) is lost by the dilation
        inside = np.abs(c * h) < lam * half
        m = inside if d == 1 else np.logical_and.outer(inside, inside)
        e = np.abs(f.values) ** 2
        lost = float(e[~m].sum() / max(e.sum(), 1e-300))
        if lost > 1e-8:
            raise GridError(f"dilated support leaves the cube (relative mass {lost:.2e})")
    k = np.log2(lam)
    kr = int(round(k))
    if abs(k - kr) < 1e-12 and kr > 0:
        s = 2 ** kr
        src = c * s + N // 2
        valid = (src >= 0) & (src < N)
        out = f.values
        for ax in range(d):
            idx = np.where(valid, src, 0)
            out = np.take(out, idx, axis=ax)
            shape = [1] * d
            shape[ax] = N
            out = out * valid.reshape(shape)
        return f.with_values(out)
    if abs(k - kr) < 1e-12 and kr < 0:
        s = 2 ** (-kr)
        fine = _upsample(f, -kr)
        idx = c + (N * s) // 2
        out = fine[np.ix_(*([idx] * d))]
        return f.with_values(out)
    pts = lam * c * h
    valid = np.abs(pts) < half
    pts = np.where(valid, pts, 0.0)
    out = _dual(f)
    for ax in range(d):
        out = _eval_axis(out, g, f.domain, pts, ax)
    mask = valid if d == 1 else np.multiply.outer(valid, valid)
    return f.with_values(out * mask)


def relabel(f: SampledFunction, grid: GridSpec) -> SampledFunction:
    """Same samples on a rescaled grid: ``U_{1/lam}`` from ``[-L, L)`` onto ``[-lam L, lam L)``."""
    if grid.N != f.grid.N or grid.d != f.grid.d:
        raise GridError("relabel needs grids with the same N and d")
    return SampledFunction(grid, f.values, f.domain)


# -- dyadic decomposition of operators ------------------------------------------

def highpassed(T: FioOperator, cut: float = 2.0) -> FioOperator:
    """``T`` with symbol multiplied by ``highpass(eta)`` so it vanishes for ``|eta| <= cut``."""
    s = T.symbol
    d = T.grid.d
    lo = cut if s.eta_window is None else max(cut, s.eta_window[0])
    hi = np.inf if s.eta_window is None else s.eta_window[1]
    if s.x_factor is not None and s.eta_factor is not None:
        ef = s.eta_factor
        sym = replace(s, eval=lambda x, e: s.x_factor(x) * ef(e) * highpass(e, d, cut),
                      eta_factor=lambda e: ef(e) * highpass(e, d, cut), eta_window=(lo, hi))
    else:
        sym = replace(s, eval=lambda x, e: s(x, e) * highpass(e, d, cut), eta_window=(lo, hi))
    return T.with_symbol(sym)


def _check_highpass(T: FioOperator):
    w = T.symbol.eta_window
    if w is None or w[0] < 2.0:
        raise GridError("the operator's symbol must vanish for |eta| <= 2 (declare eta_window)")


def dyadic_piece(T: FioOperator, j: int, lp: LPSystem, check: bool = True) -> FioOperator:
    """Operator with symbol ``sigma(x, eta) psi_j(eta)``."""
    if check:
        _check_highpass(T)
    if j < 0 or j > lp.J_max + 1:
        raise GridError(f"shell {j} outside the system (J_max={lp.J_max})")
    pj = lp.piece(j)
    s = T.symbol
    lo, hi = (0.0, 2.0) if j == 0 else (2.0 ** (j - 1), 2.0 ** (j + 1))
    if s.eta_window is not None:
        lo, hi = max(lo, s.eta_window[0]), min(hi, s.eta_window[1])
    if s.eta_factor is not None and s.x_factor is not None:
        ef = s.eta_factor
        sym = replace(s, eval=lambda x, e: s.x_factor(x) * ef(e) * pj(e),
                      eta_factor=lambda e: ef(e) * pj(e), eta_window=(lo, hi))
    else:
        sym = replace(s, eval=lambda x, e: s(x, e) * pj(e), eta_window=(lo, hi))
    return T.with_symbol(sym)


def conjugated_operator(T: FioOperator, lam: float) -> FioOperator:
    """``T~`` with phase ``lam Phi(x/lam, eta)`` and symbol ``sigma(x/lam, lam eta)`` on the grid of half-width ``lam L``."""
    ph = T.phase
    maps = None
    if ph.axis_maps is not None:
        maps = tuple(
            AxisMap(
                (lambda m: lambda t: lam * m.phi(t / lam))(m),
                None if m.phi_inv is None else (lambda m: lambda y: lam * m.phi_inv(y / lam))(m),
                None if m.phi_prime is None else (lambda m: lambda t: m.phi_prime(t / lam))(m),
            )
            for m in ph.axis_maps
        )
    cone = None if ph.cone is None else (lambda x, e: ph.cone(x / lam, e))
    new_phase = Phase(
        ph.d,
        eval=lambda x, e: lam * ph.eval(x / lam, e),
        grad_x=lambda x, e: ph.grad_x(x / lam, e),
        grad_eta=lambda x, e: lam * ph.grad_eta(x / lam, e),
        mixed_hessian=lambda x, e: ph.mixed_hessian(x / lam, e),
        homogeneous=ph.homogeneous,
        cone=cone,
        axis_maps=maps,
        name=f"{lam:g}*Phi(x/{lam:g}, eta)",
    )
    s = T.symbol
    win = None if s.eta_window is None else (s.eta_window[0] / lam, s.eta_window[1] / lam)
    R = None if s.x_support_radius is None else s.x_support_radius * lam
    if s.x_factor is not None and s.eta_factor is not None:
        xf, ef = s.x_factor, s.eta_factor
        sym = Symbol(s.order, lambda x, e: xf(x / lam) * ef(lam * e), R, win,
                     lambda x: xf(x / lam), lambda e: ef(lam * e), s.x_center * lam)
    else:
        sym = Symbol(s.order, lambda x, e: s(x / lam, lam * e), R, win, x_center=s.x_center * lam)
    return FioOperator(new_phase, sym, T.grid.rescaled(lam), T.taper)


def conjugation_residual(T: FioOperator, j: int, u: SampledFunction, lp: Optional[LPSystem] = None) -> float:
    """``||T^(j) u - U_lam T~^(j) U_{1/lam} u|| / ||u||`` with ``lam = 2^{j/2}``."""
    if lp is None:
        lp = LPSystem(max(j, 1), T.grid)
    piece = dyadic_piece(T, j, lp, check=j > 0)
    lhs = apply_fio(piece, u)
    lam = 2.0 ** (j / 2.0)
    tt = conjugated_operator(piece, lam)
    if tt.symbol.x_support_radius is not None:
        reach = abs(tt.symbol.x_center) + tt.symbol.x_support_radius
        if reach > tt.grid.L:
            raise GridError("dilated x-support overflows the rescaled grid")
    v = relabel(u, tt.grid)
    rhs = relabel(apply_fio(tt, v), T.grid)
    return lp_norm(lhs - rhs, 2) / lp_norm(u, 2)


def shell_packets(grid: GridSpec, shells, center: float = 0.5) -> SampledFunction:
    """Sum of Gaussian wave packets at ``x = center``, one at the middle ``2^j`` of each shell."""
    x = grid.coords("time")
    r2 = np.square(x - center) if grid.d == 1 else np.sum(np.square(x - center), axis=-1)
    env = np.exp(-np.pi * r2)
    lead = x if grid.d == 1 else x[..., 0]
    vals = sum(env * np.exp(2j * np.pi * 2.0 ** j * lead) for j in shells)
    return SampledFunction(grid, vals)


def almost_orthogonality(
    T: FioOperator,
    u: SampledFunction,
    K_max: int,
    J_max: int,
    rel_tol: float = 1e-3,
    row_floor: float = 1e-8,
) -> dict:
    """Matrix ``A[j-1, k] = ||psi_k(D) T^(j) u||_{M^inf}`` and its measured band width.

    Row ``j`` holds the output of piece ``T^(j)`` split over output shells
    ``k = 0..K_max``.  The band width is the largest ``|k - j|`` whose entry
    exceeds ``rel_tol`` times the row maximum.  Rows whose maximum is below
    ``row_floor`` times the global maximum (no input in that shell) are skipped.
    """
    lp = LPSystem(max(J_max, K_max), T.grid)
    pieces = [dyadic_piece(T, j, lp) for j in range(1, J_max + 1)]
    outs = [apply_fio(P, u) for P in pieces]
    cells = [(j, k) for j in range(J_max) for k in range(K_max + 1)]

    def entry(jk):
        j, k = jk
        return mp_norm(apply_multiplier(outs[j], lp.piece(k)), np.inf).value

    A = np.array(parallel_map(entry, cells)).reshape(J_max, K_max + 1)
    gmax = float(A.max())
    live = [j for j in range(J_max) if A[j].max() >= row_floor * gmax]
    band = 0
    for j in live:
        for k in range(K_max + 1):
            if A[j, k] > rel_tol * A[j].max():
                band = max(band, abs(k - (j + 1)))
    worst = 0.0
    for j in live:
        for k in range(K_max + 1):
            if abs(k - (j + 1)) > band:
                worst = max(worst, A[j, k] / A[j].max())
    return {
        "matrix": A,
        "band_width": band,
        "off_band_max": worst,
        "global_max": gmax,
        "skipped_rows": [j + 1 for j in range(J_max) if j not in live],
    }
