import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import quad
from scipy.special import fresnel

from fiolab.grid import GridError, GridSpec, fourier, sample
from fiolab.norms import fl_norm
from fiolab import sharpness as sh

D = sh.default_diffeo()
G1 = GridSpec(1, 2 ** 14, 2.0)


# -- diffeomorphism -----------------------------------------------------------------

def test_identity_outside_unit_interval():
    assert sh.default_diffeo().phi(np.array([-2.0, 3.0])).tolist() == [-2.0, 3.0]
    t = np.concatenate([np.linspace(-4, -1, 301), np.linspace(1, 4, 301)])
    assert np.array_equal(D.phi(t), t)


def test_diffeo_derivative_bounds():
    t = np.linspace(-1, 2, 300001)
    d1 = D.phi_prime(t)
    assert d1.min() >= 0.8 - 1e-12 and d1.max() <= 1.2 + 1e-12
    c, C = D.bounds
    assert 0.8 - 1e-12 <= c and C <= 1.2 + 1e-12
    # derivative matches finite differences of phi
    h = 1e-6
    tt = np.linspace(0.05, 0.95, 91)
    fd = (D.phi(tt + h) - D.phi(tt - h)) / (2 * h)
    assert np.abs(fd - D.phi_prime(tt)).max() <= 1e-7


def test_phi_at_half():
    assert D.phi(0.5) == pytest.approx(0.5 + D.beta * np.exp(-4.0), abs=1e-15)


def test_inverse_round_trip():
    y = np.linspace(-2, 3, 5001)
    assert np.abs(D.phi(D.phi_inv(y)) - y).max() <= 1e-10


def test_certified_interval():
    a, b = D.interval
    assert 0 < a < b < 1 and D.rho > 0
    t = np.linspace(a, b, 20001)
    assert np.abs(D.phi_second(t)).min() >= D.rho * (1 - 1e-9)


# -- counterexample family ------------------------------------------------------------

def test_chi_support_and_overlap():
    fam = sh.default_family()
    t = np.concatenate([np.linspace(-2, 0, 1001), np.linspace(1, 3, 1001)])
    assert np.abs(fam.chi(t)).max() <= 1e-14
    a, b = D.interval
    assert fam.chi(D.phi(np.linspace(a, b, 101))).max() > 0
    assert fam.chi(np.array([0.5]))[0] == pytest.approx(1.0)


def test_make_fn_zero_is_chi():
    fam = sh.default_family()
    f = sh.make_fn(fam, 0, G1)
    assert np.array_equal(f.values, fam.chi(G1.axis("time")).astype(complex))


def test_make_fn_is_translated_spectrum():
    grid = GridSpec(1, 4096, 2.0)
    fam = sh.default_family()
    n = 16
    shift = int(round(n / grid.deta))
    lhs = fourier(sh.make_fn(fam, n, grid)).values
    rhs = np.roll(fourier(sh.make_fn(fam, 0, grid)).values, shift)
    assert np.abs(lhs - rhs).max() <= 1e-10


def test_make_fn_2d_factors():
    grid = GridSpec(2, 128, 1.5)
    fam = sh.default_family(d=2)
    f = sh.make_fn(fam, 8, grid).values
    f1 = sh.make_fn(sh.default_family(), 8, GridSpec(1, 128, 1.5)).values
    assert np.abs(f - np.outer(f1, f1)).max() <= 1e-15


def test_make_fn_errors():
    fam = sh.default_family()
    with pytest.raises(GridError):
        sh.make_fn(fam, 2000, G1)  # Nyquist 4096, 0.4 x = 1638.4
    with pytest.raises(GridError):
        sh.make_fn(sh.default_family(d=2), 8, G1)


@pytest.mark.parametrize("p", [1.0, 1.5, 2.0, np.inf])
def test_fl_norm_modulation_invariant(p):
    grid = GridSpec(1, 4096, 2.0)
    fam = sh.default_family()
    vals = [fl_norm(sh.make_fn(fam, n, grid), p).value for n in (8, 32, 96, 128)]
    assert np.ptp(vals) <= 1e-6 * vals[0]


# -- cutoff and test operator ------------------------------------------------------------

def test_cutoff_G():
    x = np.linspace(-1, 2, 3001)
    g = sh.cutoff_G(x)
    assert np.all(g[(x >= 0) & (x <= 1)] == 1.0)
    assert np.all(g[(x <= -0.5) | (x >= 1.5)] == 0.0)
    assert g.min() >= 0
    xy = np.stack(np.meshgrid(x[::100], x[::100], indexing="ij"), axis=-1)
    assert np.array_equal(sh.cutoff_G(xy, 2), np.multiply.outer(sh.cutoff_G(x[::100]), sh.cutoff_G(x[::100])))


def test_operator_symbol_order():
    T = sh.test_operator(D, -0.5, G1)
    assert T.symbol.order == -0.5
    eta = np.array([0.0, 3.0])
    assert T.symbol(np.full(2, 0.5), eta) == pytest.approx((1 + eta ** 2) ** -0.25)


# -- exponent fits ------------------------------------------------------------------

def test_fit_exact_power():
    pairs = [(n, 3.0 * n ** 0.5) for n in (2, 4, 8, 16, 32)]
    r = sh.fit_exponent(pairs)
    assert abs(r["slope"] - 0.5) <= 1e-12 and r["residual"] <= 1e-12


def test_fit_constant():
    assert abs(sh.fit_exponent([(n, 7.0) for n in (1, 2, 3, 5)])["slope"]) <= 1e-12


def test_fit_perturbed():
    pairs = [(n, 2.0 * n ** 0.5 * (1 + 0.01 * (-1) ** n)) for n in range(2, 40)]
    assert 0.48 <= sh.fit_exponent(pairs)["slope"] <= 0.52


def test_fit_errors():
    with pytest.raises(ValueError):
        sh.fit_exponent([(1, 1.0), (2, 0.0), (3, 1.0)])
    with pytest.raises(ValueError):
        sh.fit_exponent([(1, 1.0), (2, 2.0)])


@given(st.floats(-3, 3), st.floats(0.1, 10))
def test_fit_recovers_any_power(a, c):
    pairs = [(n, c * n ** a) for n in (3, 7, 20, 50)]
    assert sh.fit_exponent(pairs)["slope"] == pytest.approx(a, abs=1e-9)


# -- van der Corput --------------------------------------------------------------------

def _fresnel_oracle(lam):
    z = np.sqrt(lam / np.pi)
    S, C = fresnel(z)
    return np.sqrt(lam) * abs(2 * np.sqrt(np.pi / lam) * (C + 1j * S))


def test_fresnel_against_oracle():
    lams = [10.0, 100.0, 1e3, 1e4]
    r = sh.vdc_check(lambda t: t * t / 2, (-1.0, 1.0), 2, lams)
    for lam, v in zip(lams, r["per_lambda"]):
        assert v == pytest.approx(_fresnel_oracle(lam), rel=1e-8)
    assert r["per_lambda"][-1] == pytest.approx(np.sqrt(2 * np.pi), rel=0.02)


def test_linear_phase_vdc():
    lams = [1.0, 7.0, 50.0, 300.0]
    r = sh.vdc_check(lambda t: t, (0.0, 1.0), 1, lams)
    for lam, v in zip(lams, r["per_lambda"]):
        assert v == pytest.approx(abs(np.exp(1j * lam) - 1), abs=1e-10)
        assert v <= 2 + 1e-12


def test_diffeo_vdc():
    r = sh.diffeo_vdc(D, [10.0, 100.0, 1e3, 1e4])
    assert r["sup_scaled"] <= 10 and r["refinement_change"] <= 0.05
    # independent quadrature at the smallest frequency
    a, b = D.interval
    re = quad(lambda t: np.cos(2 * np.pi * 10 * D.phi(t)), a, b, epsabs=1e-13)[0]
    im = quad(lambda t: np.sin(2 * np.pi * 10 * D.phi(t)), a, b, epsabs=1e-13)[0]
    assert r["per_lambda"][0] == pytest.approx(np.sqrt(D.rho * 10) * abs(re - 1j * im), rel=1e-8)


def test_vdc_quadrature_error():
    with pytest.raises(sh.QuadratureError):
        sh.vdc_check(lambda t: t * t / 2, (-1.0, 1.0), 2, [1e4], density=1, order=2)


# -- lower-bound chain ---------------------------------------------------------------

def test_snapped_interval():
    a, b = sh.snapped_interval(D.interval, G1)
    assert D.interval[0] <= a < b <= D.interval[1]
    assert a / G1.dt == round(a / G1.dt) and b / G1.dt == round(b / G1.dt)


@pytest.mark.parametrize("n", [16, 64, 256])
def test_indicator_wave_plancherel(n):
    a, b = sh.snapped_interval(D.interval, G1)
    w = sh.indicator_wave(D, n, G1)
    assert fl_norm(w, 2).value == pytest.approx((b - a) ** 0.5, rel=1e-6)


def test_indicator_wave_decay():
    ns = [16, 32, 64, 128, 256, 512]
    vals = [fl_norm(sh.indicator_wave(D, n, G1), np.inf).value for n in ns]
    assert sh.fit_exponent(list(zip(ns, vals)))["slope"] <= -0.45


@pytest.mark.parametrize("n", [32, 128, 512])
def test_holder_chain_p1(n):
    fam = sh.default_family()
    a, b = sh.snapped_interval(D.interval, G1)
    comp = sample(lambda t: fam.chi(D.phi(t)) * np.exp(2j * np.pi * n * D.phi(t)), G1)
    w = sh.indicator_wave(D, n, G1)
    lhs = fl_norm(comp, 1).value * fl_norm(w, np.inf).value
    C = quad(lambda t: fam.chi(D.phi(t)), a, b, epsabs=1e-14)[0]
    assert C > 0
    assert lhs >= C - 1e-4
    # the bilinear pairing itself reproduces C up to the sampling of the sharp cutoff
    assert abs(np.sum(comp.values * w.values) * G1.dt) == pytest.approx(C, abs=1e-4)


# -- experiments (small grid; the full-size runs live in the acceptance suite) --------

def test_experiment_structure():
    grid = GridSpec(1, 4096, 2.0)
    fam = sh.default_family((8, 16, 32, 64))
    r = sh.sharpness_experiment(1.0, 0.0, fam, D, grid, norm_method=None)
    assert [row[0] for row in r.rows] == [8, 16, 32, 64]
    assert np.isfinite(r.fitted_exponent) and r.theory_exponent == 0.5
    assert all(np.isnan(row[3]) for row in r.rows)
    assert np.ptp([row[1] for row in r.rows]) <= 1e-6 * r.rows[0][1]


def test_experiment_with_mp_norms():
    grid = GridSpec(1, 2048, 2.0)
    fam = sh.default_family((8, 16, 32))
    r = sh.sharpness_experiment(2.0, 0.0, fam, D, grid)
    assert all(np.isfinite(v) for row in r.rows for v in row)
    assert abs(r.fitted_exponent) <= 0.05


def test_experiment_rejects_large_p():
    with pytest.raises(GridError):
        sh.sharpness_experiment(3.0, 0.0, sh.default_family(), D, G1)
