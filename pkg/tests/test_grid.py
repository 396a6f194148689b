import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from fiolab.grid import GridError, GridSpec, SampledFunction, fourier, inner, lp_norm, sample, shift

from conftest import gauss


def test_gridspec_derived_quantities():
    g = GridSpec(1, 64, 3.0)
    assert g.dt * g.N == 2 * g.L
    assert g.dt * g.deta * g.N == pytest.approx(1.0, abs=1e-15)
    assert g.nyquist == pytest.approx(g.N / (4 * g.L))
    ax = g.axis("frequency")
    assert ax[0] == pytest.approx(-g.N / 2 * g.deta) and ax[-1] == pytest.approx((g.N / 2 - 1) * g.deta)


@pytest.mark.parametrize("d,N,L", [(3, 64, 1.0), (1, 48, 1.0), (1, 4, 1.0), (1, 64, 0.0)])
def test_gridspec_rejects_bad_parameters(d, N, L):
    with pytest.raises(GridError):
        GridSpec(d, N, L)


def test_sample_constant():
    f = sample(lambda x: np.ones(x.shape[:-1]), GridSpec(2, 16, 1.0))
    assert np.all(f.values == 1)


def test_sample_pure_exponential_roots_of_unity():
    g = GridSpec(1, 16, 0.5)
    f = sample(lambda t: np.exp(2j * np.pi * 3 * t), g)
    k = np.arange(16) - 8
    np.testing.assert_allclose(f.values, np.exp(2j * np.pi * 3 * k / 16), atol=1e-14)


def test_sample_gaussian_boundary_is_negligible():
    f = sample(gauss, GridSpec(1, 1024, 8.0))
    assert abs(f.values[0]) < 1e-80


def test_sample_reports_offending_point():
    with pytest.raises(GridError, match="lattice point"), np.errstate(divide="ignore"):
        sample(lambda t: 1.0 / t, GridSpec(1, 16, 1.0))


def test_values_immutable_and_finite():
    g = GridSpec(1, 16, 1.0)
    f = sample(np.cos, g)
    with pytest.raises(ValueError):
        f.values[0] = 3
    with pytest.raises(GridError):
        SampledFunction(g, np.full(16, np.nan))
    with pytest.raises(GridError):
        SampledFunction(g, np.zeros(8))


def test_fourier_of_constant_is_scaled_delta():
    g = GridSpec(1, 64, 1.0)
    fh = fourier(sample(lambda t: np.ones_like(t), g))
    expect = np.zeros(64)
    expect[32] = 2.0
    np.testing.assert_allclose(fh.values, expect, atol=1e-13)
    assert fh.domain == "frequency"


def test_fourier_gaussian_self_dual():
    g = GridSpec(1, 1024, 8.0)
    fh = fourier(sample(gauss, g))
    assert np.abs(fh.values - gauss(g.axis("frequency"))).max() <= 1e-10


def test_fourier_gaussian_self_dual_2d():
    g = GridSpec(2, 128, 4.0)
    fh = fourier(sample(lambda x: gauss(x, 2), g))
    assert np.abs(fh.values - gauss(g.coords("frequency"), 2)).max() <= 1e-10


def test_fourier_modulation_is_delta():
    g = GridSpec(1, 32, 0.5)
    fh = fourier(sample(lambda t: np.exp(2j * np.pi * 5 * t), g))
    expect = np.zeros(32)
    expect[16 + 5] = 1.0
    np.testing.assert_allclose(fh.values, expect, atol=1e-13)


def test_fourier_direction_checks():
    g = GridSpec(1, 16, 1.0)
    f = sample(np.cos, g)
    with pytest.raises(GridError):
        fourier(f, "inverse")
    with pytest.raises(GridError):
        fourier(fourier(f))


def test_lp_norm_examples():
    g = GridSpec(1, 256, 1.0)
    one = sample(lambda t: np.ones_like(t), g)
    assert lp_norm(one, 1) == pytest.approx(2.0, rel=1e-14)
    assert lp_norm(one, np.inf) == 1.0
    with pytest.raises(GridError):
        lp_norm(one, 0.5)


def test_lp_norm_gaussian_against_quadrature():
    oracle = np.sqrt(integrate.quad(lambda t: np.exp(-2 * np.pi * t * t), -np.inf, np.inf, epsabs=1e-14)[0])
    assert oracle == pytest.approx(2 ** -0.25, rel=1e-12)
    f = sample(gauss, GridSpec(1, 1024, 8.0))
    assert lp_norm(f, 2) == pytest.approx(oracle, abs=1e-8)


def test_inner_examples():
    g = GridSpec(1, 64, 0.5)
    e2 = sample(lambda t: np.exp(2j * np.pi * 2 * t), g)
    e3 = sample(lambda t: np.exp(2j * np.pi * 3 * t), g)
    assert abs(inner(e2, e3)) <= 1e-12
    f = sample(gauss, GridSpec(1, 1024, 8.0))
    assert inner(f, f).real == pytest.approx(lp_norm(f, 2) ** 2, rel=1e-12)


def test_inner_grid_mismatch():
    with pytest.raises(GridError):
        inner(sample(np.cos, GridSpec(1, 16, 1.0)), sample(np.cos, GridSpec(1, 32, 1.0)))


def test_parseval_gaussian_pair():
    g = GridSpec(1, 1024, 8.0)
    f = sample(gauss, g)
    h = sample(lambda t: gauss(t - 0.7) * np.exp(2j * np.pi * 1.3 * t), g)
    lhs, rhs = inner(f, h), inner(fourier(f), fourier(h))
    assert abs(lhs - rhs) <= 1e-8 * abs(lhs)


def test_shift_examples():
    g = GridSpec(1, 128, 4.0)
    f = sample(lambda t: gauss(t) * (1 + t), g)
    assert shift(f, 0.0, 0.0) is f or np.array_equal(shift(f, 0.0, 0.0).values, f.values)
    np.testing.assert_array_equal(shift(f, 4 * g.dt, 0.0).values, np.roll(f.values, 4))
    x = 0.3141
    lhs = fourier(shift(f, x, 0.0)).values
    rhs = np.exp(-2j * np.pi * x * g.axis("frequency")) * fourier(f).values
    assert np.abs(lhs - rhs).max() <= 1e-10


# -- properties ------------------------------------------------------------------

coef = st.floats(-3, 3, allow_nan=False)
offsets = st.floats(-2, 2, allow_nan=False)
freqs = st.floats(-4, 4, allow_nan=False)


def _packet(c, x0, w):
    return lambda t: c * gauss(t - x0) * np.exp(2j * np.pi * w * t)


@given(coef, offsets, freqs)
def test_round_trip(c, x0, w):
    f = sample(_packet(c + 0.1, x0, w), GridSpec(1, 256, 8.0))
    back = fourier(fourier(f), "inverse")
    assert np.abs(back.values - f.values).max() <= 1e-12 * np.abs(f.values).max()


@given(offsets, freqs)
def test_parseval_property(x0, w):
    f = sample(_packet(1.0, x0, w), GridSpec(1, 256, 8.0))
    assert abs(lp_norm(f, 2) - lp_norm(fourier(f), 2)) <= 1e-8 * lp_norm(f, 2)


@given(coef, coef, offsets, freqs)
def test_fourier_linearity(a, b, x0, w):
    g = GridSpec(1, 128, 6.0)
    f = sample(_packet(1.0, x0, w), g)
    h = sample(_packet(1.0, -x0, -w), g)
    lhs = fourier(f * a + h * b).values
    rhs = a * fourier(f).values + b * fourier(h).values
    assert np.abs(lhs - rhs).max() <= 1e-13 * (1 + abs(a) + abs(b))


@given(offsets, freqs)
def test_inner_conjugate_symmetric(x0, w):
    g = GridSpec(1, 128, 6.0)
    f = sample(_packet(1.0, x0, w), g)
    h = sample(_packet(0.5, 0.3, 1.1), g)
    assert inner(f, h) == pytest.approx(np.conj(inner(h, f)), abs=1e-14)


@given(st.floats(-1.5, 1.5), st.floats(-3, 3))
def test_commutation_relation(x, eta):
    g = GridSpec(1, 512, 8.0)
    f = sample(_packet(1.0, 0.2, 0.5), g)
    lhs = shift(shift(f, x, 0.0), 0.0, eta).values
    rhs = np.exp(2j * np.pi * x * eta) * shift(shift(f, 0.0, eta), x, 0.0).values
    assert np.abs(lhs - rhs).max() <= 1e-12


@given(st.floats(-2, 2), st.floats(-3, 3))
def test_shift_preserves_l2(x, eta):
    f = sample(_packet(1.0, 0.0, 0.0), GridSpec(1, 256, 8.0))
    assert lp_norm(shift(f, x, eta), 2) == pytest.approx(lp_norm(f, 2), rel=1e-10)
