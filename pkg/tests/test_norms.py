import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from fiolab.grid import GridError, GridSpec, lp_norm, sample, shift
from fiolab.norms import (
    bessel,
    equivalence_report,
    fl_norm,
    mp_norm,
    partition_sum,
    uniform_partition,
)
from fiolab.smooth import interval_bump
from fiolab import sharpness as sh

from conftest import gauss

G = GridSpec(1, 1024, 8.0)


def test_fl_norm_translation_invariant():
    f = sample(lambda t: gauss(t) * (1 + 0.3 * t), G)
    for x in (0.37, 2 * G.dt, -1.1):
        assert fl_norm(shift(f, x), 1).value == pytest.approx(fl_norm(f, 1).value, rel=1e-6)


def test_fl_norm_modulation_invariant():
    grid = GridSpec(1, 2048, 4.0)
    fam = sh.default_family((1, 5, 20, 40))
    chi = sample(fam.chi, grid)
    for n in fam.n_list:
        for p in (1, 2):
            assert fl_norm(sh.make_fn(fam, n, grid), p).value == pytest.approx(fl_norm(chi, p).value, rel=1e-6)


def test_fl_norm_gaussian():
    f = sample(gauss, G)
    assert fl_norm(f, 2).value == pytest.approx(lp_norm(f, 2), rel=1e-8)
    oracle = integrate.quad(lambda e: np.exp(-np.pi * e * e), -np.inf, np.inf, epsabs=1e-14)[0]
    assert fl_norm(f, 1).value == pytest.approx(oracle, rel=1e-6)


def test_fl_norm_rejects_frequency_input():
    from fiolab.grid import fourier

    with pytest.raises(GridError):
        fl_norm(fourier(sample(gauss, G)), 1)


def test_mp2_equals_l2_for_gaussian():
    f = sample(gauss, G)
    assert mp_norm(f, 2).value == pytest.approx(lp_norm(f, 2), rel=1e-6)


def test_mp1_methods_agree_up_to_constant():
    grid = GridSpec(1, 8192, 4.0)
    fam = sh.default_family((8, 16, 32, 64, 128))
    ratios = []
    for n in fam.n_list:
        f = sh.make_fn(fam, n, grid)
        ratios.append(mp_norm(f, 1, method="stft").value / mp_norm(f, 1, method="decomp").value)
    assert max(ratios) / min(ratios) <= 1.5


def test_mp_methods_both_finite_p_inf():
    f = sample(lambda t: gauss(t - 0.5) * np.exp(2j * np.pi * 3 * t), G)
    for method in ("stft", "decomp"):
        v = mp_norm(f, np.inf, method=method).value
        assert np.isfinite(v) and v > 0


@pytest.mark.parametrize("m", [-1.0, 1.0])
def test_weighted_translate_bound(m):
    vals = []
    for y in (0, 4, 16, 64):
        h = sample(lambda t: gauss(t) * (1 + (t - y) ** 2) ** (m / 2), G)
        vals.append(mp_norm(h, 1).value / (1 + y * y) ** (m / 2))
    assert max(vals) / min(vals) <= 10


def test_bessel_identity_and_round_trip():
    f = sample(lambda t: gauss(t - 0.2) * np.exp(2j * np.pi * t), G)
    assert bessel(f, 0) is f
    back = bessel(bessel(f, 1.5), -1.5)
    assert lp_norm(back - f, 2) <= 1e-10 * lp_norm(f, 2)


def test_bessel_s2_matches_closed_form():
    # (1 - Laplacian / (4 pi^2)) exp(-pi t^2) = exp(-pi t^2) (1 + 1/(2 pi) - t^2)
    t = G.axis()
    got = bessel(sample(gauss, G), 2).values
    expect = gauss(t) * (1 + 1 / (2 * np.pi) - t * t)
    assert np.abs(got - expect).max() <= 1e-8


def test_partition_is_exact():
    for grid in (G, GridSpec(1, 4096, 2.0), GridSpec(2, 64, 2.0)):
        assert np.abs(partition_sum(grid) - 1).max() <= 1e-12
    eta = np.linspace(-3, 3, 1001)
    assert np.all(uniform_partition(eta) >= 0)
    assert np.all(uniform_partition(eta[np.abs(eta) >= 1]) == 0)


def test_equivalence_examples():
    grid = GridSpec(1, 2048, 4.0)
    fam = sh.default_family(tuple(range(1, 33)))
    rep = equivalence_report([sh.make_fn(fam, n, grid) for n in fam.n_list], 1)
    assert rep.spread <= 10
    single = equivalence_report([sh.make_fn(fam, 3, grid)], 1)
    assert single.spread == 1.0


def test_equivalence_dilated_bumps_p2():
    grid = GridSpec(1, 2048, 4.0)
    fam = [sample(lambda t, c=c: interval_bump(t, 0.5 - c, 0.5 + c), grid) for c in (0.2, 0.3, 0.4, 0.5)]
    rep = equivalence_report(fam, 2)
    for r in rep.ratios:
        assert r == pytest.approx(1.0, abs=1e-6)


def test_equivalence_support_violation_names_member():
    grid = GridSpec(1, 2048, 4.0)
    good = sample(lambda t: interval_bump(t, 0.1, 0.9), grid)
    bad = sample(lambda t: gauss(t - 2.0), grid)
    with pytest.raises(GridError, match="member 1"):
        equivalence_report([good, bad], 1)


def _test_family():
    grid = GridSpec(1, 2048, 4.0)
    out = [sample(lambda t, x=x: gauss(t - x) * np.exp(2j * np.pi * w * t), grid) for x, w in [(0, 0), (0.5, 3), (-1, 10)]]
    fam = sh.default_family((4, 16, 48))
    return out + [sh.make_fn(fam, n, grid) for n in fam.n_list]


def test_embedding_ratio_bounded_over_family():
    fam = _test_family()
    for p, q in [(1, 2), (2, np.inf), (1, np.inf)]:
        r = [mp_norm(f, q).value / mp_norm(f, p).value for f in fam]
        assert max(r) <= 10


@given(st.floats(-3, 3), st.floats(-3, 3))
def test_norms_absolutely_homogeneous(re, im):
    c = complex(re, im)
    if abs(c) < 1e-3:
        c = 1.0
    f = sample(lambda t: gauss(t - 0.3) * np.exp(2j * np.pi * 2 * t), GridSpec(1, 512, 4.0))
    for p in (1, 2, np.inf):
        assert fl_norm(f * c, p).value == pytest.approx(abs(c) * fl_norm(f, p).value, rel=1e-12)
        assert mp_norm(f * c, p).value == pytest.approx(abs(c) * mp_norm(f, p).value, rel=1e-12)


@given(st.floats(-2, 2))
def test_fl_translation_property(x):
    f = sample(lambda t: gauss(t) * (2 + np.sin(t)), GridSpec(1, 512, 8.0))
    assert fl_norm(shift(f, x), 1).value == pytest.approx(fl_norm(f, 1).value, rel=1e-6)
