import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad
from scipy.special import gamma as gamma_fn

from semiclab.errors import (CutoffTooSmallError, DimensionError, DomainError, InvalidDensityError,
                             NotRegularError, RangeError, SingularFrequencyError)
from semiclab.lattice import Grid, operator_norm
from semiclab.potentials import (PowerLaw, Regular, apply_cutoff, constant_potential, convolve,
                                 exchange_kernel, fourier_l1, harmonic, load_tabulated,
                                 pair_fourier, riesz_constant, sample_external, tail_lp_norm,
                                 v_norm, zero_potential)


def test_fourier_homogeneity_and_singularity():
    V = PowerLaw(1.0, 0.5)
    assert pair_fourier(V, 2.4) / pair_fourier(V, 1.2) == pytest.approx(2**-0.5, rel=1e-14)
    with pytest.raises(SingularFrequencyError):
        pair_fourier(V, 0.0)


@pytest.mark.parametrize("a", [0.2, 0.5, 0.8])
def test_riesz_constant_against_cosine_transform(a):
    # Vhat(xi) = pi^-1 int_0^inf cos(x xi) x^-a dx, done by Fourier-weighted quadrature
    xi = 1.7
    val, _ = quad(lambda x: x ** (-a), 0, 1, weight="cos", wvar=xi)
    tail, _ = quad(lambda x: x ** (-a), 1, np.inf, weight="cos", wvar=xi)
    oracle = (val + tail) / np.pi
    assert pair_fourier(PowerLaw(1.0, a), xi) == pytest.approx(oracle, rel=1e-6)
    # closed form Gamma(1-a) sin(pi a / 2) / pi
    assert riesz_constant(1, a) == pytest.approx(gamma_fn(1 - a) * np.sin(np.pi * a / 2) / np.pi, rel=1e-12)


def test_regular_profile_lookup():
    V = Regular(np.array([0.0, 1.0, 2.0]), np.array([2.0, 1.0, 0.5]))
    assert pair_fourier(V, 1.0) == 1.0
    assert pair_fourier(V, 1.5) == pytest.approx(0.75)
    assert pair_fourier(V, -0.5) == pytest.approx(1.5)
    with pytest.raises(DomainError):
        Regular(np.array([0.0, 1.0]), np.array([1.0, -1.0]))


def test_power_law_validation():
    with pytest.raises(DomainError):
        PowerLaw(1.0, 1.2)
    with pytest.raises(DomainError):
        PowerLaw(-1.0, 0.5)


def test_cutoff_value_at_origin_and_profile():
    g = Grid.uniform(3.0, 513)
    V = PowerLaw(1.0, 0.5)
    cut = apply_cutoff(V, 8.0, g)
    exact0 = 2 * riesz_constant(1, 0.5) * 8.0**0.5 / 0.5
    assert cut.nodes(np.array([0.0]))[0] == pytest.approx(exact0, rel=1e-12)
    assert fourier_l1(cut) == pytest.approx(exact0, rel=1e-12)
    assert np.all(cut.nodes.w >= 0) and np.all(cut.nodes.xi <= 8.0)
    with pytest.raises(CutoffTooSmallError):
        apply_cutoff(V, 0.5, g)


def test_cutoff_values_against_quadrature():
    g = Grid.uniform(3.0, 257)
    V = PowerLaw(1.0, 0.5)
    cut = apply_cutoff(V, 8.0, g)
    c = riesz_constant(1, 0.5)
    for x in (0.1, 0.7, 2.3):
        val, _ = quad(lambda s: 2 * c * s**-0.5 * np.cos(s * x), 0, 8.0, limit=200)
        assert cut.nodes(np.array([x]))[0] == pytest.approx(val, rel=1e-9)


def test_cutoff_tail_l2_decreases():
    g = Grid.uniform(3.0, 2048)
    V = PowerLaw(1.0, 0.5)
    norms = [np.sqrt(g.integrate(apply_cutoff(V, L, g).tail ** 2)) for L in (4, 8, 16, 32)]
    assert np.all(np.diff(norms) < 0)


def test_cutoff_norm_growth_exponent():
    g = Grid.uniform(3.0, 257)
    V = PowerLaw(1.0, 0.5)
    lams = np.array([16.0, 32.0, 64.0, 128.0])
    norms = [v_norm(apply_cutoff(V, L, g)) for L in lams]
    slope = np.polyfit(np.log(lams), np.log(norms), 1)[0]
    assert 1.4 <= slope <= 1.6


def test_v_norm_cases():
    ind = Regular(np.array([0.0, 1.0]), np.array([1.0, 1.0]))
    assert v_norm(ind) == pytest.approx(3.0, rel=1e-14)
    assert v_norm(Regular(ind.xi, 2.5 * ind.profile)) == pytest.approx(7.5, rel=1e-14)
    with pytest.raises(NotRegularError):
        v_norm(PowerLaw(1.0, 0.5))
    g = Grid.uniform(3.0, 257)
    c = riesz_constant(1, 0.5)
    val, _ = quad(lambda s: 2 * c * s**-0.5 * (1 + s), 0, 16.0, limit=200)
    assert v_norm(apply_cutoff(PowerLaw(1.0, 0.5), 16.0, g)) == pytest.approx(val, rel=1e-6)


def test_tail_range_and_monotone():
    g = Grid.uniform(3.0, 1025)
    with pytest.raises(RangeError):
        tail_lp_norm(apply_cutoff(PowerLaw(1.0, 0.5), 8.0, g), 2.0)
    V = PowerLaw(1.0, 0.25)
    vals = [tail_lp_norm(apply_cutoff(V, L, g), 2.5) for L in (4, 8, 16, 32)]
    assert np.all(np.diff(vals) < 0)


def test_tail_vanishes_for_band_limited_regular():
    g = Grid.uniform(3.0, 257)
    V = Regular(np.array([0.0, 2.0]), np.array([1.0, 0.0]))
    cut = apply_cutoff(V, 4.0, g)
    assert np.max(np.abs(cut.tail)) == 0.0
    assert tail_lp_norm(cut, 2.0) == 0.0


@pytest.mark.parametrize("p,target", [(2.0, -0.25), (2.5, -0.15)])
def test_tail_slope_admissible(p, target):
    g = Grid.uniform(8.0, 2**13 + 1)
    V = PowerLaw(1.0, 0.25)
    lams = np.array([4.0, 8.0, 16.0, 32.0, 64.0])
    vals = [tail_lp_norm(apply_cutoff(V, L, g), p) for L in lams]
    slope = np.polyfit(np.log(lams), np.log(vals), 1)[0]
    assert abs(slope - target) <= 0.15 * abs(target)


def test_convolve_point_mass_and_constant():
    g = Grid.uniform(3.0, 601)
    rho = np.zeros(g.n)
    mid = g.n // 2
    rho[mid] = 1.0 / g.spacing
    cut = apply_cutoff(PowerLaw(1.0, 0.5), 8.0, g)
    out = convolve(cut, rho, g)
    assert np.allclose(out, cut.nodes(g.points), rtol=1e-12)
    out_c = convolve(constant_potential(2.0), np.full(g.n, 0.1), g)
    assert np.allclose(out_c, 2.0 * g.integrate(np.full(g.n, 0.1)), rtol=1e-12)
    with pytest.raises(InvalidDensityError):
        convolve(cut, -np.ones(g.n), g)
    with pytest.raises(DimensionError):
        convolve(cut, np.ones(5), g)


def test_convolve_power_law_uniform_density():
    g = Grid.uniform(3.0, 2048)
    rho = np.where(np.abs(g.points) <= 1.0, 0.5, 0.0)
    out = convolve(PowerLaw(1.0, 0.5), rho, g)
    for x in (-1.7, -0.4, 0.0, 0.3, 0.9, 2.0):
        j = int(np.argmin(np.abs(g.points - x)))
        xj = g.points[j]
        pts = [xj] if -1 < xj < 1 else None
        val, _ = quad(lambda y: 0.5 * abs(xj - y) ** -0.5, -1, 1, points=pts, limit=200)
        assert out[j] == pytest.approx(val, rel=5e-3)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31 - 1), st.floats(0.1, 3.0))
def test_convolve_linear_and_reflection(seed, c):
    g = Grid.uniform(2.0, 128)
    rng = np.random.default_rng(seed)
    r1, r2 = rng.uniform(0, 1, size=(2, g.n))
    V = PowerLaw(0.7, 0.4)
    lhs = convolve(V, r1 + c * r2, g)
    assert np.allclose(lhs, convolve(V, r1, g) + c * convolve(V, r2, g), rtol=1e-10, atol=1e-12)
    assert np.allclose(convolve(V, r1[::-1], g), convolve(V, r1, g)[::-1], rtol=1e-10)


def test_exchange_kernel(rng):
    g = Grid.uniform(3.0, 200)
    q, _ = np.linalg.qr(rng.normal(size=(g.n, 3)))
    gamma = q @ q.T
    assert not np.any(exchange_kernel(zero_potential(), gamma, g))
    cut = apply_cutoff(PowerLaw(1.0, 0.5), 8.0, g)
    assert not np.any(exchange_kernel(cut, np.zeros_like(gamma), g))
    X = exchange_kernel(cut, gamma, g)
    assert operator_norm(X) <= fourier_l1(cut) + 1e-10
    with pytest.raises(DimensionError):
        exchange_kernel(cut, np.eye(3), g)


def test_external_potentials(tmp_path):
    g = Grid.uniform(3.0, 64)
    assert np.allclose(sample_external(harmonic(2.0), g), 2.0 * g.points**2)
    with pytest.raises(DomainError):
        sample_external(harmonic(0.05), g)
    path = tmp_path / "u.txt"
    x = np.linspace(-4, 4, 81)
    np.savetxt(path, np.c_[x, x**2], header="potential d=1", comments="# ")
    U = load_tabulated(path)
    assert U.d == 1
    assert np.allclose(sample_external(U, g), g.points**2, atol=0.01)
    bad = tmp_path / "bad.txt"
    np.savetxt(bad, np.c_[x, x**2])
    with pytest.raises(DomainError):
        load_tabulated(bad)
