import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from semiclab.errors import InvalidGridError, InvalidWindowError
from semiclab.lattice import (Grid, ModelParams, build_laplacian, count_in_window, hs_norm,
                              operator_norm, spectral_decomposition, spectral_projection_below,
                              trace_norm)


def harmonic_h(hbar, L=8.0, n=2048):
    g = Grid.uniform(L, n)
    return build_laplacian(g, hbar) + np.diag(g.points**2)


def test_model_params_hbar_tied_to_N():
    p = ModelParams.from_particles(64, 3.0, 256)
    assert p.hbar == pytest.approx(1 / 64, rel=1e-12)
    with pytest.raises(ValueError):
        ModelParams(d=1, N=4, hbar=0.3, L=1.0, n=32)
    with pytest.raises(InvalidGridError):
        ModelParams.from_particles(4, 1.0, 8)


def test_grid_uniform_spacing():
    g = Grid.uniform(2.0, 101)
    assert g.points[0] == -2.0 and g.points[-1] == pytest.approx(2.0)
    assert np.allclose(np.diff(g.points), g.spacing, rtol=1e-12)
    with pytest.raises(InvalidGridError):
        Grid.uniform(1.0, 2)


def test_laplacian_constant_interior_and_symmetry():
    g = Grid.uniform(1.0, 64)
    K = build_laplacian(g, 0.3)
    out = K @ np.ones(g.n)
    assert np.allclose(out[1:-1], 0.0, atol=1e-9)
    assert np.array_equal(K, K.T)
    assert np.linalg.eigvalsh(K)[0] > 0


def test_laplacian_box_ground_state():
    g = Grid.uniform(8.0, 1024)
    w = np.linalg.eigvalsh(build_laplacian(g, 1.0))
    exact = np.pi**2 / (2 * 8.0) ** 2
    assert abs(w[0] - exact) / exact < 0.01


def test_projection_trivial_cases():
    H = harmonic_h(1 / 16, n=256)
    w = np.linalg.eigvalsh(H)
    assert np.all(spectral_projection_below(H, w[0] - 1) == 0)
    assert np.allclose(spectral_projection_below(H, w[-1] + 1), np.eye(256))


def test_projection_harmonic_count():
    H = harmonic_h(1 / 16)
    P = spectral_projection_below(H, 1.0)
    assert round(np.trace(P)) == 8
    assert np.linalg.norm(P @ P - P, 2) < 1e-10
    assert np.linalg.norm(P @ H - H @ P, 2) < 1e-10 * np.linalg.norm(H, 2)


def test_count_in_window_harmonic():
    H = harmonic_h(1 / 16)
    assert count_in_window(H, 0.5, 1.0) == 4
    w = np.linalg.eigvalsh(H)
    assert count_in_window(H, w[0] - 10, w[0] - 1) == 0
    assert count_in_window(H, w[0], w[-1]) == H.shape[0]
    with pytest.raises(InvalidWindowError):
        count_in_window(H, 1.0, 0.5)
    assert count_in_window(H, -np.inf, 1.0) == round(np.trace(spectral_projection_below(H, 1.0)))


def test_norms_direct():
    assert trace_norm(np.eye(7)) == pytest.approx(7)
    v = np.ones(5) / np.sqrt(5)
    P = np.outer(v, v)
    assert trace_norm(P) == pytest.approx(1) and hs_norm(P) == pytest.approx(1)
    assert operator_norm(P) == pytest.approx(1)
    D = np.diag([3.0, -4.0])
    assert (operator_norm(D), hs_norm(D), trace_norm(D)) == pytest.approx((4, 5, 7))


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_norm_chain(seed):
    A = np.random.default_rng(seed).normal(size=(8, 8))
    assert operator_norm(A) <= hs_norm(A) * (1 + 1e-12) <= trace_norm(A) * (1 + 1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_trace_norm_subadditive_unitarily_invariant(seed):
    rng = np.random.default_rng(seed)
    A, B = rng.normal(size=(2, 6, 6))
    S = A + A.T
    assert trace_norm(S - S.T) < 1e-12
    assert trace_norm(A + B) <= trace_norm(A) + trace_norm(B) + 1e-10
    Q, _ = np.linalg.qr(rng.normal(size=(6, 6)))
    assert trace_norm(Q @ A @ Q.T) == pytest.approx(trace_norm(A), rel=1e-10)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31 - 1), st.floats(-2, 2))
def test_projection_idempotent_random(seed, mu):
    A = np.random.default_rng(seed).normal(size=(10, 10))
    H = A + A.T
    P = spectral_projection_below(H, mu)
    assert np.linalg.norm(P @ P - P, 2) < 1e-10
    ev = np.linalg.eigvalsh(P)
    assert ev[0] > -1e-10 and ev[-1] < 1 + 1e-10


def test_spectral_decomposition_reconstructs(rng):
    A = rng.normal(size=(12, 12))
    H = A + A.T
    w, q = spectral_decomposition(H)
    assert np.all(np.diff(w) >= 0)
    assert np.linalg.norm(H - (q * w) @ q.T) <= 1e-10 * np.linalg.norm(H)
