"""Thomas-Fermi equation, functional and counting function.

Densities are cell averages: ``w = U + V*rho - mu`` is interpolated piecewise
linearly through the grid values and cubic midpoint values, and
``C^(-d/2) (-w)_+^(d/2)`` is integrated exactly on each cell, so
``dx * sum(rho)`` is the exact mass of the interpolated profile.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import gamma as gamma_fn

from .errors import BracketError, DomainError, InvalidDensityError
from .lattice import Grid
from .potentials import Convolver, ExternalPotential, Regular, sample_external


def unit_ball_volume(d):
    return np.pi ** (d / 2) / gamma_fn(d / 2 + 1)


def tf_constant(d) -> float:
    """``C_TF = 4 pi^2 |B_d|^(-2/d)``."""
    if d < 1:
        raise DomainError(f"dimension must be positive, got {d}")
    return float(4 * np.pi**2 * unit_ball_volume(d) ** (-2.0 / d))


def _neg_part_antiderivative(w, q):
    # d/dw of this is (-w)_+^q
    return -np.maximum(-w, 0.0) ** (q + 1) / (q + 1)


def _segment_mean(w0, w1, q):
    """Mean of ``(-w)_+^q`` over a segment where ``w`` runs linearly w0 -> w1."""
    dw = w1 - w0
    scale = np.maximum(np.maximum(np.abs(w0), np.abs(w1)), 1e-300)
    flat = np.abs(dw) <= 1e-7 * scale
    safe = np.where(flat, 1.0, dw)
    exact = (_neg_part_antiderivative(w1, q) - _neg_part_antiderivative(w0, q)) / safe
    mid = np.maximum(-(w0 + w1) / 2, 0.0) ** q
    return np.where(flat, mid, exact)


def cell_average_negative_part(w, q):
    """Cell averages of ``(-w)_+^q`` for the interpolated ``w``."""
    w = np.asarray(w, dtype=float)
    mid = np.empty(w.size + 1)
    mid[1:-1] = 0.5 * (w[:-1] + w[1:])
    if w.size >= 4:
        # four-point midpoint values cut the chord bias of convex w
        mid[2:-2] = (9.0 * (w[1:-2] + w[2:-1]) - w[:-3] - w[3:]) / 16.0
    # outer half cells continue the adjacent slope
    mid[0] = w[0] - 0.5 * (w[1] - w[0])
    mid[-1] = w[-1] + 0.5 * (w[-1] - w[-2])
    return 0.5 * (_segment_mean(mid[:-1], w, q) + _segment_mean(w, mid[1:], q))


def _is_zero_potential(V):
    return isinstance(V, Regular) and not np.any(V.profile) and V.constant == 0


def _external_values(U, grid):
    if isinstance(U, ExternalPotential):
        return sample_external(U, grid)
    U = np.asarray(U, dtype=float)
    if U.shape != (grid.n,):
        raise DomainError("external potential samples do not match the grid")
    return U


@dataclass
class TFState:
    rho: np.ndarray
    mu: float
    d: int
    c_tf: float
    grid: Grid
    residual: float = 0.0
    effective: Optional[np.ndarray] = None  # U + V*rho

    @property
    def mass(self):
        return self.grid.integrate(self.rho)


@dataclass
class FixedPointResult:
    rho: np.ndarray
    residual: float
    iterations: int
    converged: bool


def tf_map(Uv, conv, rho, mu, d, c_tf):
    w = Uv - mu if conv is None else Uv + conv(rho) - mu
    return c_tf ** (-d / 2) * cell_average_negative_part(w, d / 2)


def tf_fixed_density(U, V, mu, grid: Grid, damping=0.5, d=1, tol=1e-10,
                     max_iter=10_000, convolver=None) -> FixedPointResult:
    """Damped iteration of the TF map from ``rho = 0``.

    The first step is undamped (it is the exact answer when ``V = 0``).
    """
    if not 0 < damping <= 1:
        raise DomainError(f"damping must lie in (0, 1], got {damping}")
    Uv = _external_values(U, grid)
    c_tf = tf_constant(d)
    conv = None if _is_zero_potential(V) else (convolver or Convolver(V, grid))
    dx = grid.spacing
    rho = tf_map(Uv, conv, np.zeros(grid.n), mu, d, c_tf)
    if conv is None:
        return FixedPointResult(rho, 0.0, 1, True)
    converged = False
    it = 1
    for it in range(2, max_iter + 1):
        new = (1 - damping) * rho + damping * tf_map(Uv, conv, rho, mu, d, c_tf)
        step = dx * float(np.sum(np.abs(new - rho)))
        rho = new
        if step <= tol:
            converged = True
            break
    # one undamped application so rho vanishes exactly where w > 0
    rho = tf_map(Uv, conv, rho, mu, d, c_tf)
    residual = dx * float(np.sum(np.abs(rho - tf_map(Uv, conv, rho, mu, d, c_tf))))
    return FixedPointResult(rho, residual, it, converged)


def tf_solve(U, V, grid: Grid, d=1, damping=0.5, mass_tol=1e-10, bracket_width=100.0,
             max_bisect=200) -> TFState:
    """Unit-mass TF state by bisection on the chemical potential."""
    Uv = _external_values(U, grid)
    c_tf = tf_constant(d)
    conv = None if _is_zero_potential(V) else Convolver(V, grid)
    seen = []

    def mass(mu):
        res = tf_fixed_density(Uv, V, mu, grid, damping=damping, d=d, convolver=conv)
        m = grid.integrate(res.rho)
        seen.append((mu, m))
        return m, res

    lo = float(np.min(Uv))
    hi = lo + bracket_width
    m_hi, res_hi = mass(hi)
    if m_hi < 1:
        raise BracketError(f"mass at mu={hi} is {m_hi} < 1; widen the bracket")
    best = (hi, m_hi, res_hi)
    for _ in range(max_bisect):
        mid = 0.5 * (lo + hi)
        m, res = mass(mid)
        best = (mid, m, res)
        if abs(m - 1) <= mass_tol:
            break
        if m < 1:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * max(1.0, abs(hi)):
            break
    mus, ms = np.array(seen).T
    order = np.argsort(mus)
    assert np.all(np.diff(ms[order]) >= -1e-9), "TF mass is not monotone in mu"
    mu, m, res = best
    eff = Uv if conv is None else Uv + conv(res.rho)
    return TFState(rho=res.rho, mu=mu, d=d, c_tf=c_tf, grid=grid,
                   residual=res.residual, effective=eff)


def tf_residual(state: TFState, U, V) -> float:
    Uv = _external_values(U, state.grid)
    conv = None if _is_zero_potential(V) else Convolver(V, state.grid)
    target = tf_map(Uv, conv, state.rho, state.mu, state.d, state.c_tf)
    return state.grid.integrate(np.abs(state.rho - target))


def tf_energy(rho, U, V, grid: Grid, d=1) -> float:
    """TF functional: kinetic ``d C/(d+2) int rho^(1+2/d)`` plus trap and Hartree."""
    rho = np.asarray(rho, dtype=float)
    if np.any(rho < -1e-12):
        raise InvalidDensityError("density has negative entries")
    rho = np.maximum(rho, 0.0)
    Uv = _external_values(U, grid)
    c_tf = tf_constant(d)
    kinetic = d * c_tf / (d + 2) * grid.integrate(rho ** (1 + 2.0 / d))
    trap = grid.integrate(Uv * rho)
    inter = 0.0 if _is_zero_potential(V) else 0.5 * grid.integrate(rho * Convolver(V, grid)(rho))
    return kinetic + trap + inter


def counting_function(nu, tf: TFState, U=None, V=None) -> float:
    """``F(nu) = (2 pi)^-d |B_d| int (U + V*rho_TF - nu)_-^(d/2)``."""
    d = tf.d
    if tf.effective is None:
        Uv = _external_values(U, tf.grid)
        eff = Uv if V is None or _is_zero_potential(V) else Uv + Convolver(V, tf.grid)(tf.rho)
    else:
        eff = tf.effective
    pref = (2 * np.pi) ** (-d) * unit_ball_volume(d)
    return pref * tf.grid.integrate(cell_average_negative_part(eff - nu, d / 2))
