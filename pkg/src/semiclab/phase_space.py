"""Wigner transform, Weyl quantization and phase-space states.

Conventions (d = 1, ``N hbar = 1``):

    f(x, p) = int gamma(x + y/2, x - y/2) exp(-i y p / hbar) dy
    gamma(x, y) = (2 pi hbar)^-1 int f((x + y)/2, p) exp(i p (x - y) / hbar) dp

so ``(2 pi)^-1 int int f = Tr gamma / N``.  On the lattice ``y = m dx``; odd
``m`` put the kernel arguments on half-grid points, where the kernel is the
average of its four lattice neighbours.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import AliasingError, DimensionError
from .lattice import Grid, ModelParams, momentum_generator
from .thomas_fermi import TFState


@dataclass(frozen=True)
class PhaseSpaceGrid:
    grid: Grid
    hbar: float
    p: np.ndarray
    fft_size: Optional[int] = None

    @classmethod
    def for_grid(cls, grid: Grid, hbar, fft_size=None):
        """FFT-matched momenta ``p_k = 2 pi hbar k / (M dx)``, ``|p| <= pi hbar/dx``."""
        M = fft_size or 2 * grid.n
        if M < 2 * grid.n - 1:
            raise AliasingError(f"need at least {2 * grid.n - 1} momentum points, got {M}")
        k = np.fft.fftshift(np.fft.fftfreq(M, d=1.0 / M))
        p = 2 * np.pi * hbar * k / (M * grid.spacing)
        return cls(grid=grid, hbar=float(hbar), p=p, fft_size=M)

    @property
    def p_max(self):
        return float(np.max(np.abs(self.p)))

    @property
    def dp(self):
        return float(self.p[1] - self.p[0])


@dataclass
class WignerFunction:
    values: np.ndarray  # shape (len(p), n): values[k, j] = f(x_j, p_k)
    psg: PhaseSpaceGrid
    d: int = 1

    @property
    def hbar(self):
        return self.psg.hbar

    def integral(self):
        """Discrete ``int int f dx dp``."""
        return self.psg.grid.spacing * self.psg.dp * float(np.sum(self.values))

    def l2_norm(self):
        return float(np.sqrt(self.psg.grid.spacing * self.psg.dp * np.sum(self.values**2)))


def _shifted_kernel(K):
    """``g[j, m + (n-1)] = kernel(x_j + m dx/2, x_j - m dx/2)`` for |m| < n."""
    n = K.shape[0]
    Kp = np.zeros((n + 2, n + 2), dtype=K.dtype)
    Kp[1:-1, 1:-1] = K
    m = np.arange(-(n - 1), n)
    g = np.empty((n, m.size), dtype=K.dtype)
    j = np.arange(n)[:, None]
    ev = np.flatnonzero(m % 2 == 0)
    s = (m[ev] // 2)[None, :]
    g[:, ev] = _take(Kp, j + s, j - s)
    od = np.flatnonzero(m % 2 != 0)
    # odd m = 2s + 1: arguments at j + s + 1/2 and j - s - 1/2
    s = (m[od] // 2)[None, :]
    a, b = j + s, j - s
    acc = _take(Kp, a, b - 1)
    acc += _take(Kp, a, b)
    acc += _take(Kp, a + 1, b - 1)
    acc += _take(Kp, a + 1, b)
    g[:, od] = 0.25 * acc
    return g


def _take(Kp, a, b):
    last = Kp.shape[0] - 1
    return Kp[np.clip(a + 1, 0, last), np.clip(b + 1, 0, last)]


def wigner_transform(gamma, psg: PhaseSpaceGrid) -> WignerFunction:
    """``f(x_j, p) = dx sum_m kernel(x_j + m dx/2, x_j - m dx/2) exp(-i m dx p / hbar)``."""
    grid = psg.grid
    n = grid.n
    dx = grid.spacing
    gamma = np.asarray(gamma)
    if gamma.shape != (n, n):
        raise DimensionError(f"gamma has shape {gamma.shape}, grid has n={n}")
    if psg.p_max < np.pi * psg.hbar / (2 * dx):
        raise AliasingError("momentum grid does not reach pi hbar / (2 dx)")
    g = _shifted_kernel(gamma / dx)
    m = np.arange(-(n - 1), n)
    if psg.fft_size is not None:
        M = psg.fft_size
        buf = np.zeros((n, M), dtype=g.dtype)
        buf[:, m % M] = g
        F = np.fft.fftshift(np.fft.fft(buf, axis=1), axes=1)
        vals = dx * F
    else:
        phase = np.exp(-1j * np.outer(m * dx, psg.p) / psg.hbar)
        vals = dx * (g @ phase)
    if np.isrealobj(gamma) or np.allclose(gamma, gamma.conj().T):
        peak = max(float(np.max(np.abs(vals.real))), 1e-300)
        if float(np.max(np.abs(vals.imag))) > 1e-8 * peak:
            raise AssertionError("Wigner function of a self-adjoint gamma is not real")
        vals = vals.real
    return WignerFunction(values=np.ascontiguousarray(vals.T), psg=psg)


def weyl_quantize(f: WignerFunction) -> np.ndarray:
    """Matrix of ``gamma_f`` (coefficient convention: entries are ``dx * kernel``)."""
    psg = f.psg
    grid = psg.grid
    n = grid.n
    dx = grid.spacing
    hbar = psg.hbar
    vals = np.asarray(f.values)
    # g[j, m] = (2 pi hbar)^-1 sum_k f(x_j, p_k) exp(i m dx p_k / hbar) dp
    m = np.arange(-(n - 1), n)
    if psg.fft_size is not None:
        M = psg.fft_size
        spec = np.fft.ifftshift(vals.T, axes=1)
        full = np.fft.ifft(spec, axis=1) * M
        g = full[:, m % M] * psg.dp / (2 * np.pi * hbar)
    else:
        phase = np.exp(1j * np.outer(psg.p, m * dx) / hbar)
        g = (vals.T @ phase) * psg.dp / (2 * np.pi * hbar)
    if np.isrealobj(vals):
        g = g.real
    a = np.arange(n)[:, None]
    b = np.arange(n)[None, :]
    r = a - b  # m index
    s2 = a + b  # twice the midpoint index
    lo = s2 // 2
    hi = s2 - lo
    K = 0.5 * (g[lo, r + n - 1] + g[hi, r + n - 1])
    K = 0.5 * (K + K.conj().T)
    return dx * K


def tf_projection(tf: TFState, params: ModelParams) -> np.ndarray:
    """Weyl quantization of ``1(p^2 <= C_TF rho_TF(x)^(2/d))``, done exactly in p.

    In d = 1 the kernel is ``sin(k(m) r) / (pi r)`` with ``k = pi rho_TF(m) / hbar``,
    ``m = (x + y)/2`` and ``r = x - y``.
    """
    grid = params.grid
    n = grid.n
    dx = grid.spacing
    if tf.d != 1:
        raise DimensionError("tf_projection is implemented for d = 1")
    rho = np.maximum(tf.rho, 0.0)
    a = np.arange(n)[:, None]
    b = np.arange(n)[None, :]
    s2 = a + b
    rho_mid = 0.5 * (rho[s2 // 2] + rho[s2 - s2 // 2])
    k = np.pi * rho_mid / params.hbar
    r = (a - b) * dx
    with np.errstate(invalid="ignore", divide="ignore"):
        K = np.where(r == 0, k / np.pi, np.sin(k * r) / (np.pi * np.where(r == 0, 1.0, r)))
    return dx * K


def tf_indicator(tf: TFState, psg: PhaseSpaceGrid) -> WignerFunction:
    """``f_TF`` sampled on the phase-space grid (values[k, j])."""
    pf = np.sqrt(tf.c_tf) * np.maximum(tf.rho, 0.0) ** (1.0 / tf.d)
    vals = (np.abs(psg.p)[:, None] <= pf[None, :]).astype(float)
    return WignerFunction(values=vals, psg=psg, d=tf.d)


def position_operator(grid: Grid) -> np.ndarray:
    return np.diag(grid.points)


def momentum_operator(grid: Grid, hbar) -> np.ndarray:
    """Hermitian ``-i hbar D``."""
    return -1j * hbar * momentum_generator(grid)


def gronewold_fourier(gamma, xi, eta, params: ModelParams) -> complex:
    """``N^-1 Tr exp(i(xi X + eta P)) gamma``."""
    grid = params.grid
    G = xi * np.diag(grid.points).astype(complex) + eta * momentum_operator(grid, params.hbar)
    w, v = np.linalg.eigh(G)
    E = (v * np.exp(1j * w)) @ v.conj().T
    return complex(np.trace(E @ np.asarray(gamma)) / params.N)


def wigner_fourier(f: WignerFunction, xi, eta) -> complex:
    """``(2 pi)^-d int int exp(i(xi x + eta p)) f dx dp`` on the grid."""
    x = f.psg.grid.points
    p = f.psg.p
    ph = np.exp(1j * eta * p)[:, None] * np.exp(1j * xi * x)[None, :]
    return complex(np.sum(ph * f.values) * f.psg.grid.spacing * f.psg.dp / (2 * np.pi) ** f.d)


def density_marginals(gamma, params: ModelParams) -> dict:
    """Position and momentum densities of ``gamma / N``."""
    grid = params.grid
    n = grid.n
    dx = grid.spacing
    gamma = np.asarray(gamma)
    rho_x = np.real(np.diag(gamma)) / (params.N * dx)
    # unitary DFT basis e_k(x_j) = exp(i p_k x_j / hbar) / sqrt(n)
    k = np.fft.fftshift(np.fft.fftfreq(n, d=1.0 / n))
    p = 2 * np.pi * params.hbar * k / (n * dx)
    E = np.exp(1j * np.outer(grid.points, p) / params.hbar) / np.sqrt(n)
    diag = np.real(np.sum(E.conj() * (gamma @ E), axis=0))
    dp = 2 * np.pi * params.hbar / (n * dx)
    return {"x": grid.points, "rho_x": rho_x, "p": p, "rho_p": diag / (params.N * dp)}
