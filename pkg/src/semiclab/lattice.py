"""Discretized one-body space on a uniform Dirichlet grid.

Functions are stored as coefficient vectors with the quadrature weight
absorbed (``c_j = sqrt(dx) * f(x_j)``), so operators are plain symmetric
matrices, operator traces are matrix traces and kernel values are recovered
as ``matrix / dx``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import scipy.linalg as sla

from .errors import DecompositionError, InvalidGridError, InvalidWindowError


@dataclass(frozen=True)
class ModelParams:
    """Dimension, particle number, effective Planck constant and box."""

    d: int
    N: int
    hbar: float
    L: float
    n: int

    def __post_init__(self):
        if self.d < 1 or self.N < 1:
            raise ValueError("d and N must be positive integers")
        if self.n < 16 or self.L <= 0:
            raise InvalidGridError(f"need n >= 16 and L > 0, got n={self.n}, L={self.L}")
        expected = self.N ** (-1.0 / self.d)
        if abs(self.hbar - expected) > 1e-12 * expected:
            raise ValueError(f"hbar={self.hbar} is not N^(-1/d)={expected}")

    @classmethod
    def from_particles(cls, N, L, n, d=1):
        return cls(d=d, N=N, hbar=float(N) ** (-1.0 / d), L=float(L), n=int(n))

    @property
    def grid(self):
        return Grid.uniform(self.L, self.n)


@dataclass(frozen=True)
class Grid:
    points: np.ndarray
    spacing: float

    @classmethod
    def uniform(cls, L, n):
        if n < 3:
            raise InvalidGridError(f"a grid needs at least 3 points, got {n}")
        if L <= 0:
            raise InvalidGridError(f"box half-length must be positive, got {L}")
        points = np.linspace(-L, L, n)
        return cls(points=points, spacing=2.0 * L / (n - 1))

    @property
    def n(self):
        return self.points.size

    @property
    def L(self):
        return -float(self.points[0])

    def integrate(self, values):
        return self.spacing * float(np.sum(values))


class SpectralDecomposition(NamedTuple):
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def inclusion_tolerance(mu):
    return 1e-12 * (1.0 + abs(mu))


def laplacian_bands(grid: Grid, hbar):
    """Diagonal and off-diagonal of the ``-hbar^2 Laplacian`` stencil."""
    if grid.n < 3:
        raise InvalidGridError("the 3-point stencil needs n >= 3")
    if hbar <= 0:
        raise ValueError("hbar must be positive")
    scale = hbar**2 / grid.spacing**2
    return np.full(grid.n, 2.0 * scale), np.full(grid.n - 1, -scale)


def build_laplacian(grid: Grid, hbar) -> np.ndarray:
    """Matrix of ``-hbar^2 d^2/dx^2`` with Dirichlet walls just outside the grid."""
    diag, off = laplacian_bands(grid, hbar)
    return np.diag(diag) + np.diag(off, 1) + np.diag(off, -1)


def momentum_generator(grid: Grid) -> np.ndarray:
    """Antisymmetric central difference ``D``; the momentum is ``-i hbar D``."""
    off = np.full(grid.n - 1, 0.5 / grid.spacing)
    return np.diag(off, 1) - np.diag(off, -1)


def spectral_decomposition(H) -> SpectralDecomposition:
    try:
        w, q = np.linalg.eigh(H)
    except np.linalg.LinAlgError as exc:
        raise DecompositionError(str(exc)) from exc
    return SpectralDecomposition(w, q)


def _is_tridiagonal(H):
    n = H.shape[0]
    if n < 3:
        return False
    band = np.triu(H, 2)
    return not np.any(band)


def projection_from_vectors(q):
    return q @ q.T


def spectral_projection_below(H, mu) -> np.ndarray:
    """Orthogonal projection ``1_(-inf, mu](H)``.

    Eigenvalues within ``1e-12 (1 + |mu|)`` above ``mu`` are included, so ties
    at the Fermi level are always occupied.
    """
    H = np.asarray(H, dtype=float)
    _, q = eigenpairs_below(H, mu)
    return projection_from_vectors(q)


def eigenpairs_below(H, mu):
    """Eigenvalues and eigenvectors of ``H`` with ``E <= mu + tau``."""
    H = np.asarray(H, dtype=float)
    cut = mu + inclusion_tolerance(mu)
    if _is_tridiagonal(H):
        try:
            w, q = sla.eigh_tridiagonal(
                np.diag(H).copy(), np.diag(H, 1).copy(), select="v",
                select_range=(-np.inf, cut))
        except (np.linalg.LinAlgError, ValueError) as exc:
            raise DecompositionError(str(exc)) from exc
        # the bisection-based selection may miss ties sitting exactly at cut
        return w, q
    w, q = spectral_decomposition(H)
    keep = w <= cut
    return w[keep], q[:, keep]


def tridiagonal_projection(diag, off, mu):
    """Projection below ``mu`` for a symmetric tridiagonal operator."""
    cut = mu + inclusion_tolerance(mu)
    try:
        w, q = sla.eigh_tridiagonal(diag, off, select="v", select_range=(-np.inf, cut))
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise DecompositionError(str(exc)) from exc
    return w, q


def singular_values(A):
    return np.linalg.svd(np.asarray(A), compute_uv=False)


def trace_norm(A) -> float:
    """``Tr|A|``; uses eigenvalues when ``A`` is real symmetric."""
    A = np.asarray(A)
    if np.isrealobj(A) and A.shape[0] == A.shape[1] and np.array_equal(A, A.T):
        return float(np.sum(np.abs(np.linalg.eigvalsh(A))))
    return float(np.sum(singular_values(A)))


def hs_norm(A) -> float:
    return float(np.linalg.norm(np.asarray(A)))


def operator_norm(A) -> float:
    A = np.asarray(A)
    if A.size == 0:
        return 0.0
    if np.isrealobj(A) and A.shape[0] == A.shape[1] and np.array_equal(A, A.T):
        return float(np.max(np.abs(np.linalg.eigvalsh(A))))
    return float(singular_values(A)[0])


def count_in_window(H, a, b) -> int:
    """Number of eigenvalues of ``H`` in ``[a, b]`` (same tolerance as projections)."""
    if a > b:
        raise InvalidWindowError(f"window [{a}, {b}] is empty")
    w = np.linalg.eigvalsh(np.asarray(H, dtype=float))
    return count_eigenvalues(w, a, b)


def count_eigenvalues(w, a, b) -> int:
    if a > b:
        raise InvalidWindowError(f"window [{a}, {b}] is empty")
    lower = -np.inf if np.isneginf(a) else a - inclusion_tolerance(a)
    upper = np.inf if np.isposinf(b) else b + inclusion_tolerance(b)
    return int(np.count_nonzero((w >= lower) & (w <= upper)))


def kernel_diagonal(gamma, grid: Grid) -> np.ndarray:
    """``gamma(x, x)`` in function units."""
    return np.diag(gamma) / grid.spacing
