"""Grand-canonical Hartree theory at a fixed chemical potential.

Iterates are convex combinations of spectral projections.  They are stored
as ``gamma = Q diag(nu) Q^T`` with orthonormal ``Q`` so that an SCF step costs
a tridiagonal partial eigensolve plus a small dense update instead of a full
``n x n`` decomposition.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .errors import DimensionError, SCFDivergedError
from .lattice import (Grid, ModelParams, laplacian_bands, momentum_generator,
                      tridiagonal_projection, trace_norm)
from .potentials import (Convolver, ExternalPotential, Regular, exchange_kernel,
                         sample_external)


@dataclass
class Factored:
    """Symmetric ``Q diag(nu) Q^T`` with orthonormal columns."""

    Q: np.ndarray
    nu: np.ndarray

    @property
    def rank(self):
        return self.nu.size

    def diagonal(self):
        return (self.Q**2) @ self.nu

    def dense(self):
        return (self.Q * self.nu) @ self.Q.T

    def apply(self, B):
        return self.Q @ (self.nu[:, None] * (self.Q.T @ B))

    @property
    def trace(self):
        return float(np.sum(self.nu))


def factorize(gamma, cutoff=1e-13) -> Factored:
    """Eigen-factor a symmetric matrix, dropping eigenvalues below ``cutoff``."""
    gamma = np.asarray(gamma, dtype=float)
    w, q = np.linalg.eigh(gamma)
    keep = np.abs(w) > cutoff
    return Factored(q[:, keep], w[keep])


def _mix(g: Factored, P: np.ndarray, alpha, cutoff=1e-13) -> Factored:
    """Factor ``(1 - alpha) g + alpha P P^T`` in the span of both."""
    B, _ = np.linalg.qr(np.hstack([g.Q, P]))
    A = B.T @ g.Q
    C = B.T @ P
    small = (1 - alpha) * (A * g.nu) @ A.T + alpha * C @ C.T
    w, v = np.linalg.eigh(0.5 * (small + small.T))
    keep = np.abs(w) > cutoff
    return Factored(B @ v[:, keep], w[keep])


def _distance_to_projection(g: Factored, P: np.ndarray) -> float:
    """``|| g - P P^T ||_Tr`` computed in the joint span."""
    B, _ = np.linalg.qr(np.hstack([g.Q, P]))
    A = B.T @ g.Q
    C = B.T @ P
    small = (A * g.nu) @ A.T - C @ C.T
    return float(np.sum(np.abs(np.linalg.eigvalsh(0.5 * (small + small.T)))))


def _is_zero_potential(V):
    return isinstance(V, Regular) and not np.any(V.profile) and V.constant == 0


def _external_values(U, grid):
    if isinstance(U, ExternalPotential):
        return sample_external(U, grid)
    U = np.asarray(U, dtype=float)
    if U.shape != (grid.n,):
        raise DimensionError("external potential samples do not match the grid")
    return U


def _as_matrix(gamma):
    return gamma.dense() if isinstance(gamma, Factored) else np.asarray(gamma, dtype=float)


def _diag(gamma):
    return gamma.diagonal() if isinstance(gamma, Factored) else np.diag(gamma).copy()


def position_density(gamma, params: ModelParams) -> np.ndarray:
    """``rho_gamma = gamma(x, x) / N``."""
    return _diag(gamma) / (params.N * params.grid.spacing)


@dataclass
class HartreeState:
    factors: Factored
    mu: float
    rho: np.ndarray
    w_eff: np.ndarray
    residual: float
    energy: float
    energy_hf: float
    params: ModelParams
    iterations: int = 0
    alpha: float = 0.5
    history: list = field(default_factory=list)
    _dense: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def gamma(self) -> np.ndarray:
        if self._dense is None:
            self._dense = self.factors.dense()
        return self._dense

    @property
    def trace(self):
        return self.factors.trace


def hartree_diagonal(gamma, U, V, params: ModelParams, convolver=None) -> np.ndarray:
    """Diagonal of ``H_gamma`` (kinetic diagonal + ``U + V * rho_gamma``)."""
    grid = params.grid
    n = grid.n
    if _diag(gamma).shape != (n,):
        raise DimensionError("gamma does not match the grid")
    kd, _ = laplacian_bands(grid, params.hbar)
    Uv = _external_values(U, grid)
    if _is_zero_potential(V):
        return kd + Uv
    conv = convolver or Convolver(V, grid)
    return kd + Uv + conv(np.maximum(position_density(gamma, params), 0.0))


def hartree_hamiltonian(gamma, U, V, params: ModelParams, convolver=None) -> np.ndarray:
    """``H_gamma = -hbar^2 Laplacian + U + V * rho_gamma`` as a dense matrix."""
    diag = hartree_diagonal(gamma, U, V, params, convolver)
    _, off = laplacian_bands(params.grid, params.hbar)
    return np.diag(diag) + np.diag(off, 1) + np.diag(off, -1)


def _lowest_projection(diag, off, mu, occupied):
    if occupied is None:
        return tridiagonal_projection(diag, off, mu)
    return sla.eigh_tridiagonal(diag, off, select="i", select_range=(0, occupied - 1))


def free_projection(U, params: ModelParams, mu, occupied=None):
    kd, off = laplacian_bands(params.grid, params.hbar)
    w, q = _lowest_projection(kd + _external_values(U, params.grid), off, mu, occupied)
    return Factored(q, np.ones(w.size))


def scf_solve(U, V, mu, params: ModelParams, alpha=0.5, tol=1e-8, max_iter=2000,
              patience=40, max_halvings=3, occupied=None) -> HartreeState:
    """Damped fixed-point iteration ``gamma <- (1-a) gamma + a 1(H_gamma <= mu)``.

    Stops once ``||gamma - 1(H_gamma <= mu)||_Tr <= tol * N``.  If the residual
    has not improved for ``patience`` steps the damping is halved, at most
    ``max_halvings`` times.  With ``occupied=k`` the projection is onto the k
    lowest levels instead (fixed particle number; ``mu`` only shifts energies).
    """
    if not 0 < alpha <= 1:
        raise ValueError(f"damping must lie in (0, 1], got {alpha}")
    grid = params.grid
    Uv = _external_values(U, grid)
    kd, off = laplacian_bands(grid, params.hbar)
    gamma = free_projection(Uv, params, mu, occupied)
    conv = None if _is_zero_potential(V) else Convolver(V, grid)
    history = []
    best = np.inf
    since_best = 0
    halvings = 0
    it = 0
    while True:
        rho = np.maximum(position_density(gamma, params), 0.0)
        mf = np.zeros(grid.n) if conv is None else conv(rho)
        _, P = _lowest_projection(kd + Uv + mf, off, mu, occupied)
        res = _distance_to_projection(gamma, P)
        history.append(res)
        if res <= tol * params.N:
            break
        it += 1
        if it > max_iter:
            raise SCFDivergedError(f"no convergence after {max_iter} iterations "
                                   f"(residual {res:.3e})", history)
        if res < 0.99 * best:
            best, since_best = res, 0
        else:
            since_best += 1
            if since_best >= patience:
                if halvings >= max_halvings:
                    raise SCFDivergedError(f"SCF stagnated at residual {best:.3e}", history)
                alpha *= 0.5
                halvings += 1
                since_best = 0
        gamma = _mix(gamma, P, alpha)
    w_eff = Uv + mf - mu
    state = HartreeState(factors=gamma, mu=mu, rho=rho, w_eff=w_eff, residual=res,
                         energy=0.0, energy_hf=0.0, params=params, iterations=it,
                         alpha=alpha, history=history)
    state.energy = hartree_energy(gamma, Uv, V, mu, params, convolver=conv)
    state.energy_hf = hartree_fock_energy(gamma, Uv, V, mu, params, energy=state.energy)
    return state


def kinetic_trace(gamma, params: ModelParams) -> float:
    """``Tr(-hbar^2 Laplacian gamma)``."""
    kd, off = laplacian_bands(params.grid, params.hbar)
    if isinstance(gamma, Factored):
        Q = gamma.Q
        KQ = kd[:, None] * Q
        KQ[:-1] += off[:, None] * Q[1:]
        KQ[1:] += off[:, None] * Q[:-1]
        return float(np.sum(gamma.nu * np.einsum("ij,ij->j", Q, KQ)))
    g = np.asarray(gamma)
    return float(kd @ np.diag(g) + 2.0 * off @ np.diag(g, 1))


def hartree_energy(gamma, U, V, mu, params: ModelParams, convolver=None) -> float:
    """``Tr(-hbar^2 Laplacian + U - mu) gamma + (N/2) int int rho V rho``."""
    grid = params.grid
    Uv = _external_values(U, grid)
    dg = _diag(gamma)
    one_body = kinetic_trace(gamma, params) + float((Uv - mu) @ dg)
    if _is_zero_potential(V):
        return one_body
    rho = np.maximum(dg / (params.N * grid.spacing), 0.0)
    conv = convolver or Convolver(V, grid)
    return one_body + 0.5 * params.N * grid.integrate(rho * conv(rho))


def exchange_trace(gamma, V, params: ModelParams) -> float:
    """``Tr X_gamma gamma``."""
    g = _as_matrix(gamma)
    return float(np.sum(exchange_kernel(V, g, params.grid) * g))


def hartree_fock_energy(gamma, U, V, mu, params: ModelParams, energy=None) -> float:
    """Hartree energy minus ``Tr(X_gamma gamma) / (2N)``."""
    if energy is None:
        energy = hartree_energy(gamma, U, V, mu, params)
    if _is_zero_potential(V):
        return energy
    return energy - exchange_trace(gamma, V, params) / (2.0 * params.N)


def effective_potential(state: HartreeState, tf=None) -> np.ndarray:
    """``W = U + V * rho_gamma - mu``; checks that ``{W < 0}`` is an interval
    covering the TF support when a TF state is given."""
    w = state.w_eff
    neg = np.flatnonzero(w < 0)
    if neg.size and np.any(np.diff(neg) != 1):
        raise AssertionError("sublevel set {W < 0} is not an interval")
    if tf is not None:
        supp = np.flatnonzero(tf.rho > 0)
        if supp.size and (neg.size == 0 or supp[0] < neg[0] - 1 or supp[-1] > neg[-1] + 1):
            raise AssertionError("sublevel set {W < 0} does not cover the TF support")
    return w


# -- commutators ------------------------------------------------------------------

def _orth(M):
    u, s, _ = np.linalg.svd(M, full_matrices=False)
    return u[:, s > 1e-12 * max(s[0], 1e-300)] if s.size else u


def commutator_trace_norm(D, gamma) -> float:
    """``||[D, gamma]||_Tr`` for a diagonal (vector) or sparse/dense ``D``.

    Uses the factorization of ``gamma``: range and co-range of the commutator
    lie in ``span(Q, DQ)`` and ``span(Q, D^* Q)``.
    """
    g = gamma if isinstance(gamma, Factored) else factorize(gamma)
    if g.rank == 0:
        return 0.0
    Q = g.Q
    if np.ndim(D) == 1:
        D = np.asarray(D)
        DQ = D[:, None] * Q
        DhQ = np.conj(D)[:, None] * Q
        mul = lambda X: D[:, None] * X  # noqa: E731
    else:
        DQ = D @ Q
        DhQ = D.conj().T @ Q
        mul = lambda X: D @ X  # noqa: E731
    B1 = _orth(np.hstack([Q, DQ]))
    B2 = _orth(np.hstack([Q, DhQ]))
    AB2 = mul(g.apply(B2)) - g.apply(mul(B2))
    small = B1.conj().T @ AB2
    return float(np.sum(np.linalg.svd(small, compute_uv=False)))


def commutator_report(gamma, params: ModelParams, xi_samples: Sequence[float] = ()) -> dict:
    """Scaled commutators with position, momentum and plane waves."""
    grid = params.grid
    N, hbar = params.N, params.hbar
    g = gamma if isinstance(gamma, Factored) else factorize(gamma)
    x_comm = commutator_trace_norm(grid.points, g) / (N * hbar)
    Dm = sp.csr_matrix(momentum_generator(grid))
    p_comm = hbar * commutator_trace_norm(Dm, g) / (N * hbar)
    fourier = 0.0
    for xi in xi_samples:
        if xi == 0:
            continue
        e = np.exp(1j * xi * grid.points)
        fourier = max(fourier, commutator_trace_norm(e, g) / (N * hbar * abs(xi)))
    return {"x_comm": x_comm, "p_comm": p_comm, "fourier_comm_max": fourier}


def idempotency_defect(gamma) -> float:
    g = _as_matrix(gamma)
    return trace_norm(g @ g - g)
