"""Exact fermionic Fock space over M real modes.

Basis states are occupation bitmasks; ``a_i^*`` flips bit ``i`` with the
Jordan-Wigner phase ``(-1)^{#occupied j < i}``.  All operators are real.

Two-body data is carried by the pair tensor

    W[a, b, c, d] = int int V(x - y) phi_a(x) phi_b(x) phi_c(y) phi_d(y)

so that ``int V(x-y) O1 O2 O3 O4`` with each field at ``x`` or ``y`` becomes a
contraction of ``W`` with the mode operators (x-indices fill the first pair of
slots, y-indices the second).  The usual ``V_ijkl`` of
``sum V_ijkl a_i^* a_j^* a_l a_k`` is ``W[i, k, j, l]``.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from math import comb
from typing import Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import EigensolverError, IllFormedTensorError, SizeError
from .lattice import Grid, operator_norm, trace_norm
from .potentials import pair_matrix

MAX_MODES = 12


class FockSpace:
    """CAR matrices on ``2^M`` occupation states."""

    def __init__(self, M: int):
        if not 1 <= M <= MAX_MODES:
            raise SizeError(f"mode count M={M} outside [1, {MAX_MODES}]")
        self.M = M
        self.dim = 2**M
        states = np.arange(self.dim)
        self.occupation = ((states[:, None] >> np.arange(M)[None, :]) & 1).astype(np.int64)
        self.popcount = self.occupation.sum(axis=1)
        self._ann = []
        for i in range(M):
            src = states[self.occupation[:, i] == 1]
            below = self.occupation[src, :i].sum(axis=1)
            sign = np.where(below % 2 == 0, 1.0, -1.0)
            dst = src ^ (1 << i)
            self._ann.append(sp.csr_matrix((sign, (dst, src)), shape=(self.dim, self.dim)))
        self._cre = [a.T.tocsr() for a in self._ann]
        self.number = sp.diags(self.popcount.astype(float)).tocsr()
        self.parity = sp.diags(np.where(self.popcount % 2 == 0, 1.0, -1.0)).tocsr()
        self.identity = sp.identity(self.dim, format="csr")

    def a(self, i):
        return self._ann[i]

    def adag(self, i):
        return self._cre[i]

    @property
    def annihilators(self):
        return list(self._ann)

    @property
    def creators(self):
        return list(self._cre)

    def vacuum(self):
        v = np.zeros(self.dim)
        v[0] = 1.0
        return v

    def basis_state(self, modes: Sequence[int]):
        v = np.zeros(self.dim)
        v[sum(1 << i for i in modes)] = 1.0
        return v

    def a_of(self, f):
        """``a(f) = sum conj(f_i) a_i``."""
        return sum(np.conj(f[i]) * self._ann[i] for i in range(self.M))

    def adag_of(self, f):
        return sum(f[i] * self._cre[i] for i in range(self.M))


def build_mode_ops(M):
    fs = FockSpace(M)
    return fs.creators, fs.annihilators


def car_residual(fs: FockSpace) -> float:
    """Largest entrywise violation of the canonical anticommutation relations."""
    worst = 0.0
    for i in range(fs.M):
        for j in range(fs.M):
            ai, aj, ajd = fs.a(i), fs.a(j), fs.adag(j)
            r1 = ai @ ajd + ajd @ ai
            if i == j:
                r1 = r1 - fs.identity
            r2 = ai @ aj + aj @ ai
            for r in (r1, r2):
                if r.nnz:
                    worst = max(worst, float(np.max(np.abs(r.data))))
    return worst


def second_quantize(A, fs: FockSpace):
    """``dGamma(A) = sum A_ij a_i^* a_j``."""
    A = np.asarray(A)
    out = sp.csr_matrix((fs.dim, fs.dim), dtype=A.dtype)
    for i in range(fs.M):
        for j in range(fs.M):
            if A[i, j] != 0:
                out = out + A[i, j] * (fs.adag(i) @ fs.a(j))
    return out


def pair_bilinear(C, O1, O2, fs: FockSpace):
    """``sum C_ij O1_i O2_j``."""
    C = np.asarray(C)
    out = sp.csr_matrix((fs.dim, fs.dim), dtype=C.dtype)
    for i in range(len(O1)):
        for j in range(len(O2)):
            if C[i, j] != 0 and O1[i] is not None and O2[j] is not None:
                out = out + C[i, j] * (O1[i] @ O2[j])
    return out


def _pairs(O1, O2, fs):
    zero = sp.csr_matrix((fs.dim, fs.dim))
    return [(O1[i] @ O2[j]) if (O1[i] is not None and O2[j] is not None) else zero
            for i in range(len(O1)) for j in range(len(O2))]


def quartic(C, O1, O2, O3, O4, fs: FockSpace):
    """``sum C_ijkl O1_i O2_j O3_k O4_l`` (sparse)."""
    M = len(O1)
    C = np.asarray(C, dtype=float).reshape(M * M, M * M)
    left = sp.hstack(_pairs(O1, O2, fs)).tocsr()
    right = sp.vstack(_pairs(O3, O4, fs)).tocsr()
    mixed = sp.kron(sp.csr_matrix(C), sp.identity(fs.dim), format="csr") @ right
    return (left @ mixed).tocsr()


# -- interaction tensors ---------------------------------------------------------

def pair_tensor(modes, V, grid: Grid) -> np.ndarray:
    """``W`` from lattice mode coefficient vectors (columns of ``modes``)."""
    modes = np.asarray(modes, dtype=float)
    M = modes.shape[1]
    P = (modes[:, :, None] * modes[:, None, :]).reshape(grid.n, M * M)
    W = P.T @ pair_matrix(V, grid) @ P
    W = 0.5 * (W + W.T)
    return W.reshape(M, M, M, M)


def vtensor(W) -> np.ndarray:
    """``V_ijkl = W[i, k, j, l]``."""
    return np.transpose(W, (0, 2, 1, 3)).copy()


def check_vtensor(Vt, tol=1e-10):
    if np.max(np.abs(Vt - np.transpose(Vt, (1, 0, 3, 2))), initial=0.0) > tol * max(1.0, np.max(np.abs(Vt), initial=0.0)):
        raise IllFormedTensorError("interaction tensor violates V_ijkl = V_jilk")


def build_hamiltonian_fock(h, Vt, N, fs: FockSpace):
    """``dGamma(h) + (2N)^-1 sum V_ijkl a_i^* a_j^* a_l a_k``."""
    Vt = np.asarray(Vt, dtype=float)
    check_vtensor(Vt)
    Vt = 0.5 * (Vt + np.transpose(Vt, (1, 0, 3, 2)))
    H = second_quantize(h, fs)
    if np.any(Vt):
        # reorder to C[i, j, l, k] so the operator order is a_i^* a_j^* a_l a_k
        C = np.transpose(Vt, (0, 1, 3, 2))
        H = H + quartic(C, fs.creators, fs.creators, fs.annihilators, fs.annihilators, fs) / (2.0 * N)
    return H.tocsr()


# -- particle-hole transformation --------------------------------------------------

@dataclass
class PHData:
    occupied: tuple
    gamma: np.ndarray
    u: np.ndarray
    v: np.ndarray
    R: sp.csr_matrix
    fs: FockSpace

    @property
    def alpha(self):
        """``alpha_i = a(u phi_i)``: ``a_i`` on unoccupied modes, absent on S."""
        return [None if i in self.occupied else self.fs.a(i) for i in range(self.fs.M)]

    @property
    def beta(self):
        """``beta_i = a(conj(v) phi_i)``: ``a_i`` on occupied modes."""
        return [self.fs.a(i) if i in self.occupied else None for i in range(self.fs.M)]

    @property
    def alpha_dag(self):
        return [None if o is None else o.T.tocsr() for o in self.alpha]

    @property
    def beta_dag(self):
        return [None if o is None else o.T.tocsr() for o in self.beta]


def particle_hole(occupied, fs: FockSpace) -> PHData:
    """Unitary ``R`` with ``R^* a_i R = a_i^*`` on ``S`` and ``a_i`` elsewhere.

    ``R`` is the ordered product of ``T_i = (a_i^* - a_i)(-1)^N`` over ``S``.
    """
    S = tuple(sorted(set(int(i) for i in occupied)))
    M = fs.M
    gamma = np.zeros((M, M))
    for i in S:
        gamma[i, i] = 1.0
    R = fs.identity.copy()
    for i in S:
        R = R @ ((fs.adag(i) - fs.a(i)) @ fs.parity)
    return PHData(S, gamma, np.eye(M) - gamma, gamma.copy(), R.tocsr(), fs)


def conjugation_residual(ph: PHData) -> float:
    """``max_i || R^* a_i R - (a(u phi_i) + a^*(conj(v) phi_i)) ||``."""
    fs, R = ph.fs, ph.R
    worst = 0.0
    for i in range(fs.M):
        lhs = R.T @ fs.a(i) @ R
        rhs = fs.a_of(ph.u[:, i]) + fs.adag_of(ph.v[:, i])
        diff = (lhs - rhs).toarray()
        worst = max(worst, float(np.max(np.abs(diff))))
    return worst


def unitarity_residual(ph: PHData) -> float:
    return float(np.max(np.abs((ph.R.T @ ph.R - ph.fs.identity).toarray())))


def _dense(A):
    return A.toarray() if sp.issparse(A) else np.asarray(A)


def _opnorm(A):
    A = _dense(A)
    return operator_norm(0.5 * (A + A.T)) if np.allclose(A, A.T) else float(np.linalg.norm(A, 2))


def one_body_rhs(A, ph: PHData):
    """Right-hand side of the one-body conjugation identity."""
    fs = ph.fs
    u, v = ph.u, ph.v
    A = np.asarray(A, dtype=float)
    out = np.trace(A @ ph.gamma) * fs.identity
    out = out + second_quantize(u @ A @ u.T, fs) - second_quantize(v @ A.T @ v.T, fs)
    out = out + pair_bilinear(u @ A @ v.T, fs.creators, fs.creators, fs)
    out = out + pair_bilinear(v @ A @ u.T, fs.annihilators, fs.annihilators, fs)
    return out


def verify_one_body_conjugation(A, ph: PHData) -> float:
    lhs = ph.R.T @ second_quantize(A, ph.fs) @ ph.R
    return _opnorm(lhs - one_body_rhs(A, ph))


def _x_y_coeff(W, pattern):
    """Coefficient tensor for four fields located at ``pattern`` (e.g. 'xyyx')."""
    xs = [k for k, c in enumerate(pattern) if c == "x"]
    ys = [k for k, c in enumerate(pattern) if c == "y"]
    letters = "abcd"
    src = "".join(letters[k] for k in xs + ys)
    return np.einsum(f"{src}->abcd", W)


def _gamma_contract(W, G, which):
    """Quadratic coefficients from ``int V gamma(.,.) O_. O_.``.

    ``which``: 'xy' -> gamma(x, y) O_x O_y; 'yy' -> gamma(y, y) O_x O_x;
    'xx' -> gamma(x, x) O_y O_y; 'yx' -> gamma(x, y) O_y O_x.
    """
    if which == "xy":
        return np.einsum("st,sitj->ij", G, W)
    if which == "yx":
        return np.einsum("st,sjti->ij", G, W)
    if which == "yy":
        return np.einsum("st,ijst->ij", G, W)
    if which == "xx":
        return np.einsum("st,stij->ij", G, W)
    raise ValueError(which)


def scalar_term(W, G) -> float:
    """``int V (gamma(x,x) gamma(y,y) - gamma(x,y)^2)``."""
    return float(np.einsum("ab,cd,abcd->", G, G, W) - np.einsum("ab,cd,acbd->", G, G, W))


def quadratic_terms(W, ph: PHData):
    """Quadratic part of the conjugated pair interaction."""
    fs, G = ph.fs, ph.gamma
    al, ald, be, bed = ph.alpha, ph.alpha_dag, ph.beta, ph.beta_dag
    out = 2.0 * (pair_bilinear(_gamma_contract(W, G, "yy"), ald, al, fs)
                 - pair_bilinear(_gamma_contract(W, G, "xy"), ald, al, fs))
    out = out - 2.0 * (pair_bilinear(_gamma_contract(W, G, "xx"), bed, be, fs)
                       - pair_bilinear(_gamma_contract(W, G, "yx"), bed, be, fs))
    pair = 2.0 * (pair_bilinear(_gamma_contract(W, G, "yy"), ald, bed, fs)
                  - pair_bilinear(_gamma_contract(W, G, "xy"), ald, bed, fs))
    return out + pair + pair.T


def l4_diag(W, ph: PHData):
    fs = ph.fs
    al, ald, be, bed = ph.alpha, ph.alpha_dag, ph.beta, ph.beta_dag
    out = quartic(_x_y_coeff(W, "xyyx"), ald, ald, al, al, fs)
    out = out + quartic(_x_y_coeff(W, "xyyx"), bed, bed, be, be, fs)
    out = out - 2.0 * quartic(_x_y_coeff(W, "xyyx"), ald, bed, be, al, fs)
    out = out + 2.0 * quartic(_x_y_coeff(W, "xxyy"), ald, bed, be, al, fs)
    return out


def l4_off(W, ph: PHData):
    fs = ph.fs
    al, ald, be, bed = ph.alpha, ph.alpha_dag, ph.beta, ph.beta_dag
    out = 2.0 * quartic(_x_y_coeff(W, "xyyx"), ald, be, al, al, fs)
    out = out - 2.0 * quartic(_x_y_coeff(W, "xxyy"), bed, be, be, al, fs)
    out = out + quartic(_x_y_coeff(W, "xyyx"), be, be, al, al, fs)
    return out + out.T


def two_body_rhs(W, ph: PHData):
    fs = ph.fs
    return (scalar_term(W, ph.gamma) * fs.identity + quadratic_terms(W, ph)
            + l4_diag(W, ph) + l4_off(W, ph))


def pair_interaction(W, fs: FockSpace):
    """``int V(x-y) a_x^* a_y^* a_y a_x``."""
    return quartic(_x_y_coeff(W, "xyyx"), fs.creators, fs.creators, fs.annihilators, fs.annihilators, fs)


def verify_two_body_conjugation(W, ph: PHData) -> float:
    lhs = ph.R.T @ pair_interaction(W, ph.fs) @ ph.R
    return _opnorm(lhs - two_body_rhs(W, ph))


def direct_exchange(W, G):
    """Mode matrices of ``int V(x-y) gamma(y,y)`` and of ``X_gamma``."""
    J = _gamma_contract(W, G, "yy")
    K = np.einsum("st,isjt->ij", G, W)
    # K_ij = sum_st G_st int V phi_i(x) phi_s(x) phi_t(y) phi_j(y)
    return J, K


def hf_operator(h, W, G, N):
    J, K = direct_exchange(W, G)
    return np.asarray(h) + (J - K) / N


def hf_energy_modes(h, W, G, N) -> float:
    """``Tr h G + (2N)^-1 [int V rho rho - int V |G(x,y)|^2]`` in mode space."""
    return float(np.trace(np.asarray(h) @ G)) + scalar_term(W, G) / (2.0 * N)


def verify_lemma1_assembly(h, W, N, ph: PHData) -> float:
    """``R^* H R`` against the Hartree-Fock expansion plus ``L4 / (2N)``."""
    fs = ph.fs
    H = build_hamiltonian_fock(h, vtensor(W), N, fs)
    lhs = ph.R.T @ H @ ph.R
    Hhf = hf_operator(h, W, ph.gamma, N)
    u, v = ph.u, ph.v
    rhs = hf_energy_modes(h, W, ph.gamma, N) * fs.identity
    rhs = rhs + second_quantize(u @ Hhf @ u.T, fs) - second_quantize(v @ Hhf.T @ v.T, fs)
    pair = pair_bilinear(u @ Hhf @ v.T, fs.creators, fs.creators, fs)
    rhs = rhs + pair + pair.T
    rhs = rhs + (l4_diag(W, ph) + l4_off(W, ph)) / (2.0 * N)
    return _opnorm(lhs - rhs)


# -- quadratic-form bounds --------------------------------------------------------

def min_eigenvalue(A) -> float:
    A = _dense(A)
    return float(np.linalg.eigvalsh(0.5 * (A + A.T))[0])


def max_eigenvalue(A) -> float:
    A = _dense(A)
    return float(np.linalg.eigvalsh(0.5 * (A + A.T))[-1])


def verify_quadratic_form_bounds(W, ph: PHData, hbar, N, C0, vnorm, vhat_l1) -> dict:
    """Minimum eigenvalues of (bound side - bounded side) for the exchange,
    off-diagonal and diagonal estimates."""
    fs = ph.fs
    G = ph.gamma
    num = fs.number
    one = fs.identity
    _, X = direct_exchange(W, G)
    u, v = ph.u, ph.v
    ex_u = second_quantize(u @ X @ u.T, fs) / N
    ex_v = second_quantize(v @ X.T @ v.T, fs) / N
    ex_rhs = vhat_l1 * num / N
    L4d = l4_diag(W, ph) / N
    L4o = l4_off(W, ph) / N
    diag_bound = 20.0 * C0 * vnorm * hbar * (num + one)
    off_bound = 10.0 * C0 * vnorm * hbar * (num + one)
    report = {
        "exchange_u_plus": min_eigenvalue(ex_rhs - ex_u),
        "exchange_u_minus": min_eigenvalue(ex_rhs + ex_u),
        "exchange_v_plus": min_eigenvalue(ex_rhs - ex_v),
        "exchange_v_minus": min_eigenvalue(ex_rhs + ex_v),
        "offdiag_plus": min_eigenvalue(off_bound - L4o),
        "offdiag_minus": min_eigenvalue(off_bound + L4o),
        "diag": min_eigenvalue(L4d + diag_bound),
        "exchange_max_expectation": max_eigenvalue(ex_u),
    }
    report["scale"] = max(1.0, _opnorm(ex_rhs), _opnorm(diag_bound), _opnorm(L4d), _opnorm(L4o))
    return report


def compressed_plane_wave(modes, grid: Grid, xi):
    """``<phi_i, e^{i xi x} phi_j>`` for lattice mode vectors."""
    e = np.exp(1j * xi * grid.points)
    return modes.T @ (e[:, None] * modes)


def mode_commutator_constant(modes, G, grid: Grid, xis, N, hbar) -> float:
    """``max_xi ||[G, E_xi]||_Tr / (|xi| N hbar)`` with compressed plane waves."""
    best = 0.0
    for xi in xis:
        if xi == 0:
            continue
        E = compressed_plane_wave(modes, grid, xi)
        c = G @ E - E @ G
        best = max(best, float(np.sum(np.linalg.svd(c, compute_uv=False))) / (abs(xi) * N * hbar))
    return best


def verify_gap_inequality(H, mu, eps) -> float:
    """Minimum eigenvalue of ``eps^-1 dGamma(|H - mu|) + #window - Number``."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    H = np.asarray(H, dtype=float)
    w, q = np.linalg.eigh(0.5 * (H + H.T))
    absH = (q * np.abs(w - mu)) @ q.T
    count = int(np.count_nonzero(np.abs(w - mu) <= eps))
    fs = FockSpace(H.shape[0])
    op = second_quantize(absH, fs) / eps + count * fs.identity - fs.number
    return min_eigenvalue(op)


# -- N-body sectors ----------------------------------------------------------------

@dataclass
class NBodySector:
    fs: FockSpace
    N: int
    states: np.ndarray
    H: np.ndarray

    @property
    def dim(self):
        return self.states.size

    def embed(self, psi):
        out = np.zeros(self.fs.dim, dtype=np.asarray(psi).dtype)
        out[self.states] = psi
        return out


def nbody_sector(H_fock, fs: FockSpace, N) -> NBodySector:
    states = np.flatnonzero(fs.popcount == N)
    assert states.size == comb(fs.M, N)
    Hs = H_fock[states][:, states]
    return NBodySector(fs, N, states, Hs)


def ground_state(sector: NBodySector):
    """Lowest eigenpair of the sector Hamiltonian; returns (Psi in Fock space, E0)."""
    H = sector.H
    if sector.dim <= 4000:
        Hd = _dense(H)
        w, v = np.linalg.eigh(0.5 * (Hd + Hd.T))
        E0, psi = float(w[0]), v[:, 0]
    else:
        try:
            w, v = spla.eigsh(sp.csr_matrix(H), k=1, which="SA", tol=1e-12, maxiter=20000)
        except spla.ArpackNoConvergence as exc:
            raise EigensolverError(str(exc)) from exc
        E0, psi = float(w[0]), v[:, 0]
    psi = psi / np.linalg.norm(psi)
    # fix the overall sign deterministically
    k = int(np.argmax(np.abs(psi)))
    if psi[k] < 0:
        psi = -psi
    return sector.embed(psi), E0


def reduced_density(Psi, fs: FockSpace) -> np.ndarray:
    """``gamma_ij = <Psi, a_j^* a_i Psi>``."""
    Psi = np.asarray(Psi)
    aPsi = np.stack([fs.a(i) @ Psi for i in range(fs.M)])
    return np.real(aPsi.conj() @ aPsi.T).T


def fluctuation_number(Psi, ph: PHData) -> dict:
    """``<R^* Psi, Number R^* Psi>`` directly and via the one-body identity."""
    fs = ph.fs
    Omega = ph.R.T @ Psi
    direct = float(np.real(np.vdot(Omega, fs.number @ Omega)))
    op = (np.trace(ph.gamma) * fs.identity + second_quantize(ph.u @ ph.u.T, fs)
          - second_quantize(ph.v @ ph.v.T, fs))
    via = float(np.real(np.vdot(Psi, op @ Psi)))
    return {"direct": direct, "identity": via, "mismatch": abs(direct - via)}


def rdm_difference_check(Psi, ph: PHData) -> dict:
    """Field-operator identity for ``gamma_Psi - gamma`` and the trace-norm bound."""
    fs = ph.fs
    M = fs.M
    Omega = ph.R.T @ Psi
    gPsi = reduced_density(Psi, fs)
    D = gPsi - ph.gamma
    al, be = ph.alpha, ph.beta

    def vec(ops):
        return [None if o is None else o @ Omega for o in ops]

    aO, bO = vec(al), vec(be)
    bdO = [None if o is None else o.T @ Omega for o in be]
    rhs = np.zeros((M, M))
    for i in range(M):
        for j in range(M):
            val = 0.0
            if aO[i] is not None and aO[j] is not None:
                val += np.vdot(aO[j], aO[i])  # <alpha_j^* alpha_i>
            if bO[i] is not None and bO[j] is not None:
                val -= np.vdot(bO[i], bO[j])  # <beta_i^* beta_j>
            if aO[j] is not None and bdO[i] is not None:
                val += np.vdot(aO[j], bdO[i])  # <alpha_j^* beta_i^*>
            if be[j] is not None and aO[i] is not None:
                val += np.vdot(Omega, be[j] @ aO[i])  # <beta_j alpha_i>
            rhs[i, j] = np.real(val)
    fluct = float(np.real(np.vdot(Omega, fs.number @ Omega)))
    tn = trace_norm(0.5 * (D + D.T))
    c = tn / (np.sqrt(np.trace(ph.gamma)) * np.sqrt(fluct + 1.0)) if np.trace(ph.gamma) > 0 else 0.0
    return {"identity_residual": float(np.max(np.abs(D - rhs))), "trace_norm": tn,
            "fluctuation": fluct, "c": float(c)}


def slater_states(M, N):
    return [tuple(c) for c in combinations(range(M), N)]


# -- fermionic estimates ---------------------------------------------------------

ESTIMATES = ("A1", "A2", "A3", "A4", "A5", "A6", "A7", "A8")


def _fock_sqrt(fs: FockSpace, shift=0.0):
    return sp.diags(np.sqrt(fs.popcount + shift)).tocsr()


def estimate_margins(A, Psi, Phi, fs: FockSpace) -> dict:
    """``rhs - lhs`` for each of the eight standard fermionic estimates."""
    A = np.asarray(A, dtype=complex)
    norm = np.linalg.norm
    s = np.linalg.svd(A, compute_uv=False)
    op, hs, tr = float(s[0]), float(np.sqrt(np.sum(s**2))), float(np.sum(s))
    dG = second_quantize(A, fs)
    ann = pair_bilinear(A, fs.annihilators, fs.annihilators, fs)
    cre = pair_bilinear(A, fs.creators, fs.creators, fs)
    nP = norm(Psi)
    sqN = _fock_sqrt(fs)
    sqN1 = _fock_sqrt(fs, 1.0)
    dPsi = dG @ Psi
    return {
        "A1": op * norm(fs.number @ Psi) - norm(dPsi),
        "A2": op * norm(sqN @ Psi) * norm(sqN @ Phi) - abs(np.vdot(Psi, dG @ Phi)),
        "A3": hs * norm(sqN @ Psi) - norm(dPsi),
        "A4": hs * norm(sqN @ Psi) - norm(ann @ Psi),
        "A5": hs * norm(sqN1 @ Psi) - norm(cre @ Psi),
        "A6": tr * nP - norm(dPsi),
        "A7": tr * nP - norm(ann @ Psi),
        "A8": tr * nP - norm(cre @ Psi),
    }


def estimate_battery(M=6, trials=100, seed=0, tol=1e-12) -> dict:
    """Random ``(A, Psi)`` trials; counts violations per estimate."""
    rng = np.random.default_rng(seed)
    fs = FockSpace(M)
    worst = {k: np.inf for k in ESTIMATES}
    violations = {k: 0 for k in ESTIMATES}
    for t in range(trials):
        A = rng.normal(size=(M, M)) + 1j * rng.normal(size=(M, M))
        if t % 3 == 1:
            # low rank, where the trace-class bounds are closest to tight
            A = np.outer(A[:, 0], A[0, :])
        Psi = rng.normal(size=fs.dim) + 1j * rng.normal(size=fs.dim)
        Phi = rng.normal(size=fs.dim) + 1j * rng.normal(size=fs.dim)
        if t % 4 == 2:
            # fixed particle number states
            k = rng.integers(0, M + 1)
            Psi = np.where(fs.popcount == k, Psi, 0)
        Psi /= np.linalg.norm(Psi)
        Phi /= np.linalg.norm(Phi)
        for k, m in estimate_margins(A, Psi, Phi, fs).items():
            scale = 1.0 + abs(m)
            worst[k] = min(worst[k], float(m))
            if m < -tol * scale:
                violations[k] += 1
    return {"trials": trials, "M": M, "violations": violations, "min_margin": worst}
