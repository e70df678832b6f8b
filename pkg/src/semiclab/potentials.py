"""External traps, pair potentials, Fourier cutoffs and convolutions.

Fourier convention: ``V(x) = int exp(i x xi) Vhat(xi) dxi``.  Every pair
potential that is not a bare power law is carried as a positive cosine sum
``V(r) = sum_q w_q cos(xi_q r)`` with ``xi_q >= 0`` and ``w_q >= 0``, which
is exactly a nonnegative Fourier profile; the same nodes feed the Fock-space
tensors and the norms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.integrate import quad
from scipy.special import gamma as gamma_fn

from .errors import (CutoffTooSmallError, DimensionError, DomainError,
                     InvalidDensityError, NotRegularError, RangeError,
                     SingularFrequencyError)
from .lattice import Grid

_GL_ORDER = 16


# -- external potentials -------------------------------------------------------

@dataclass(frozen=True)
class ExternalPotential:
    """Trap ``U``: ``harmonic`` (omega2 x^2), ``polynomial`` (even coefficients
    of 1, x^2, x^4, ...) or ``tabulated`` samples interpolated linearly."""

    kind: str
    omega2: float = 1.0
    coefficients: tuple = ()
    x: Optional[np.ndarray] = None
    values: Optional[np.ndarray] = None
    d: int = 1

    def __post_init__(self):
        if self.kind == "harmonic":
            if not self.omega2 > 0:
                raise DomainError("harmonic stiffness must be positive")
        elif self.kind == "polynomial":
            if len(self.coefficients) == 0:
                raise DomainError("polynomial potential needs coefficients")
        elif self.kind == "tabulated":
            if self.x is None or self.values is None or len(self.x) != len(self.values):
                raise DomainError("tabulated potential needs matching x and values")
            if np.any(np.diff(self.x) <= 0):
                raise DomainError("tabulated x must be strictly increasing")
        else:
            raise DomainError(f"unknown external potential kind {self.kind!r}")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "harmonic":
            return self.omega2 * x**2
        if self.kind == "polynomial":
            x2 = x**2
            out = np.zeros_like(x2)
            for c in reversed(self.coefficients):
                out = out * x2 + c
            return out
        lo, hi = self.x[0], self.x[-1]
        span = 1e-9 * max(1.0, hi - lo)
        if np.any(x < lo - span) or np.any(x > hi + span):
            raise DomainError("grid extends beyond the tabulated potential")
        return np.interp(x, self.x, self.values)


def harmonic(omega2=1.0) -> ExternalPotential:
    return ExternalPotential("harmonic", omega2=float(omega2))


def even_polynomial(coefficients) -> ExternalPotential:
    return ExternalPotential("polynomial", coefficients=tuple(float(c) for c in coefficients))


def tabulated(x, values, d=1) -> ExternalPotential:
    return ExternalPotential("tabulated", x=np.asarray(x, float), values=np.asarray(values, float), d=d)


def load_tabulated(path) -> ExternalPotential:
    """Read the two-column ``x value`` format with a ``# potential d=<d>`` header."""
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
    if not header.startswith("# potential"):
        raise DomainError(f"{path}: missing '# potential d=<d>' header")
    d = None
    for token in header.split()[2:]:
        if token.startswith("d="):
            d = int(token[2:])
    if d is None:
        raise DomainError(f"{path}: header does not declare d")
    data = np.loadtxt(path, comments="#", ndmin=2)
    if data.shape[1] != 2:
        raise DomainError(f"{path}: expected two columns")
    return tabulated(data[:, 0], data[:, 1], d=d)


def sample_external(U: ExternalPotential, grid: Grid) -> np.ndarray:
    """``U`` on the grid, checking that it confines by at least one energy unit."""
    values = U(grid.points)
    centre = float(U(np.array([0.0]))[0])
    if min(values[0], values[-1]) < centre + 1.0:
        raise DomainError("external potential is not confining on this box")
    return values


# -- pair potentials -----------------------------------------------------------

def riesz_constant(d, a):
    """``C_{d,a}`` with ``Vhat = lambda C_{d,a} |xi|^(a-d)`` for ``lambda |x|^-a``."""
    if not 0 < a < d:
        raise DomainError(f"need 0 < a < d, got a={a}, d={d}")
    return ((2 * np.pi) ** (-d) * np.pi ** (d / 2) * 2.0 ** (d - a)
            * gamma_fn((d - a) / 2) / gamma_fn(a / 2))


@dataclass(frozen=True)
class PowerLaw:
    lam: float
    a: float
    d: int = 1

    def __post_init__(self):
        if not self.lam > 0:
            raise DomainError("pair.lambda must be positive")
        if not 0 < self.a < self.d or (self.d == 1 and self.a >= 1):
            raise DomainError(f"pair exponent a={self.a} outside (0, min(d, 1))")


@dataclass(frozen=True)
class Regular:
    """Nonnegative even profile tabulated on ``xi >= 0`` (linear interpolation,
    zero beyond the last node) plus an optional zero-frequency mass
    ``constant`` (a delta at ``xi = 0``, i.e. a constant shift of ``V``)."""

    xi: np.ndarray
    profile: np.ndarray
    constant: float = 0.0
    d: int = 1

    def __post_init__(self):
        xi = np.asarray(self.xi, float)
        prof = np.asarray(self.profile, float)
        if xi.shape != prof.shape or xi.ndim != 1 or xi.size < 2:
            raise DomainError("profile table needs at least two matching entries")
        if xi[0] < 0 or np.any(np.diff(xi) <= 0):
            raise DomainError("profile nodes must start at xi >= 0 and increase")
        if np.any(prof < 0) or self.constant < 0:
            raise DomainError("Fourier profile must be nonnegative")
        if not np.all(np.isfinite(prof)):
            raise DomainError("Fourier profile must be finite")
        object.__setattr__(self, "xi", xi)
        object.__setattr__(self, "profile", prof)


def regular_from_function(fn, xi_max, L, constant=0.0) -> Regular:
    """Sample ``fn`` on a uniform xi-grid with spacing at most ``pi / (2L)``."""
    m = int(math.ceil(xi_max / (np.pi / (2 * L)))) + 1
    xi = np.linspace(0.0, xi_max, max(m, 2))
    return Regular(xi, np.asarray(fn(xi), float), constant=constant)


def zero_potential() -> Regular:
    return Regular(np.array([0.0, 1.0]), np.zeros(2))


def constant_potential(c) -> Regular:
    return Regular(np.array([0.0, 1.0]), np.zeros(2), constant=float(c))


@dataclass(frozen=True)
class FourierNodes:
    """``V(r) = sum w_q cos(xi_q r)``; ``w`` absorbs both signs of xi."""

    xi: np.ndarray
    w: np.ndarray

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        out = np.zeros(r.size)
        flat = r.ravel()
        # chunk to keep the cos table small
        step = max(1, 4_000_000 // max(self.xi.size, 1))
        for s in range(0, flat.size, step):
            out[s:s + step] = np.cos(np.outer(flat[s:s + step], self.xi)) @ self.w
        return out.reshape(r.shape)

    @property
    def l1(self):
        return float(np.sum(self.w))

    @property
    def norm(self):
        return float(np.sum(self.w * (1.0 + self.xi)))


@dataclass(frozen=True)
class CutoffPotential:
    Lambda: float
    grid: Grid
    v_cut: np.ndarray
    tail: np.ndarray
    source: object
    nodes: FourierNodes = field(repr=False)

    @property
    def d(self):
        return self.source.d


def _gl(order=_GL_ORDER):
    return np.polynomial.legendre.leggauss(order)


def _panel_edges(a, b, hmax):
    m = max(1, int(math.ceil((b - a) / hmax)))
    return np.linspace(a, b, m + 1)


def _panel_nodes(edges, order=_GL_ORDER):
    t, wt = _gl(order)
    lo, hi = edges[:-1, None], edges[1:, None]
    half = 0.5 * (hi - lo)
    x = (lo + hi) / 2 + half * t[None, :]
    return x.ravel(), (half * wt[None, :]).ravel()


def _panel_width(r_max):
    return np.pi / max(r_max, 1.0)


def _powerlaw_nodes(V: PowerLaw, Lambda, r_max):
    """Nodes for ``2 lambda C int_0^Lambda xi^(a-1) cos(r xi) dxi``."""
    c = 2.0 * V.lam * riesz_constant(V.d, V.a)
    h = min(_panel_width(r_max), Lambda)
    t, wt = _gl()
    # first panel: s = xi^a removes the integrable singularity
    smax = h**V.a
    s = smax / 2 * (t + 1)
    xi0 = s ** (1.0 / V.a)
    w0 = smax / 2 * wt / V.a
    xs, ws = [xi0], [w0]
    if Lambda > h:
        x1, w1 = _panel_nodes(_panel_edges(h, Lambda, _panel_width(r_max)))
        xs.append(x1)
        ws.append(w1 * x1 ** (V.a - 1.0))
    xi = np.concatenate(xs)
    return FourierNodes(xi, c * np.concatenate(ws))


def _profile_interp(V: Regular, xi):
    xi = np.abs(np.asarray(xi, float))
    out = np.interp(xi, V.xi, V.profile, left=0.0, right=0.0)
    if V.xi[0] > 0:
        out = np.where(xi < V.xi[0], 0.0, out)
    return out


def _regular_nodes(V: Regular, r_max, lo=0.0, hi=np.inf):
    """Cosine nodes for the profile restricted to ``lo <= |xi| <= hi``."""
    knots = V.xi[(V.xi > lo) & (V.xi < hi)]
    a = max(lo, V.xi[0])
    b = min(hi, V.xi[-1])
    xs, ws = [], []
    if b > a:
        pts = np.concatenate([[a], knots, [b]])
        hmax = _panel_width(r_max)
        for p, q in zip(pts[:-1], pts[1:]):
            if q <= p:
                continue
            x, w = _panel_nodes(_panel_edges(p, q, hmax), order=8)
            xs.append(x)
            ws.append(2.0 * w * _profile_interp(V, x))
    if V.constant > 0 and lo <= 0.0:
        xs.append(np.zeros(1))
        ws.append(np.array([V.constant]))
    if not xs:
        return FourierNodes(np.zeros(0), np.zeros(0))
    xi = np.concatenate(xs)
    w = np.concatenate(ws)
    keep = w > 0
    return FourierNodes(xi[keep], w[keep])


def pair_nodes(V, grid: Grid):
    """Positive cosine representation of a regular or cutoff potential."""
    if isinstance(V, CutoffPotential):
        return V.nodes
    if isinstance(V, Regular):
        return _regular_nodes(V, 2.0 * grid.L)
    raise NotRegularError("a bare power law has no finite Fourier representation; apply a cutoff")


def pair_fourier(V, xi):
    """``Vhat(xi)``."""
    xi_arr = np.abs(np.asarray(xi, dtype=float))
    if isinstance(V, PowerLaw):
        if np.any(xi_arr == 0):
            raise SingularFrequencyError("power-law Fourier transform is singular at xi = 0")
        out = V.lam * riesz_constant(V.d, V.a) * xi_arr ** (V.a - V.d)
    elif isinstance(V, Regular):
        out = _profile_interp(V, xi_arr)
    elif isinstance(V, CutoffPotential):
        inside = xi_arr <= V.Lambda
        safe = np.where(inside, np.maximum(xi_arr, 1e-300), 1.0)
        out = np.where(inside, pair_fourier(V.source, safe), 0.0)
    else:
        raise TypeError(f"unsupported pair potential {type(V).__name__}")
    return float(out) if np.ndim(xi) == 0 else out


def pair_values(V, r, grid: Optional[Grid] = None):
    """``V(r)`` at distances ``r`` (a bare power law diverges at 0)."""
    r = np.abs(np.asarray(r, dtype=float))
    if isinstance(V, PowerLaw):
        with np.errstate(divide="ignore"):
            return V.lam * r ** (-V.a)
    if isinstance(V, CutoffPotential):
        return V.nodes(r)
    if isinstance(V, Regular):
        r_max = 2.0 * grid.L if grid is not None else max(float(np.max(r, initial=1.0)), 1.0)
        return _regular_nodes(V, r_max)(r)
    raise TypeError(f"unsupported pair potential {type(V).__name__}")


def singular_cell_weight(V: PowerLaw, dx):
    """``int_{-dx/2}^{dx/2} lambda |x|^-a dx``."""
    return 2.0 * V.lam * (dx / 2) ** (1.0 - V.a) / (1.0 - V.a)


def pair_kernel(V, grid: Grid) -> np.ndarray:
    """``V(m dx)`` for ``m = 0 .. n-1``; the power-law diagonal is cell-averaged."""
    r = grid.spacing * np.arange(grid.n)
    if isinstance(V, PowerLaw):
        # exact cell averages of |x|^-a; the diagonal is the singular cell
        dx = grid.spacing
        edges = (np.arange(grid.n + 1) - 0.5) * dx
        edges[0] = 0.0
        prim = edges ** (1.0 - V.a) / (1.0 - V.a)
        k = V.lam * np.diff(prim) / dx
        k[0] *= 2.0
        return k
    return pair_values(V, r, grid)


def pair_matrix(V, grid: Grid) -> np.ndarray:
    k = pair_kernel(V, grid)
    idx = np.abs(np.subtract.outer(np.arange(grid.n), np.arange(grid.n)))
    return k[idx]


class Convolver:
    """Precomputed FFT for ``rho -> V * rho`` on a fixed grid."""

    def __init__(self, V, grid: Grid):
        self.grid = grid
        self.kernel = pair_kernel(V, grid)
        n = grid.n
        self.size = 2 * n
        circ = np.zeros(self.size)
        circ[:n] = self.kernel
        circ[n + 1:] = self.kernel[1:][::-1]
        self._fk = np.fft.rfft(circ)

    def __call__(self, rho):
        rho = np.asarray(rho, dtype=float)
        if rho.shape != (self.grid.n,):
            raise DimensionError("density does not live on the convolver grid")
        if np.any(rho < -1e-12):
            raise InvalidDensityError("density has negative entries")
        out = np.fft.irfft(self._fk * np.fft.rfft(rho, self.size), self.size)[: self.grid.n]
        return self.grid.spacing * out


def convolve(V, rho, grid: Grid) -> np.ndarray:
    return Convolver(V, grid)(rho)


def exchange_kernel(V, gamma, grid: Grid) -> np.ndarray:
    """Matrix of ``X(x, y) = V(x - y) gamma(x, y)``."""
    gamma = np.asarray(gamma)
    if gamma.shape != (grid.n, grid.n):
        raise DimensionError(f"gamma has shape {gamma.shape}, grid has n={grid.n}")
    return pair_matrix(V, grid) * gamma


# -- cutoffs, tails, norms -----------------------------------------------------

def apply_cutoff(V, Lambda, grid: Grid) -> CutoffPotential:
    """Fourier truncation ``V_Lambda`` and tail ``W_Lambda = V - V_Lambda``."""
    if Lambda < 1:
        raise CutoffTooSmallError(f"cutoff Lambda={Lambda} < 1")
    r_max = 2.0 * grid.L
    x = grid.points
    if isinstance(V, PowerLaw):
        nodes = _powerlaw_nodes(V, float(Lambda), r_max)
        v_cut = nodes(x)
        with np.errstate(divide="ignore"):
            tail = V.lam * np.abs(x) ** (-V.a) - v_cut
    elif isinstance(V, Regular):
        nodes = _regular_nodes(V, r_max, hi=float(Lambda))
        v_cut = nodes(x)
        tail = _regular_nodes(V, r_max, lo=float(Lambda))(x)
    else:
        raise TypeError(f"cannot cut off {type(V).__name__}")
    return CutoffPotential(float(Lambda), grid, v_cut, tail, V, nodes)


def _power_law_tail_cell(cut: CutoffPotential, p):
    V = cut.source
    h = cut.grid.spacing / 2
    v0 = cut.nodes

    def f(x):
        return abs(V.lam * x ** (-V.a) - float(v0(np.array([x]))[0])) ** p

    val, _ = quad(f, 0.0, h, limit=200)
    return 2.0 * val


def tail_lp_norm(cut: CutoffPotential, p) -> float:
    """Discrete ``L^p`` norm of ``W_Lambda``; a grid point at the origin is
    replaced by the exact cell integral."""
    d = cut.d
    if isinstance(cut.source, PowerLaw):
        upper = d / cut.source.a
        if not 2 <= p < upper:
            raise RangeError(f"p={p} outside the admissible range 2 <= p < d/a = {upper:g}; "
                             "the tail is not in L^p")
    elif p < 2:
        raise RangeError(f"p={p} below 2")
    dx = cut.grid.spacing
    origin = np.abs(cut.grid.points) < dx / 4
    values = np.abs(cut.tail[~origin]) ** p
    total = dx * float(np.sum(values))
    if np.any(origin):
        if isinstance(cut.source, PowerLaw):
            total += _power_law_tail_cell(cut, p)
        else:
            total += dx * float(np.sum(np.abs(cut.tail[origin]) ** p))
    return total ** (1.0 / p)


def v_norm(V) -> float:
    """``||V|| = int Vhat(xi) (1 + |xi|) dxi`` for regular or cutoff potentials."""
    if isinstance(V, CutoffPotential):
        return V.nodes.norm
    if isinstance(V, Regular):
        xi, f = V.xi, V.profile
        mid = 0.5 * (xi[:-1] + xi[1:])
        fm = 0.5 * (f[:-1] + f[1:])
        h = np.diff(xi)
        # Simpson is exact for the quadratic integrand on each segment
        seg = h / 6 * (f[:-1] * (1 + xi[:-1]) + 4 * fm * (1 + mid) + f[1:] * (1 + xi[1:]))
        return 2.0 * float(np.sum(seg)) + V.constant
    raise NotRegularError("v_norm is defined for regular (or cutoff) potentials only")


def fourier_l1(V) -> float:
    """``int Vhat``; equals ``V(0)`` for a positive profile."""
    if isinstance(V, CutoffPotential):
        return V.nodes.l1
    if isinstance(V, Regular):
        h = np.diff(V.xi)
        return float(np.sum(h * (V.profile[:-1] + V.profile[1:]))) + V.constant
    raise NotRegularError("the power law has infinite Fourier L1 norm")
