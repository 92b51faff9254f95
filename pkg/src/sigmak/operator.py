"""The sigma_k-Yamabe residual on a radial grid and its linearisation.

For g~ = e^{2u} g the relevant matrix is B = Hess u - du (x) du + |du|^2 g / 2 - A_g.
On a warped product it is diagonal with one radial entry

    b_r = u'' - u'^2 / 2 - lam_r

and n tangential entries

    b_t = u' phi'/phi + u'^2 / 2 - lam_t,

so sigma_k(B) = C(n, k-1) b_r b_t^(k-1) + C(n, k) b_t^k.  The residual is
sigma_k(B) - beta e^{2ku}.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import comb, sqrt

import numpy as np

from .geometry import WarpedBackground, beta0, c_kn, schouten_on_nodes
from .grid import GridFunction, RadialGrid, diff1, diff2

__all__ = [
    "SigmaProblem",
    "IndicialData",
    "TridiagonalOperator",
    "EvaluationError",
    "SingularLinearizationError",
    "block_sigmas",
    "block_newton_diag",
    "b_entries",
    "residual",
    "linearize",
    "indicial_roots",
    "normal_operator_coeffs",
]


class EvaluationError(ArithmeticError):
    """Non-finite data met while evaluating the residual."""


class SingularLinearizationError(ArithmeticError):
    """Zero pivot in the tridiagonal solve: linearization not invertible."""


@dataclass(frozen=True)
class SigmaProblem:
    """F_k(u) = sigma_k(...) - beta e^{2ku} = 0 on ``bg`` sampled by ``grid``."""

    n: int
    k: int
    beta: float
    bg: WarpedBackground
    grid: RadialGrid
    lam_r: np.ndarray = field(init=False, repr=False, compare=False)
    lam_t: np.ndarray = field(init=False, repr=False, compare=False)
    logwarp: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.bg.n != self.n:
            raise ValueError(f"background has n={self.bg.n}, problem has n={self.n}")
        if not 1 <= self.k <= self.n + 1:
            raise ValueError(f"k={self.k} out of range 1..{self.n + 1}")
        if not self.beta > 0:
            raise ValueError(f"beta={self.beta} must be positive")
        lam_r, lam_t = schouten_on_nodes(self.bg, self.grid.t)
        w = np.zeros_like(self.grid.t)
        w[1:] = self.bg.logwarp(self.grid.t[1:])
        for arr in (lam_r, lam_t, w):
            arr.setflags(write=False)
        object.__setattr__(self, "lam_r", lam_r)
        object.__setattr__(self, "lam_t", lam_t)
        object.__setattr__(self, "logwarp", w)

    @classmethod
    def at_beta0(cls, bg: WarpedBackground, k: int, grid: RadialGrid) -> "SigmaProblem":
        return cls(bg.n, k, beta0(bg.n, k), bg, grid)

    @property
    def ckn(self) -> float:
        return c_kn(self.n, self.k)

    @property
    def boundary_value(self) -> float:
        """Limit of u at x = 0: the equation forces beta e^{2ku} = beta_k^0 there."""
        return float(np.log(beta0(self.n, self.k) / self.beta) / (2 * self.k))

    def with_beta(self, beta: float) -> "SigmaProblem":
        return SigmaProblem(self.n, self.k, beta, self.bg, self.grid)

    def with_background(self, bg: WarpedBackground) -> "SigmaProblem":
        return SigmaProblem(self.n, self.k, self.beta, bg, self.grid)


def block_sigmas(r, t, n: int, kmax: int):
    """sigma_j of (r, t, ..., t) [n copies of t] for j = 1..kmax, stacked on axis 0."""
    r = np.asarray(r, dtype=float)
    t = np.asarray(t, dtype=float)
    return np.stack([comb(n, j - 1) * r * t ** (j - 1) + comb(n, j) * t ** j
                     for j in range(1, kmax + 1)])


def block_newton_diag(r, t, n: int, q: int):
    """Diagonal of T_q for the diagonal matrix diag(r, t, ..., t).

    Entry i of T_q(diag(lam)) is sigma_q of lam with lam_i removed.
    """
    r = np.asarray(r, dtype=float)
    t = np.asarray(t, dtype=float)
    radial = comb(n, q) * t ** q
    if q == 0:
        tangential = np.ones_like(t)
    else:
        tangential = comb(n - 1, q - 1) * r * t ** (q - 1) + comb(n - 1, q) * t ** q
    return radial, tangential


def b_entries(p: SigmaProblem, u: np.ndarray):
    """Radial and tangential entries of B, with first and second derivatives of u."""
    h = p.grid.h
    u1 = diff1(u, h)
    u2 = diff2(u, h)
    drift = u1 * p.logwarp
    # at t = 0, u' phi'/phi -> u''(0)
    drift[0] = u2[0]
    b_r = u2 - 0.5 * u1 * u1 - p.lam_r
    b_t = drift + 0.5 * u1 * u1 - p.lam_t
    return b_r, b_t, u1, u2


def _values(u) -> np.ndarray:
    return u.values if isinstance(u, GridFunction) else np.asarray(u, dtype=float)


def residual(p: SigmaProblem, u) -> GridFunction:
    """sigma_k(B(u)) - beta e^{2ku} at every node (one-sided stencils at T)."""
    vals = _values(u)
    with np.errstate(invalid="ignore", over="ignore"):
        b_r, b_t, _, _ = b_entries(p, vals)
    bad = ~(np.isfinite(b_r) & np.isfinite(b_t))
    if np.any(bad):
        i = int(np.argmax(bad))
        raise EvaluationError(f"non-finite derivative at node {i} (t={p.grid.t[i]:.6g})")
    n, k = p.n, p.k
    sig = comb(n, k - 1) * b_r * b_t ** (k - 1) + comb(n, k) * b_t ** k
    return GridFunction(sig - p.beta * np.exp(2 * k * vals), p.grid)


@dataclass(frozen=True)
class TridiagonalOperator:
    """Rows 0..N-1 of the discrete linearisation (node N is Dirichlet).

    Row i reads sub[i] v[i-1] + diag[i] v[i] + sup[i] v[i+1].  ``sup[N-1]``
    couples to the boundary node and is dropped by :meth:`solve`.
    """

    sub: np.ndarray
    diag: np.ndarray
    sup: np.ndarray
    h: float
    gamma: float = 0.0

    def __post_init__(self):
        if not len(self.sub) == len(self.diag) == len(self.sup):
            raise ValueError("band lengths differ")

    @property
    def size(self) -> int:
        return len(self.diag)

    def apply(self, v) -> np.ndarray:
        """L v on rows 0..N-1; ``v`` carries all N+1 nodes."""
        v = _values(v)
        if len(v) != self.size + 1:
            raise ValueError(f"expected {self.size + 1} nodal values, got {len(v)}")
        out = self.diag * v[:-1] + self.sup * v[1:]
        out[1:] += self.sub[1:] * v[:-2]
        return out

    def solve(self, rhs) -> np.ndarray:
        """Thomas algorithm with v[N] = 0."""
        return thomas(self.sub, self.diag, self.sup, np.asarray(rhs, dtype=float))

    def coefficients(self):
        """Recover (a2, a1, a0) of a2 d_t^2 + a1 d_t + a0 on rows 1..N-1."""
        h = self.h
        sub, diag, sup = self.sub[1:], self.diag[1:], self.sup[1:]
        a2 = 0.5 * (sub + sup) * h * h
        a1 = (sup - sub) * h
        a0 = diag + 2.0 * a2 / (h * h)
        return a2, a1, a0

    def dense(self) -> np.ndarray:
        m = self.size
        M = np.diag(self.diag) + np.diag(self.sup[:-1], 1) + np.diag(self.sub[1:], -1)
        return M.reshape(m, m)


def thomas(sub, diag, sup, rhs) -> np.ndarray:
    """Solve the tridiagonal system; sub[0] and sup[-1] are ignored."""
    m = len(diag)
    cp = np.empty(m)
    dp = np.empty(m)
    scale = np.max(np.abs(diag)) + np.max(np.abs(sub)) + np.max(np.abs(sup))
    piv = diag[0]
    if abs(piv) <= 1e-14 * scale:
        raise SingularLinearizationError("linearization not invertible (pivot 0)")
    cp[0] = sup[0] / piv
    dp[0] = rhs[0] / piv
    for i in range(1, m):
        piv = diag[i] - sub[i] * cp[i - 1]
        if abs(piv) <= 1e-14 * scale or not np.isfinite(piv):
            raise SingularLinearizationError(f"linearization not invertible (pivot {i})")
        cp[i] = sup[i] / piv
        dp[i] = (rhs[i] - sub[i] * dp[i - 1]) / piv
    out = np.empty(m)
    out[-1] = dp[-1]
    for i in range(m - 2, -1, -1):
        out[i] = dp[i] - cp[i] * out[i + 1]
    return out


def linearize(p: SigmaProblem, u, gamma: float = 0.0) -> TridiagonalOperator:
    """Exact Frechet derivative of :func:`residual` at ``u`` (rows 0..N-1).

    d sigma_k = <T_{k-1}(B), dB> with dB_r = phi'' - u' phi' and
    dB_t = (phi'/phi + u') phi'; the tangential block contributes n times.
    """
    vals = _values(u)
    N, h = p.grid.N, p.grid.h
    n, k = p.n, p.k
    b_r, b_t, u1, _ = b_entries(p, vals)
    Tr, Tt = block_newton_diag(b_r, b_t, n, k - 1)
    Tr, Tt, u1 = Tr[:N], Tt[:N], u1[:N]
    # coefficient of v' and v'' in the derivative
    c2 = Tr.copy()
    c1 = -Tr * u1 + n * Tt * (p.logwarp[:N] + u1)
    c0 = -2 * k * p.beta * np.exp(2 * k * vals[:N])
    h2 = h * h
    sub = c2 / h2 - c1 / (2 * h)
    sup = c2 / h2 + c1 / (2 * h)
    diag = -2.0 * c2 / h2 + c0
    # centre: both B entries move with v''(0) = 2 (v1 - v0) / h^2
    c2_centre = Tr[0] + n * Tt[0]
    sub[0] = 0.0
    sup[0] = 2.0 * c2_centre / h2
    diag[0] = -2.0 * c2_centre / h2 + c0[0]
    return TridiagonalOperator(sub, diag, sup, h, gamma)


@dataclass(frozen=True)
class IndicialData:
    gamma_minus: float
    gamma_plus: float
    ckn: float
    poly: tuple

    def evaluate(self, gamma: float) -> float:
        a, b, c = self.poly
        return a * gamma * gamma + b * gamma + c


def indicial_roots(n: int, k: int, beta: float) -> IndicialData:
    """Roots of c_kn (gamma^2 - n gamma) - 2 k beta = 0."""
    if not beta > 0:
        raise ValueError(f"beta={beta} must be positive")
    c = c_kn(n, k)
    radical = sqrt(n * n / 4.0 + 2.0 * k * beta / c)
    return IndicialData(n / 2.0 - radical, n / 2.0 + radical, c,
                        (c, -n * c, -2.0 * k * beta))


def normal_operator_coeffs(p: SigmaProblem):
    """Coefficients of (s d_s)^2, s d_s and 1 in the radial normal operator."""
    c = p.ckn
    return c, -p.n * c, -2.0 * p.k * p.beta
