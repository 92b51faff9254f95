"""Damped Newton for F_k(u) = 0, continuation in the warp amplitude,
Fredholm-window probes and the Poincare-Einstein intersection test.

Truncation: the unknowns are u_0..u_{N-1}; u_N is pinned to the boundary
limit log(beta_k^0 / beta) / 2k, so constant shifts u -> u + c map solutions
for beta to solutions for beta e^{-2kc} exactly.
"""

from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .geometry import WarpedBackground, beta0, schouten_on_nodes
from .grid import DecayTooFast, GridFunction, RadialGrid, decay_rate, weighted_sup_norm
from .operator import (
    SigmaProblem,
    SingularLinearizationError,
    b_entries,
    block_sigmas,
    indicial_roots,
    linearize,
    residual,
    thomas,
)
from .symfunc import eigs_from_sigmas, sigma_all

__all__ = [
    "SolverParams",
    "SolveReport",
    "ProbeReport",
    "IntersectionReport",
    "newton_solve",
    "continuation",
    "uniqueness_probe",
    "fredholm_probe",
    "intersection_check",
    "sigma_tuple_check",
    "cone_ok",
]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SolverParams:
    tol: float = 1e-10
    max_iter: int = 25
    min_step: float = 1.0 / 64
    cone_guard: bool = True

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError(f"tol={self.tol} must be positive")
        if self.max_iter < 1:
            raise ValueError(f"max_iter={self.max_iter} must be >= 1")


@dataclass
class SolveReport:
    converged: bool
    iterations: int
    residual_history: list
    u: GridFunction
    decay_estimate: Optional[float]
    cone_ok: bool
    beta: float
    k: int
    n: int
    message: str = ""

    def to_json(self) -> dict:
        return {
            "converged": self.converged,
            "iterations": self.iterations,
            "residual_history": [float(r) for r in self.residual_history],
            "beta": float(self.beta),
            "k": self.k,
            "n": self.n,
            "decay_estimate": self.decay_estimate,
            "cone_ok": self.cone_ok,
        }


def cone_ok(p: SigmaProblem, u) -> bool:
    """True when B(u) lies in Gamma_k^+ at every node."""
    vals = u.values if isinstance(u, GridFunction) else np.asarray(u)
    b_r, b_t, _, _ = b_entries(p, vals)
    return bool(np.all(block_sigmas(b_r, b_t, p.n, p.k) > 0))


def _sup(r: GridFunction, N: int) -> float:
    return float(np.max(np.abs(r.values[:N])))


def _decay(p: SigmaProblem, u: np.ndarray) -> Optional[float]:
    try:
        return decay_rate(GridFunction(u - p.boundary_value, p.grid))
    except DecayTooFast:
        return None


def newton_solve(p: SigmaProblem, params: SolverParams = SolverParams(),
                 u0=None) -> SolveReport:
    """Solve F_k(u) = 0 by damped Newton from ``u0`` (default u = 0).

    Each step solves L(u) delta = -F(u) with the Thomas algorithm, then
    halves the step until the sup-norm residual decreases (and, with the cone
    guard, B stays in Gamma_k^+).  Non-convergence is reported, not raised.
    """
    N = p.grid.N
    u = np.zeros(N + 1) if u0 is None else np.array(u0, dtype=float)
    if u.shape != (N + 1,) or not np.all(np.isfinite(u)):
        raise ValueError("u0 must be finite and sampled on the problem grid")
    # shift so u meets the boundary value at T without a kink in the last cell
    u += p.boundary_value - u[N]
    r = residual(p, u)
    history = [_sup(r, N)]
    in_cone = cone_ok(p, u)
    all_in_cone = in_cone
    converged = history[-1] <= params.tol
    iterations = 0
    message = ""
    while not converged and iterations < params.max_iter:
        L = linearize(p, u)
        delta = L.solve(-r.values[:N])
        step = 1.0
        accepted = None
        while step >= params.min_step:
            trial = u.copy()
            trial[:N] += step * delta
            try:
                r_trial = residual(p, trial)
            except ArithmeticError:
                r_trial = None
            if r_trial is not None:
                norm = _sup(r_trial, N)
                guard = not (params.cone_guard and in_cone) or cone_ok(p, trial)
                if np.isfinite(norm) and norm < history[-1] and guard:
                    accepted = (trial, r_trial, norm)
                    break
            step *= 0.5
        if accepted is None:
            message = "line search stalled"
            break
        u, r, norm = accepted
        iterations += 1
        history.append(norm)
        in_cone = cone_ok(p, u)
        all_in_cone = all_in_cone and in_cone
        log.debug("newton %d: step %.4g residual %.3e", iterations, step, norm)
        converged = norm <= params.tol
    if not converged and not message:
        message = "max_iter exceeded"
    return SolveReport(
        converged=converged,
        iterations=iterations,
        residual_history=history,
        u=GridFunction(u, p.grid),
        decay_estimate=_decay(p, u),
        cone_ok=all_in_cone,
        beta=p.beta,
        k=p.k,
        n=p.n,
        message=message,
    )


def continuation(p: SigmaProblem, amplitudes, params: SolverParams = SolverParams()):
    """Walk the perturbed family through ``amplitudes``, warm-starting each solve.

    Stops at the first failed stage; the failing report is the last entry.
    """
    reports = []
    u_prev = None
    for a in amplitudes:
        bg = WarpedBackground(p.n, "perturbed", a)
        stage = p.with_background(bg)
        rep = newton_solve(stage, params, u_prev)
        reports.append(rep)
        if not rep.converged:
            log.info("continuation stopped at a=%g", a)
            break
        u_prev = rep.u.values
    return reports


def uniqueness_probe(p: SigmaProblem, params: SolverParams = SolverParams(),
                     amplitude: float = 0.05) -> float:
    """Largest sup-distance between solves started from 0 and +-``amplitude`` bumps."""
    t = p.grid.t
    bump = amplitude * np.exp(-((t - 3.0) ** 2))
    sols = []
    for u0 in (np.zeros_like(t), bump, -bump):
        rep = newton_solve(p, params, u0)
        if not rep.converged:
            return float("inf")
        sols.append(rep.u.values)
    return float(max(np.max(np.abs(s - sols[0])) for s in sols[1:]))


@dataclass
class ProbeReport:
    gamma: float
    weighted_norm: float
    log_slope: float
    log_flag: bool
    singular: bool = False
    v: Optional[GridFunction] = field(default=None, repr=False)

    def to_json(self) -> dict:
        return {
            "gamma": float(self.gamma),
            "weighted_norm": self.weighted_norm,
            "log_slope": self.log_slope,
            "log_flag": self.log_flag,
            "singular": self.singular,
        }


def _cutoff(t):
    """Smooth step: 0 for t <= 1, 1 for t >= 2."""
    s = np.clip(t - 1.0, 0.0, 1.0)
    with np.errstate(divide="ignore"):
        left = np.where(s > 0, np.exp(-1.0 / np.where(s > 0, s, 1.0)), 0.0)
        right = np.where(s < 1, np.exp(-1.0 / np.where(s < 1, 1.0 - s, 1.0)), 0.0)
    return left / (left + right)


def fredholm_probe(p: SigmaProblem, gamma: float, window: float = 0.25,
                   threshold: float = 0.5) -> ProbeReport:
    """Solve L v = x^gamma chi with L the linearisation at u = 0.

    The outer node carries a transparent condition removing the x^{gamma_-}
    mode, (x d_x - gamma_+) v = f / (c (gamma - gamma_-)), which is exact for
    the normal operator.  At or below gamma_- the dual condition, removing
    x^{gamma_+}, is used instead.  ``log_slope`` is the slope of x^-gamma v
    against log x, scaled by |P'(gamma_+-)| = c (gamma_+ - gamma_-) so that an
    exact x^gamma log x resonance reads +-1.
    """
    g = p.grid
    N, h, t, x = g.N, g.h, g.t, g.x
    ind = indicial_roots(p.n, p.k, p.beta)
    c = ind.ckn
    f = np.exp(-gamma * t) * _cutoff(t)
    if gamma > ind.gamma_minus + 1e-12:
        root, other = ind.gamma_plus, ind.gamma_minus
    else:
        root, other = ind.gamma_minus, ind.gamma_plus
    bc_rhs = f[N] / (c * (gamma - other))

    L = linearize(p, np.zeros(N + 1), gamma=gamma)
    sub = np.append(L.sub, 0.0)
    diag = np.append(L.diag, 0.0)
    sup = np.append(L.sup, 0.0)
    rhs = f.copy()
    # -(3 v_N - 4 v_{N-1} + v_{N-2}) / 2h - root v_N = bc_rhs; eliminate v_{N-2}
    # using row N-1: sub v_{N-2} + diag v_{N-1} + sup v_N = f_{N-1}
    a_m2, a_m1, a_0 = -1.0 / (2 * h), 4.0 / (2 * h), -3.0 / (2 * h) - root
    ratio = a_m2 / L.sub[N - 1]
    sub[N] = a_m1 - ratio * L.diag[N - 1]
    diag[N] = a_0 - ratio * L.sup[N - 1]
    rhs[N] = bc_rhs - ratio * f[N - 1]
    try:
        v = thomas(sub, diag, sup, rhs)
    except SingularLinearizationError:
        return ProbeReport(gamma, float("inf"), float("nan"), True, singular=True)
    vf = GridFunction(v, g)
    norm = weighted_sup_norm(vf, gamma, 0)
    count = max(3, int(np.ceil(window * (N + 1))))
    tail = slice(N + 1 - count, N + 1)
    scaled = v[tail] * np.exp(gamma * t[tail])
    slope = np.polyfit(np.log(x[tail]), scaled, 1)[0]
    log_slope = float(slope * c * (ind.gamma_plus - ind.gamma_minus))
    if not (np.isfinite(norm) and np.isfinite(log_slope)):
        return ProbeReport(gamma, float("inf"), float("nan"), True, singular=True, v=vf)
    return ProbeReport(gamma, norm, log_slope, abs(log_slope) > threshold, v=vf)


@dataclass
class IntersectionReport:
    n: int
    sigmas: Optional[list]
    constant: list
    matches_beta0: list
    failing: list
    eigen_spread: Optional[float]
    einstein: bool
    spectrum: Optional[list] = None
    pointwise_spread: float = 0.0

    def to_json(self) -> dict:
        return dataclasses.asdict(self)


def sigma_tuple_check(sigmas, tol: float = 1e-8):
    """Spectrum, spread and Einstein flag for constant sigma_1..sigma_m."""
    spectrum = eigs_from_sigmas(sigmas).sorted()
    spread = float(spectrum[-1] - spectrum[0])
    return spectrum, spread, spread <= tol


def intersection_check(bg: WarpedBackground, grid: RadialGrid = RadialGrid(12.0, 1000),
                       tol: float = 1e-8) -> IntersectionReport:
    """Test whether ``bg`` lies in every Sigma_k(beta_k^0), k = 1..n+1.

    If all sigma_k(A_g) are constant at (-1)^k beta_k^0 the eigenvalues of
    A_g are reconstructed from them and compared with one another.
    """
    n = bg.n
    lam_r, lam_t = schouten_on_nodes(bg, grid.t)
    spectra = np.column_stack([lam_r] + [lam_t] * n)
    sig = np.array([sigma_all(row)[1:] for row in spectra])
    means = sig.mean(axis=0)
    constant, matches, failing = [], [], []
    for j in range(n + 1):
        k = j + 1
        target = (-1) ** k * beta0(n, k)
        dev = np.abs(sig[:, j] - means[j])
        is_const = bool(np.max(dev) <= tol)
        is_target = bool(np.max(np.abs(sig[:, j] - target)) <= tol)
        constant.append(is_const)
        matches.append(is_target)
        if not (is_const and is_target):
            worst = int(np.argmax(np.abs(sig[:, j] - target)))
            failing.append({"k": k, "t": float(grid.t[worst]),
                            "deviation": float(abs(sig[worst, j] - target))})
    pointwise = float(np.max(np.abs(lam_r - lam_t)))
    if failing:
        return IntersectionReport(n, None, constant, matches, failing, None, False,
                                  None, pointwise)
    spectrum, spread, einstein = sigma_tuple_check(means, tol)
    return IntersectionReport(n, [float(s) for s in means], constant, matches, [],
                              spread, einstein, [float(s) for s in spectrum], pointwise)
