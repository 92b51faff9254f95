"""Warped-product conformally compact backgrounds and their Schouten spectra.

A background is the metric dt^2 + phi(t)^2 g_{S^n} on the (n+1)-ball, with
defining function x = exp(-t).  Einstein metrics are normalised to
Ric = -n g, so the hyperbolic metric has Schouten tensor -g/2.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from math import comb

import numpy as np

from .symfunc import Spectrum

__all__ = [
    "Family",
    "WarpedBackground",
    "SchoutenEigs",
    "ModelConstants",
    "beta0",
    "c_kn",
    "c_kn_closed_form",
    "model_constants",
    "schouten_eigs_warped",
    "schouten_eigs_center",
    "conformal_schouten_eigs",
    "is_einstein",
]

# phi > 0 is checked on (0, _POSITIVITY_TMAX]
_POSITIVITY_TMAX = 40.0


class Family(enum.Enum):
    HYPERBOLIC = "hyperbolic"
    PERTURBED = "perturbed"
    FLAT = "flat"


def _bump(t):
    """psi(t) = t^2 tanh(t) sech(t) and its first two derivatives.

    Odd in t, so the perturbed warp stays smooth at the centre of the ball;
    decays like 2 t^2 exp(-t).
    """
    th = np.tanh(t)
    sh = 1.0 / np.cosh(t)
    g = th * sh
    g1 = sh * (sh * sh - th * th)
    g2 = sh * th * (th * th - 5.0 * sh * sh)
    psi = t * t * g
    psi1 = 2.0 * t * g + t * t * g1
    psi2 = 2.0 * g + 4.0 * t * g1 + t * t * g2
    return psi, psi1, psi2


@dataclass(frozen=True)
class WarpedBackground:
    """dt^2 + phi(t)^2 g_{S^n} with phi from one of the :class:`Family` members.

    ``PERTURBED`` uses phi = sinh t + a * psi(t), psi = t^2 tanh t sech t.
    ``FLAT`` (phi = t) is Euclidean space, kept as a curvature-free reference.
    """

    n: int
    family: Family = Family.HYPERBOLIC
    a: float = 0.0

    def __post_init__(self):
        if isinstance(self.family, str):
            object.__setattr__(self, "family", Family(self.family.lower()))
        if self.n < 2:
            raise ValueError(f"boundary dimension n={self.n} must be >= 2")
        object.__setattr__(self, "a", float(self.a))
        if self.family is not Family.PERTURBED and self.a != 0.0:
            raise ValueError(f"amplitude a={self.a} only applies to the perturbed family")
        ts = np.linspace(1e-3, _POSITIVITY_TMAX, 4001)
        if np.any(self.phi(ts) <= 0):
            raise ValueError(f"warp phi is not positive for a={self.a}")

    @property
    def m(self) -> int:
        return self.n + 1

    def derivs(self, t):
        """Return (phi, phi', phi'' , phi' - 1) at ``t``.

        phi' - 1 is formed without cancellation so that (phi'^2 - 1)/phi^2
        stays accurate near the centre.
        """
        t = np.asarray(t, dtype=float)
        if self.family is Family.FLAT:
            return t.copy(), np.ones_like(t), np.zeros_like(t), np.zeros_like(t)
        sh = np.sinh(t)
        ch = np.cosh(t)
        half = np.sinh(0.5 * t)
        phi, phi1, phi2, phi1m = sh, ch, sh, 2.0 * half * half
        if self.family is Family.PERTURBED and self.a != 0.0:
            psi, psi1, psi2 = _bump(t)
            phi = phi + self.a * psi
            phi1 = phi1 + self.a * psi1
            phi2 = phi2 + self.a * psi2
            phi1m = phi1m + self.a * psi1
        return phi, phi1, phi2, phi1m

    def phi(self, t):
        return self.derivs(t)[0]

    def logwarp(self, t):
        """phi'(t) / phi(t)."""
        phi, phi1, _, _ = self.derivs(t)
        return phi1 / phi

    @property
    def phi3_center(self) -> float:
        """phi'''(0); fixes the (isotropic) curvature at the centre."""
        if self.family is Family.FLAT:
            return 0.0
        # sinh''' (0) = 1 and psi = t^3 + O(t^5)
        return 1.0 + 6.0 * self.a if self.family is Family.PERTURBED else 1.0


@dataclass(frozen=True)
class SchoutenEigs:
    """Radial and tangential (multiplicity n) eigenvalues of A_g at ``t``."""

    lam_r: float
    lam_t: float
    t: float
    n: int

    def spectrum(self) -> Spectrum:
        return Spectrum([self.lam_r] + [self.lam_t] * self.n)


@dataclass(frozen=True)
class ModelConstants:
    n: int
    k: int
    beta0: float
    ckn: float


def _check_nk(n: int, k: int):
    if not 1 <= k <= n + 1:
        raise ValueError(f"k={k} out of range 1..{n + 1}")


def beta0(n: int, k: int) -> float:
    """sigma_k constant of hyperbolic space: 2^-k C(n+1, k)."""
    _check_nk(n, k)
    return comb(n + 1, k) / 2.0 ** k


def c_kn(n: int, k: int) -> float:
    """Coefficient of T_{k-1}(g/2) = c_kn g, from the alternating binomial sum.

    Equals 2^{1-k} C(n, k-1).
    """
    _check_nk(n, k)
    total = sum((-1) ** j * comb(n + 1, k - 1 - j) for j in range(k))
    return total / 2.0 ** (k - 1)


def c_kn_closed_form(n: int, k: int) -> float:
    """Competing closed form 2^{1-k} C(n, k); equals c_kn only where C(n, k) = C(n, k-1)."""
    _check_nk(n, k)
    return comb(n, k) / 2.0 ** (k - 1)


def model_constants(n: int, k: int) -> ModelConstants:
    return ModelConstants(n=n, k=k, beta0=beta0(n, k), ckn=c_kn(n, k))


def _schouten_arrays(bg: WarpedBackground, t):
    n = bg.n
    phi, phi1, phi2, phi1m = bg.derivs(t)
    ratio2 = phi2 / phi
    grad = phi1m * (phi1 + 1.0) / (phi * phi)
    ric_r = -n * ratio2
    ric_t = -ratio2 - (n - 1) * grad
    scal = ric_r + n * ric_t
    lam_r = (ric_r - scal / (2 * n)) / (n - 1)
    lam_t = (ric_t - scal / (2 * n)) / (n - 1)
    return lam_r, lam_t


def schouten_eigs_warped(bg: WarpedBackground, t: float) -> SchoutenEigs:
    """Eigenvalues of A_g = (Ric - R g / 2n) / (n - 1) at radius ``t > 0``."""
    if not t > 0:
        raise ValueError(f"t={t} must be positive; use schouten_eigs_center at t=0")
    lam_r, lam_t = _schouten_arrays(bg, float(t))
    return SchoutenEigs(float(lam_r), float(lam_t), float(t), bg.n)


def schouten_eigs_center(bg: WarpedBackground) -> SchoutenEigs:
    """Limit t -> 0, where A_g = -phi'''(0)/2 * g."""
    lam = -0.5 * bg.phi3_center
    return SchoutenEigs(lam, lam, 0.0, bg.n)


def schouten_on_nodes(bg: WarpedBackground, t: np.ndarray):
    """Vectorised (lam_r, lam_t) on an array of radii; t = 0 uses the centre limit."""
    t = np.asarray(t, dtype=float)
    lam_r = np.empty_like(t)
    lam_t = np.empty_like(t)
    pos = t > 0
    lam_r[pos], lam_t[pos] = _schouten_arrays(bg, t[pos])
    centre = schouten_eigs_center(bg)
    lam_r[~pos] = centre.lam_r
    lam_t[~pos] = centre.lam_t
    return lam_r, lam_t


def conformal_schouten_eigs(A: SchoutenEigs, u: float, u1: float, u2: float,
                            logwarp: float) -> Spectrum:
    """Spectrum of A_{e^{2u} g}, measured against g, for radial u.

    The Hessian of u has eigenvalues u'' (radial) and u' phi'/phi (tangential);
    ``u`` itself does not enter.
    """
    lam_r = A.lam_r - u2 + u1 * u1 - 0.5 * u1 * u1
    lam_t = A.lam_t - u1 * logwarp - 0.5 * u1 * u1
    return Spectrum([lam_r] + [lam_t] * A.n)


def is_einstein(A: SchoutenEigs, tol: float) -> bool:
    if not tol > 0:
        raise ValueError("tol must be positive")
    return abs(A.lam_r - A.lam_t) <= tol
