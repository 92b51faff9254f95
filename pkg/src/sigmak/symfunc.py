"""Elementary symmetric functions, Newton transforms and the Gamma_k cones.

All routines work in double precision on small spectra (the geometric use
has m = n + 1 entries).  Matrices may be symmetric ``numpy`` arrays or
:class:`SymMatrix`.
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Spectrum",
    "SymMatrix",
    "Cone",
    "ConeLabel",
    "NonRealSpectrumError",
    "sigma_k",
    "sigma_all",
    "sigma_k_matrix",
    "newton_transform",
    "reilly_derivative",
    "cone_membership",
    "eigs_from_sigmas",
]

# principal-minor sums are used up to this size, eigvalsh above
_MINOR_SUM_MAX_M = 6


class NonRealSpectrumError(ValueError):
    """Raised when sigma data cannot come from a real symmetric matrix."""


@dataclass(frozen=True)
class Spectrum:
    """An unordered list of m real eigenvalues."""

    values: tuple

    def __init__(self, values):
        vals = tuple(float(v) for v in np.ravel(np.asarray(values, dtype=float)))
        if not vals:
            raise ValueError("a spectrum needs at least one entry")
        if not all(math.isfinite(v) for v in vals):
            raise ValueError(f"non-finite spectrum entry in {vals}")
        object.__setattr__(self, "values", vals)

    @property
    def m(self) -> int:
        return len(self.values)

    def __len__(self):
        return len(self.values)

    def __iter__(self):
        return iter(self.values)

    def __neg__(self):
        return Spectrum([-v for v in self.values])

    def sorted(self) -> np.ndarray:
        return np.sort(np.array(self.values))


class Cone(enum.Enum):
    PLUS = "plus"
    MINUS = "minus"
    NEITHER = "neither"


@dataclass(frozen=True)
class ConeLabel:
    tag: Cone
    k: int


def _values(s) -> np.ndarray:
    if isinstance(s, Spectrum):
        return np.array(s.values)
    return np.asarray(s, dtype=float).ravel()


def sigma_all(s) -> np.ndarray:
    """Return ``[sigma_0, ..., sigma_m]`` of the entries of ``s``.

    Degree-graded accumulation: after absorbing entry ``x`` the array holds
    the elementary symmetric functions of the prefix read so far.
    """
    vals = _values(s)
    e = np.zeros(len(vals) + 1)
    e[0] = 1.0
    for j, x in enumerate(vals, start=1):
        e[1:j + 1] = e[1:j + 1] + x * e[0:j]
    return e


def sigma_k(s, k: int) -> float:
    """k-th elementary symmetric polynomial of the entries of ``s``."""
    vals = _values(s)
    if not 0 <= k <= len(vals):
        raise ValueError(f"k={k} out of range 0..{len(vals)}")
    return float(sigma_all(vals)[k])


@dataclass(frozen=True)
class SymMatrix:
    """Exactly symmetric real m x m matrix, stored read-only."""

    entries: np.ndarray

    def __post_init__(self):
        A = np.array(self.entries, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] == 0:
            raise ValueError(f"expected a non-empty square matrix, got shape {A.shape}")
        if not np.array_equal(A, A.T):
            raise ValueError("matrix is not symmetric")
        A.setflags(write=False)
        object.__setattr__(self, "entries", A)

    @classmethod
    def symmetrized(cls, A) -> "SymMatrix":
        A = np.asarray(A, dtype=float)
        return cls(0.5 * (A + A.T))

    @property
    def m(self) -> int:
        return self.entries.shape[0]

    def __array__(self, dtype=None, copy=None):
        return self.entries if dtype is None else self.entries.astype(dtype)


def _check_square(B) -> np.ndarray:
    if isinstance(B, SymMatrix):
        return B.entries
    B = np.asarray(B, dtype=float)
    if B.ndim != 2 or B.shape[0] != B.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {B.shape}")
    return B


def sigma_k_matrix(B, k: int) -> float:
    """sigma_k of the eigenvalues of the symmetric matrix ``B``.

    For m <= 6 this is the sum of the k x k principal minors, i.e. a
    characteristic-polynomial coefficient, so no eigensolver is involved.
    """
    B = _check_square(B)
    m = B.shape[0]
    if not 0 <= k <= m:
        raise ValueError(f"k={k} out of range 0..{m}")
    if k == 0:
        return 1.0
    if m <= _MINOR_SUM_MAX_M:
        total = 0.0
        for idx in itertools.combinations(range(m), k):
            total += np.linalg.det(B[np.ix_(idx, idx)])
        return float(total)
    return sigma_k(np.linalg.eigvalsh(B), k)


def newton_transform(B, q: int) -> np.ndarray:
    """T_q(B) = sigma_q I - sigma_{q-1} B + ... + (-1)^q B^q.

    Evaluated with the recurrence T_j = sigma_j I - B T_{j-1}, T_0 = I.
    """
    B = _check_square(B)
    m = B.shape[0]
    if not 0 <= q <= m:
        raise ValueError(f"q={q} out of range 0..{m}")
    eye = np.eye(m)
    T = eye.copy()
    for j in range(1, q + 1):
        T = sigma_k_matrix(B, j) * eye - B @ T
    return T


def reilly_derivative(B, Bdot, k: int) -> float:
    """Directional derivative of sigma_k at ``B`` along ``Bdot``: <T_{k-1}(B), Bdot>."""
    B = _check_square(B)
    Bdot = _check_square(Bdot)
    if B.shape != Bdot.shape:
        raise ValueError(f"dimension mismatch {B.shape} vs {Bdot.shape}")
    if not 1 <= k <= B.shape[0]:
        raise ValueError(f"k={k} out of range 1..{B.shape[0]}")
    return float(np.sum(newton_transform(B, k - 1) * Bdot))


def cone_membership(s, k: int) -> ConeLabel:
    """Locate ``s`` relative to Gamma_k^+ and Gamma_k^- = -Gamma_k^+.

    Gamma_k^+ is characterised by sigma_j > 0 for j = 1..k.
    """
    vals = _values(s)
    if not 1 <= k <= len(vals):
        raise ValueError(f"k={k} out of range 1..{len(vals)}")
    if np.all(sigma_all(vals)[1:k + 1] > 0):
        return ConeLabel(Cone.PLUS, k)
    if np.all(sigma_all(-vals)[1:k + 1] > 0):
        return ConeLabel(Cone.MINUS, k)
    return ConeLabel(Cone.NEITHER, k)


def _char_poly(sigmas) -> np.ndarray:
    """Coefficients (highest degree first) of prod(lambda - lambda_i)."""
    sig = np.asarray(sigmas, dtype=float)
    signs = (-1.0) ** np.arange(1, len(sig) + 1)
    return np.concatenate([[1.0], signs * sig])


def _companion_roots(coeffs) -> np.ndarray:
    m = len(coeffs) - 1
    C = np.zeros((m, m))
    C[0, :] = -np.asarray(coeffs[1:])
    C[1:, :-1] = np.eye(m - 1)
    return np.linalg.eigvals(C)


def _merge_clusters(roots, coeffs, tol):
    """Replace numerically split multiple roots by a single polished value.

    A p-fold root comes out of the eigensolver as a ring of radius about
    eps**(1/p).  Its centroid is refined with Newton on the (p-1)-th
    derivative of the polynomial and kept only if every lower derivative
    vanishes there (relative to the coefficient size).
    """
    order = np.argsort(roots.real)
    roots = roots[order]
    scale = 1.0 + np.max(np.abs(roots))
    radius = 0.05 * scale
    out = []
    i = 0
    while i < len(roots):
        j = i + 1
        while j < len(roots) and abs(roots[j] - roots[i]) <= radius:
            j += 1
        group = roots[i:j]
        p = len(group)
        # close real roots are genuine; a split multiple root always has a complex member
        if p == 1 or np.all(np.abs(group.imag) <= 1e-12 * scale):
            out.extend(group)
        else:
            merged = _polish_multiple(group, coeffs, tol)
            out.extend([merged] * p if merged is not None else group)
        i = j
    return np.array(out)


def _polish_multiple(group, coeffs, tol):
    p = len(group)
    poly = np.poly1d(coeffs)
    c = float(np.mean(group).real)
    d_hi = poly.deriv(p - 1)
    d_hi1 = poly.deriv(p)
    for _ in range(50):
        slope = d_hi1(c)
        if slope == 0:
            break
        step = d_hi(c) / slope
        c -= step
        if abs(step) <= 1e-16 * (1 + abs(c)):
            break
    for r in range(p):
        dr = poly.deriv(r) if r else poly
        size = np.sum(np.abs(dr.coeffs) * (1 + abs(c)) ** np.arange(dr.order, -1, -1))
        if abs(dr(c)) > tol * size:
            return None
    return complex(c)


def eigs_from_sigmas(sigmas) -> Spectrum:
    """Real spectrum whose elementary symmetric functions are ``sigmas``.

    ``sigmas = (sigma_1, ..., sigma_m)``; the roots of
    lambda^m - sigma_1 lambda^{m-1} + ... + (-1)^m sigma_m are the
    eigenvalues of its companion matrix.
    """
    sig = np.asarray(sigmas, dtype=float).ravel()
    if len(sig) == 0:
        raise ValueError("need at least one sigma")
    coeffs = _char_poly(sig)
    roots = _companion_roots(coeffs)
    tol = 1e-8 * (1.0 + np.max(np.abs(sig)))
    roots = _merge_clusters(roots, coeffs, tol)
    if np.max(np.abs(roots.imag)) > tol:
        raise NonRealSpectrumError(
            f"non-real spectrum: max |Im| = {np.max(np.abs(roots.imag)):.3e}")
    return Spectrum(np.sort(roots.real))
