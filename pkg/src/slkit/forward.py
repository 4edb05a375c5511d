"""Dirichlet eigenvalues and norming constants by shooting.

The solution ``s(x, lambda)`` with ``s(0) = 0`` and ``s^[1](0) = sqrt(lambda)``
is obtained from the classical solution ``phi`` (unit initial slope) as
``s = sqrt(lambda) * phi``.  For lambda <= 0 everything is reported in the
classical normalization, which avoids complex square roots.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import BracketError, DomainError, SolverError, ValidationError
from .potential import SigmaFunction, q0_of

ZERO_THRESHOLD = 1e-8
RESIDUAL_TOL = 1e-6
DEFAULT_TOL = 1e-11
_MAXITER = 400


@dataclass(frozen=True)
class ShootingResult:
    lam: float
    s_end: float
    s1_end: float
    oscillation_count: int
    l2_integral: float
    normalization: str = "paper"


@dataclass(frozen=True)
class SpectralData:
    """Eigenvalues and norming constants of the Dirichlet problem.

    In the ``"paper"`` normalization ``alpha_k = lambda_k * alpha_k^cl`` for
    lambda_k != 0 and ``alpha_k = alpha_k^cl`` at lambda_k = 0.  A negative
    eigenvalue therefore carries a negative paper-normalised constant; the
    classical constants are always positive.
    """

    q0: float
    lambdas: np.ndarray
    alphas: np.ndarray
    normalization: str = "paper"

    def __post_init__(self):
        lam = np.array(self.lambdas, dtype=float).ravel()
        alp = np.array(self.alphas, dtype=float).ravel()
        object.__setattr__(self, "lambdas", lam)
        object.__setattr__(self, "alphas", alp)
        object.__setattr__(self, "q0", float(self.q0))
        if self.normalization not in ("paper", "classical"):
            raise ValidationError(f"unknown normalization {self.normalization!r}")
        if lam.size != alp.size:
            raise ValidationError("lambdas and alphas differ in length")
        if np.any(np.diff(lam) <= 0):
            raise ValidationError("eigenvalues must be strictly increasing")
        if np.any(self.classical_alphas() <= 0):
            raise ValidationError("norming constants must be positive")

    @property
    def N(self) -> int:
        return int(self.lambdas.size)

    def classical_alphas(self) -> np.ndarray:
        if self.normalization == "classical":
            return self.alphas
        return _paper_to_classical(self.lambdas, self.alphas)

    def paper_alphas(self) -> np.ndarray:
        if self.normalization == "paper":
            return self.alphas
        return _classical_to_paper(self.lambdas, self.alphas)

    def to_classical(self) -> SpectralData:
        return SpectralData(self.q0, self.lambdas, self.classical_alphas(), "classical")

    def to_paper(self) -> SpectralData:
        return SpectralData(self.q0, self.lambdas, self.paper_alphas(), "paper")

    def head(self, n: int) -> SpectralData:
        return SpectralData(self.q0, self.lambdas[:n], self.alphas[:n], self.normalization)


def _paper_to_classical(lam, alpha):
    lam = np.asarray(lam, dtype=float)
    small = np.abs(lam) < ZERO_THRESHOLD
    return np.where(small, alpha, alpha / np.where(small, 1.0, lam))


def _classical_to_paper(lam, alpha):
    lam = np.asarray(lam, dtype=float)
    return np.where(np.abs(lam) < ZERO_THRESHOLD, alpha, alpha * lam)


def _arrays(sigma: SigmaFunction, n=None):
    x, v = sigma.breakpoints(n)
    return np.ascontiguousarray(x), np.ascontiguousarray(v)


def _shoot(x, v, lam):
    y, p, zeros, l2, status = _kernels.shoot_one(x, v, float(lam))
    if status >= 0:
        raise SolverError(f"non-finite solution at lambda={lam}", last_x=float(x[status]))
    return y, p, zeros, l2


def integrate_s(sigma: SigmaFunction, lam: float, n: int | None = None) -> ShootingResult:
    """Shoot the quasi-derivative system at spectral parameter ``lam``.

    ``oscillation_count`` counts zeros of s(., lam) in the open interval
    (0, pi).
    """
    x, v = _arrays(sigma, n)
    y, p, _, l2 = _shoot(x, v, lam)
    # zeros in (0, pi) at lam equal zeros in (0, pi] just below lam
    count = _shoot(x, v, lam - 1e-9 * max(1.0, abs(lam)))[2]
    quasi = p - v[-1] * y
    if lam > 0:
        r = math.sqrt(lam)
        return ShootingResult(float(lam), r * y, r * quasi, int(count), lam * l2, "paper")
    return ShootingResult(float(lam), y, quasi, int(count), l2, "classical")


def scan_window(sigma: SigmaFunction, N: int, n: int | None = None) -> tuple[float, float]:
    """Bracket [lo, hi] with no eigenvalue below lo and at least N below hi."""
    x, v = _arrays(sigma, n)
    h = np.diff(x)
    slopes = np.diff(v)[h > 0] / h[h > 0]
    qmin, qmax = float(slopes.min()), float(slopes.max())
    lo = min(0.0, qmin) - 1.0
    hi = (N + 2) ** 2 + max(qmax, 0.0) + 1.0
    for _ in range(80):
        if _shoot(x, v, lo)[2] == 0:
            break
        lo = 2.0 * lo - 1.0
    else:
        raise BracketError("no lower bound for the spectrum", window=(lo, hi))
    for _ in range(80):
        if _shoot(x, v, hi)[2] >= N:
            break
        hi = 2.0 * hi + 1.0
    else:
        raise BracketError(f"fewer than {N} eigenvalues below the scan window", window=(lo, hi))
    return lo, hi


def eigenvalues(sigma: SigmaFunction, N: int, tol: float = DEFAULT_TOL, n: int | None = None) -> np.ndarray:
    """First N Dirichlet eigenvalues, each isolated by its oscillation bracket."""
    if N < 1:
        raise ValidationError("N must be >= 1")
    if tol <= 0:
        raise ValidationError("tol must be positive")
    x, v = _arrays(sigma, n)
    lo, hi = scan_window(sigma, N, n)
    lams, _ = _kernels.eigen_batch(x, v, np.arange(1, N + 1, dtype=np.int64), lo, hi, tol, _MAXITER)
    if not np.all(np.isfinite(lams)):
        raise SolverError("eigenvalue refinement failed")
    return lams


def norming_constants(
    sigma: SigmaFunction,
    lambdas,
    n: int | None = None,
    residual_tol: float = RESIDUAL_TOL,
) -> np.ndarray:
    """Paper-normalised norming constants at the given eigenvalues.

    Near lambda = 0 the limit branch (1/lambda) * int s^2 is used, which is
    the integral of phi^2 for the unit-slope solution.
    """
    x, v = _arrays(sigma, n)
    out = np.empty(len(lambdas))
    for i, lam in enumerate(np.asarray(lambdas, dtype=float)):
        y, _, _, l2 = _shoot(x, v, lam)
        resid = abs(y) * math.sqrt(abs(lam)) if lam > 0 else abs(y)
        if resid > residual_tol:
            raise DomainError(f"lambda={lam!r} is not an eigenvalue (|s(pi)|={resid:.3e})")
        out[i] = l2 if abs(lam) < ZERO_THRESHOLD else lam * l2
    return out


def spectral_data(sigma: SigmaFunction, N: int, tol: float = DEFAULT_TOL, n: int | None = None) -> SpectralData:
    lams = eigenvalues(sigma, N, tol, n)
    return SpectralData(q0_of(sigma), lams, norming_constants(sigma, lams, n))
