"""Noise injection, asymptotic diagnostics and rate studies.

Smoothness is counted on sigma throughout (``theta`` below); the
q-smoothness index used by some rate statements is ``theta - 1``.  Reports
carry both labels.
"""
from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .errors import UnsupportedSmoothnessError, ValidationError
from .forward import SpectralData, spectral_data
from .inverse import FiniteDataSet, reconstruct, smoothness_order
from .potential import DEFAULT_GRID, SigmaFunction, q0_of, sobolev_norm

ROUNDTRIP_TOL = 1e-5
FLOOR = 10.0 * ROUNDTRIP_TOL
MAX_RESAMPLE = 100
STDERR_MAX = 0.15


def default_threads() -> int:
    try:
        return max(1, int(os.environ.get("SLKIT_THREADS", "1")))
    except ValueError:
        return 1


def _map(fn, items, threads):
    threads = default_threads() if threads is None else threads
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(threads) as pool:
        return list(pool.map(fn, items))


def recon_grid(N: int) -> int:
    """Reconstruction grid: sixteen cells per shortest wavelength."""
    return max(DEFAULT_GRID, 16 * N)


# -- noise -----------------------------------------------------------------
@dataclass(frozen=True)
class NoiseSpec:
    """Noise level ``epsilon`` in (0, 1/e), generator ``seed``, sampling law."""

    epsilon: float
    seed: int = 0
    law: str = "uniform"

    def __post_init__(self):
        if not 0.0 < self.epsilon < 1.0 / math.e:
            raise ValidationError("epsilon must lie in (0, 1/e)")
        if self.law != "uniform":
            raise ValidationError(f"unsupported noise law {self.law!r}")


def perturb(data: SpectralData, noise: NoiseSpec, theta: float = 1.0, c=None, N: int | None = None) -> FiniteDataSet:
    """Noisy finite data within the band ``|alpha~ - alpha| <= eps``,
    ``|sqrt(lambda~) - sqrt(lambda)| <= eps/k``.

    Entries are drawn in order of k; a draw that breaks strict ordering of
    the eigenvalues or positivity of the constants is redrawn.
    """
    d = data.to_paper()
    if N is not None:
        d = d.head(N)
    if np.any(d.lambdas < 0):
        raise ValidationError("noise is defined on sqrt(lambda); eigenvalues must be >= 0")
    rng = np.random.default_rng(noise.seed)
    eps = noise.epsilon
    root = np.sqrt(d.lambdas)
    new_root = np.empty_like(root)
    new_alpha = np.empty_like(root)
    prev = -np.inf
    for i in range(root.size):
        k = i + 1
        for _ in range(MAX_RESAMPLE):
            u, v = rng.uniform(-1.0, 1.0, 2)
            r = root[i] + v * eps / k
            a = d.alphas[i] + u * eps
            if r > prev and r > 0 and a > 0:
                break
        else:
            raise ValidationError(f"cannot keep k={k} ordered and positive at epsilon={eps}")
        new_root[i], new_alpha[i] = r, a
        prev = r
    if c is None:
        c = (d.q0,)
    return FiniteDataSet(new_root**2, new_alpha, tuple(c), theta)


# -- remainders and asymptotics --------------------------------------------
@dataclass(frozen=True)
class Remainders:
    """``a_k = k(alpha_k - pi/2)``, ``b_k = k(sqrt(lambda_k) - k - q0/(2k))``."""

    a: np.ndarray
    b: np.ndarray

    @property
    def K(self) -> int:
        return self.a.size

    def tail(self, N: int) -> float:
        """Sum over N < k <= K of a_k^2 + b_k^2; the sum is truncated at K."""
        return float(np.sum(self.a[N:] ** 2 + self.b[N:] ** 2))

    @property
    def note(self) -> str:
        return f"tail sums truncated at k={self.K}"


def remainder_sequences(data: SpectralData) -> Remainders:
    d = data.to_paper()
    if np.any(d.lambdas < 0):
        raise ValidationError("remainders need nonnegative eigenvalues")
    k = np.arange(1, d.N + 1, dtype=float)
    b = k * (np.sqrt(d.lambdas) - k - d.q0 / (2.0 * k))
    a = k * (d.alphas - 0.5 * math.pi)
    return Remainders(a, b)


@dataclass(frozen=True)
class Asymptotics:
    h0: float
    g1: float
    h1: float

    def sqrt_lambda(self, k, terms: int = 2):
        """Truncated expansion of sqrt(lambda_k); ``terms=1`` keeps h0 only."""
        k = np.asarray(k, dtype=float)
        out = k + self.h0 / (2.0 * k)
        if terms >= 2:
            out = out + self.h1 / (2.0 * k) ** 3
        return out

    def alpha(self, k):
        k = np.asarray(k, dtype=float)
        return 0.5 * math.pi + self.g1 / (2.0 * k) ** 2


def _end_derivatives(sigma: SigmaFunction):
    """sigma'(0), sigma''(0), sigma''(pi) and the integral of sigma'^2."""
    if sigma.kind == "cosine":
        c = sigma.coeffs
        j = np.arange(c.size, dtype=float)
        d2 = -(j * j) * c
        return 0.0, float(d2.sum()), float((d2 * (-1.0) ** j).sum()), float(0.5 * math.pi * np.sum(j * j * c * c))
    if sigma.has_jumps:
        raise UnsupportedSmoothnessError("sigma has jumps; derivatives are undefined")
    x, v = sigma.nodes, sigma.values
    h = np.diff(x)
    energy = float(np.sum(np.diff(v) ** 2 / h))
    if sigma.is_linear:
        return float(v[-1] / math.pi), 0.0, 0.0, energy
    # local polynomial fits at each end
    p = min(9, x.size)
    left = np.polynomial.Polynomial.fit(x[:p], v[:p], min(6, p - 1))
    right = np.polynomial.Polynomial.fit(x[-p:], v[-p:], min(6, p - 1))
    return float(left.deriv()(0.0)), float(left.deriv(2)(0.0)), float(right.deriv(2)(math.pi)), energy


def asymptotic_functionals(sigma: SigmaFunction) -> Asymptotics:
    """The functionals h0, g1, h1 of sigma.

    ``h0 = (sigma(pi) - sigma(0))/pi``,
    ``g1 = h0 + sigma'(0) + pi^3 h0^2 - (pi/2)(sigma(pi)^2 - sigma(0)^2)``,
    ``h1 = -(sigma''(pi) - sigma''(0))/pi + (1/pi) int sigma'^2 - 2 h0^2``.
    Cosine sigmas are differentiated termwise, grid sigmas by local
    polynomial fits at the ends.
    """
    s0, sp = float(sigma(0.0)), float(sigma(math.pi))
    h0 = (sp - s0) / math.pi
    d1, d2_left, d2_right, energy = _end_derivatives(sigma)
    g1 = h0 + d1 + math.pi**3 * h0 * h0 - 0.5 * math.pi * (sp * sp - s0 * s0)
    h1 = -(d2_right - d2_left) / math.pi + energy / math.pi - 2.0 * h0 * h0
    return Asymptotics(h0, g1, h1)


def smoothness_class_sigma(
    theta: float, J: int = 1024, amplitude: float = 1.0, seed: int = 0, delta: float = 0.01, zero_h0: bool = True
) -> SigmaFunction:
    """Cosine sigma with ``|c_j| = amplitude * j^-(theta + 1/2 + delta)`` and random signs.

    It lies in W_2^theta but in no W_2^(theta + d) with d > delta.  With
    ``zero_h0`` the first coefficient is adjusted so that sigma(pi) =
    sigma(0), i.e. the potential has zero mean.
    """
    rng = np.random.default_rng(seed)
    j = np.arange(1, J + 1, dtype=float)
    c = amplitude * rng.choice([-1.0, 1.0], J) * j ** -(theta + 0.5 + delta)
    if zero_h0:
        c[0] -= c[::2].sum()
    return SigmaFunction.cosine(np.concatenate([[0.0], c]))


# -- rate reports ----------------------------------------------------------
def fit_slope(x, y) -> tuple[float, float]:
    """Least-squares slope of log y against log x, with standard error."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 2:
        return math.nan, math.nan
    if x.size == 2:
        lx, ly = np.log(x), np.log(y)
        return float((ly[1] - ly[0]) / (lx[1] - lx[0])), 0.0
    r = stats.linregress(np.log(x), np.log(y))
    return float(r.slope), float(r.stderr)


@dataclass(frozen=True)
class Fit:
    slope: float
    stderr: float
    predicted: float
    tolerance: float
    points: int
    flag: str = "ok"

    @property
    def passed(self) -> bool:
        return (
            self.flag == "ok"
            and abs(self.slope - self.predicted) <= self.tolerance
            and self.stderr < STDERR_MAX
        )


@dataclass
class RateReport:
    """Measured errors over a sweep in N or epsilon, one fit per tau.

    ``rows`` are dicts with keys N, epsilon, tau, error, sorted by the sweep
    variable; ``fits`` maps tau to its :class:`Fit`.
    """

    sweep: str
    theta: float
    rows: list
    fits: dict
    convention: str = "sigma"
    notes: list = field(default_factory=list)

    @property
    def theta_q(self) -> float:
        return self.theta - 1.0

    @property
    def passed(self) -> bool:
        return all(f.passed for f in self.fits.values())

    def series(self, tau: float):
        rows = [r for r in self.rows if r["tau"] == tau]
        return np.array([r[self.sweep] for r in rows], dtype=float), np.array([r["error"] for r in rows])

    def to_csv(self, path) -> None:
        cols = ["sweep", "theta", "tau", "N", "epsilon", "error", "slope", "slope_stderr", "predicted_exponent", "pass"]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(cols)
            for r in self.rows:
                f = self.fits[r["tau"]]
                eps = "" if r["epsilon"] is None else repr(float(r["epsilon"]))
                w.writerow(
                    [self.sweep, repr(self.theta), repr(r["tau"]), r["N"], eps, repr(float(r["error"])),
                     repr(f.slope), repr(f.stderr), repr(f.predicted), "true" if f.passed else "false"]
                )


def _fit(x, err, predicted, tolerance, floor):
    keep = err >= floor
    if keep.sum() < 2:
        return Fit(math.nan, math.nan, predicted, tolerance, int(keep.sum()), "floor")
    slope, se = fit_slope(x[keep], err[keep])
    return Fit(slope, se, predicted, tolerance, int(keep.sum()))


def _default_c(sigma: SigmaFunction, theta: float, c):
    if c is not None:
        return tuple(c)
    m = smoothness_order(theta)
    # higher coefficients default to zero, which matches zero-mean cosine sigmas
    return ((q0_of(sigma),) + (0.0,) * max(0, m - 1))[: max(m, 1)]


def convergence_study(
    sigma_true: SigmaFunction,
    theta: float,
    tau_list,
    N_list,
    c=None,
    tolerance: float = 0.3,
    floor: float = FLOOR,
    data: SpectralData | None = None,
    threads: int | None = None,
) -> RateReport:
    """Exact-data reconstruction error against N for every tau.

    The predicted exponent is ``tau - theta`` with theta the sigma
    smoothness.
    """
    N_list = sorted(int(n) for n in N_list)
    c = _default_c(sigma_true, theta, c)
    if data is None:
        data = spectral_data(sigma_true, N_list[-1])

    def one(N):
        d = FiniteDataSet.from_spectral(data, theta, c, N)
        diff = reconstruct(d, grid=recon_grid(N)) - sigma_true
        return [sobolev_norm(diff, t) for t in tau_list]

    errs = _map(one, N_list, threads)
    rows = [
        {"N": N, "epsilon": None, "tau": float(t), "error": e[i]}
        for i, t in enumerate(tau_list)
        for N, e in zip(N_list, errs)
    ]
    rep = RateReport("N", float(theta), rows, {}, notes=[f"theta_sigma={theta}, theta_q={theta - 1.0}"])
    for t in tau_list:
        x, e = rep.series(float(t))
        rep.fits[float(t)] = _fit(x, e, float(t) - theta, tolerance, floor)
    return rep


def corollary_N(epsilon: float, theta: float, tau: float, prefactor: float = 1.0) -> int:
    """``N = prefactor * epsilon^(-1/(theta_q + tau))`` with theta_q = theta - 1."""
    return max(1, int(round(prefactor * epsilon ** (-1.0 / (theta - 1.0 + tau)))))


def noise_floor_study(
    sigma_true: SigmaFunction,
    theta: float,
    tau: float,
    eps_list,
    N_rule: str = "fixed",
    N: int = 64,
    prefactor: float = 1.0,
    seed: int = 0,
    c=None,
    tolerance: float | None = None,
    floor: float = 0.0,
    threads: int | None = None,
) -> RateReport:
    """Noisy reconstruction error against epsilon.

    ``N_rule="fixed"`` keeps N and predicts slope 1; ``"corollary"`` uses
    :func:`corollary_N` and predicts ``(1 + theta_q - tau)/(theta_q + tau)``.
    The same seed is used for every epsilon so the noise direction is shared.
    """
    eps_list = sorted(float(e) for e in eps_list)
    c = _default_c(sigma_true, theta, c)
    if N_rule == "fixed":
        Ns = [int(N)] * len(eps_list)
        predicted = 1.0
        tolerance = 0.2 if tolerance is None else tolerance
    elif N_rule == "corollary":
        Ns = [corollary_N(e, theta, tau, prefactor) for e in eps_list]
        tq = theta - 1.0
        predicted = (1.0 + tq - tau) / (tq + tau)
        tolerance = 0.3 if tolerance is None else tolerance
    else:
        raise ValidationError(f"unknown N rule {N_rule!r}")
    data = spectral_data(sigma_true, max(Ns))

    def one(args):
        eps, n = args
        d = perturb(data, NoiseSpec(eps, seed), theta, c, n)
        return sobolev_norm(reconstruct(d, grid=recon_grid(n)) - sigma_true, tau)

    errs = _map(one, list(zip(eps_list, Ns)), threads)
    rows = [{"N": n, "epsilon": e, "tau": float(tau), "error": err} for e, n, err in zip(eps_list, Ns, errs)]
    rep = RateReport("epsilon", float(theta), rows, {}, notes=[f"N rule: {N_rule}", f"theta_q={theta - 1.0}"])
    x, e = rep.series(float(tau))
    rep.fits[float(tau)] = _fit(x, e, predicted, tolerance, floor)
    return rep
