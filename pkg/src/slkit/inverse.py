"""2N-approximation of sigma from finitely many spectral pairs.

The reconstruction solves the Gelfand-Levitan equation against a
background operator sigma_0.  With N target pairs and N background pairs
the kernel F(x, t) is degenerate,

    F(x, t) = sum_j w_j f_j(x) f_j(t),

with ``f_j`` background solutions (unit initial slope) at the target and
background eigenvalues and ``w_j = +1/alpha~_k`` resp. ``-1/alpha0_k``
(classical constants).  Writing ``K(x, t) = sum_j a_j(x) f_j(t)`` turns the
integral equation into ``(I + W G(x)) a(x) = -W f(x)`` with the Gram
matrix ``G_ij(x) = int_0^x f_i f_j``.  The reconstructed sigma is
``sigma_0 + 2 K(x, x)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from scipy.interpolate import CubicSpline

from . import _kernels
from .errors import IllPosedDataError, SingularBasisError, UnsupportedSmoothnessError, ValidationError
from .forward import SpectralData, _classical_to_paper, _paper_to_classical, spectral_data
from .potential import DEFAULT_GRID, PotentialQ, SigmaFunction, quadrature_rule

_MATCH_RTOL = 1e-12
_BLOCK_BUDGET = 4_000_000


def smoothness_order(theta: float) -> int:
    """Number m of explicit asymptotic coefficients, floor(theta + 1/2)."""
    if theta < 0:
        raise ValidationError("theta must be >= 0")
    return int(math.floor(theta + 0.5))


@dataclass(frozen=True)
class FiniteDataSet:
    """Measured pairs (lambda~_k, alpha~_k), k = 1..N, paper normalization.

    ``c`` holds the known asymptotic coefficients c_1..c_m (c_1 = q0).
    ``shift`` records a constant added to the potential by
    :func:`shift_normalize`.
    """

    lambdas: np.ndarray
    alphas: np.ndarray
    c: tuple = ()
    theta: float = 1.0
    shift: float = 0.0

    def __post_init__(self):
        lam = np.array(self.lambdas, dtype=float).ravel()
        alp = np.array(self.alphas, dtype=float).ravel()
        object.__setattr__(self, "lambdas", lam)
        object.__setattr__(self, "alphas", alp)
        object.__setattr__(self, "c", tuple(float(v) for v in self.c))
        if lam.size != alp.size or lam.size == 0:
            raise ValidationError("need equally many (>= 1) eigenvalues and norming constants")
        if np.any(np.diff(lam) <= 0):
            raise ValidationError("measured eigenvalues must be strictly increasing")
        if np.any(_paper_to_classical(lam, alp) <= 0):
            raise ValidationError("measured norming constants must be positive")
        if len(self.c) < smoothness_order(self.theta):
            raise ValidationError(f"theta={self.theta} needs {smoothness_order(self.theta)} coefficients c_j")

    @property
    def N(self) -> int:
        return int(self.lambdas.size)

    @property
    def q0(self) -> float:
        return self.c[0] if self.c else 0.0

    def classical_alphas(self) -> np.ndarray:
        return _paper_to_classical(self.lambdas, self.alphas)

    @classmethod
    def from_spectral(cls, data: SpectralData, theta: float = 1.0, c=None, N: int | None = None) -> FiniteDataSet:
        d = data.to_paper()
        if N is not None:
            d = d.head(N)
        if c is None:
            c = (d.q0,)
        return cls(d.lambdas, d.alphas, tuple(c), theta)

    def unshifted(self) -> FiniteDataSet:
        if self.shift == 0.0:
            return self
        return shift_normalize(self, -self.shift)

    def to_dict(self) -> dict:
        return {
            "q0": self.q0,
            "c": list(self.c),
            "lambdas": self.lambdas.tolist(),
            "alphas": self.alphas.tolist(),
            "theta": self.theta,
            "shift": self.shift,
        }

    @classmethod
    def from_dict(cls, d: dict) -> FiniteDataSet:
        try:
            c = d.get("c")
            if not c:
                c = [d["q0"]] if "q0" in d else []
            return cls(d["lambdas"], d["alphas"], tuple(c), float(d.get("theta", 1.0)), float(d.get("shift", 0.0)))
        except KeyError as exc:
            raise ValidationError(f"data set is missing {exc.args[0]!r}") from None


def background_sigma(c, theta: float, n: int = DEFAULT_GRID) -> SigmaFunction:
    """Explicit background potential carrying the coefficients c_1..c_m."""
    m = smoothness_order(theta)
    if m >= 3:
        raise UnsupportedSmoothnessError(f"no closed-form background for theta={theta} (m={m})")
    if len(c) < m:
        raise ValidationError(f"theta={theta} needs {m} coefficients, got {len(c)}")
    if m == 0:
        return SigmaFunction.zero()
    c1 = float(c[0])
    if m == 1:
        return SigmaFunction.linear(c1)
    beta = float(c[1]) - 2.0 * c1 - np.pi**3 * c1 * c1 / 2.0
    if beta == 0.0:
        return SigmaFunction.linear(c1)
    x = np.linspace(0.0, np.pi, n + 1)
    return SigmaFunction.piecewise_linear(x, c1 * x + beta * x * (np.pi - x))


def shift_normalize(d: FiniteDataSet, c: float) -> FiniteDataSet:
    """Data of the potential q + c.

    Eigenvalues move by c and the eigenfunctions are unchanged, so the
    classical constants stay fixed and the paper-normalised ones scale by
    (lambda + c) / lambda.
    """
    lam = d.lambdas + c
    if np.any(lam <= 0):
        raise ValidationError("shifted eigenvalues must be positive")
    alpha = _classical_to_paper(lam, d.classical_alphas())
    coeffs = list(d.c)
    if coeffs:
        coeffs[0] += c
    return FiniteDataSet(lam, alpha, tuple(coeffs), d.theta, d.shift + c)


def background_data(sigma0: SigmaFunction, N: int) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues and classical norming constants of the background."""
    if sigma0.is_linear:
        q0 = sigma0.values[-1] / np.pi
        k = np.arange(1, N + 1, dtype=float)
        return k * k + q0, np.pi / (2.0 * k * k)
    sd = spectral_data(sigma0, N).to_classical()
    return sd.lambdas, sd.alphas


@dataclass(frozen=True)
class GLMProblem:
    """Degenerate-kernel Gelfand-Levitan system on a grid.

    ``lambdas`` and ``weights`` list the surviving basis functions: target
    entries first, then the matching background entries.
    """

    sigma0: SigmaFunction
    lambdas: np.ndarray
    weights: np.ndarray
    nodes: np.ndarray
    shift: float = 0.0
    N: int = 0
    dropped: tuple = field(default=())

    @property
    def size(self) -> int:
        return int(self.lambdas.size)

    def _cells(self):
        x0, _ = self.sigma0.breakpoints()
        return np.union1d(self.nodes, x0)

    def basis(self, pts) -> np.ndarray:
        """Basis values f_j(pts), shape (len(pts), size)."""
        pts = np.asarray(pts, dtype=float)
        order = np.argsort(pts, kind="stable")
        x0, v0 = self.sigma0.breakpoints()
        vals = _kernels.sample(x0, v0, self.lambdas, np.ascontiguousarray(pts[order]))
        out = np.empty_like(vals)
        out[order] = vals
        return out

    def gram(self, x: float) -> np.ndarray:
        """G(x) = int_0^x f_i f_j by composite Gauss quadrature."""
        cells = self._cells()
        cells = np.concatenate([cells[cells < x], [x]])
        if cells.size < 2:
            return np.zeros((self.size, self.size))
        t, w = quadrature_rule(cells, np.inf)
        f = self.basis(t)
        return (f * w[:, None]).T @ f


def assemble_glm(d: FiniteDataSet, sigma0: SigmaFunction | None = None, grid: int = DEFAULT_GRID) -> GLMProblem:
    """Pair the measured data with background data and build the system."""
    if sigma0 is None:
        sigma0 = background_sigma(d.c, d.theta, grid)
    N = d.N
    lam0, a0 = background_data(sigma0, N)
    lam1, a1 = d.lambdas, d.classical_alphas()
    keep = ~(
        np.isclose(lam1, lam0, rtol=_MATCH_RTOL, atol=_MATCH_RTOL)
        & np.isclose(a1, a0, rtol=_MATCH_RTOL, atol=0.0)
    )
    idx = np.flatnonzero(keep)
    lams = np.concatenate([lam1[idx], lam0[idx]])
    weights = np.concatenate([1.0 / a1[idx], -1.0 / a0[idx]])
    # the same index may repeat an eigenvalue; anything else is singular
    owner = np.concatenate([idx, idx])
    order = np.argsort(lams, kind="stable")
    ls, os_ = lams[order], owner[order]
    close = np.isclose(ls[1:], ls[:-1], rtol=_MATCH_RTOL, atol=_MATCH_RTOL)
    bad = close & (os_[1:] != os_[:-1])
    if np.any(bad):
        i = int(np.flatnonzero(bad)[0])
        raise SingularBasisError(
            f"eigenvalue {ls[i]:.15g} shared by indices {os_[i] + 1} and {os_[i + 1] + 1}"
        )
    nodes = np.linspace(0.0, np.pi, grid + 1)
    dropped = tuple(int(k) + 1 for k in np.flatnonzero(~keep))
    return GLMProblem(sigma0, lams, weights, nodes, d.shift, N, dropped)


def _solve_block(A, b, nodes_block, symmetric):
    try:
        if not symmetric:
            return np.linalg.solve(A, b[..., None])[..., 0]
        return np.stack([scipy.linalg.solve(Ai, bi, assume_a="sym") for Ai, bi in zip(A, b)])
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError):
        for Ai, xi in zip(A, nodes_block):
            if np.linalg.matrix_rank(Ai) < Ai.shape[0]:
                raise IllPosedDataError(f"Gelfand-Levitan system singular at x={xi:.6g}", x=float(xi)) from None
        raise


def glm_reconstruct(p: GLMProblem, method: str = "general", want_q: bool = False):
    """Solve the system at every grid point and return sigma~_N.

    ``method="general"`` solves ``(I + W G) a = -W f``; ``"symmetric"``
    solves the equivalent symmetric indefinite system ``(W^-1 + G) a = -f``.
    With ``want_q`` a tuple ``(sigma, q)`` is returned, q from the derivative
    of a cubic spline through sigma.
    """
    if method not in ("general", "symmetric"):
        raise ValidationError(f"unknown method {method!r}")
    nodes = p.nodes
    kxx = np.zeros(nodes.size)
    n = p.size
    if n:
        cells = p._cells()
        t, w = quadrature_rule(cells, np.inf)
        npts = t.size // (cells.size - 1)
        fq = p.basis(t).reshape(cells.size - 1, npts, n)
        wq = w.reshape(cells.size - 1, npts)
        # Gram matrix at each cell end, then keep the ends that are grid nodes
        cell_end = cells[1:]
        on_grid = np.isin(cell_end, nodes)
        fn = p.basis(nodes)
        W = p.weights
        eye = np.eye(n)
        block = max(1, _BLOCK_BUDGET // (n * n))
        G = np.zeros((n, n))
        node_pos = np.searchsorted(nodes, cell_end)
        for s in range(0, fq.shape[0], block):
            fb = fq[s : s + block]
            incr = np.matmul(np.transpose(fb * wq[s : s + block, :, None], (0, 2, 1)), fb)
            Gb = G + np.cumsum(incr, axis=0)
            G = Gb[-1]
            sel = on_grid[s : s + block]
            if not np.any(sel):
                continue
            Gb = Gb[sel]
            pos = node_pos[s : s + block][sel]
            f = fn[pos]
            if method == "general":
                A = eye + W[:, None] * Gb
                rhs = -W * f
            else:
                A = np.diag(1.0 / W) + Gb
                rhs = -f
            a = _solve_block(A, rhs, nodes[pos], method == "symmetric")
            kxx[pos] = np.einsum("ij,ij->i", a, f)
        if not np.all(np.isfinite(kxx)):
            bad = nodes[np.flatnonzero(~np.isfinite(kxx))[0]]
            raise IllPosedDataError(f"Gelfand-Levitan system singular at x={bad:.6g}", x=float(bad))
    vals = p.sigma0(nodes) + 2.0 * kxx - p.shift * nodes
    sigma = SigmaFunction.piecewise_linear(nodes, vals)
    if not want_q:
        return sigma
    q = CubicSpline(nodes, vals).derivative()(nodes)
    return sigma, PotentialQ.grid(q, theta=None)


def reconstruct(d: FiniteDataSet, grid: int = DEFAULT_GRID, method: str = "general") -> SigmaFunction:
    """Background, assembly and solve in one call."""
    return glm_reconstruct(assemble_glm(d, None, grid), method)


@dataclass(frozen=True)
class RoundtripReport:
    lambda_residual: float
    alpha_residual: float
    tol: float
    lambda_residuals: np.ndarray
    alpha_residuals: np.ndarray

    @property
    def passed(self) -> bool:
        return self.lambda_residual <= self.tol and self.alpha_residual <= self.tol

    def to_dict(self) -> dict:
        return {
            "lambda_residual": self.lambda_residual,
            "alpha_residual": self.alpha_residual,
            "tol": self.tol,
            "pass": self.passed,
        }


def _signed_sqrt(v):
    return np.sign(v) * np.sqrt(np.abs(v))


def roundtrip_check(sigma: SigmaFunction, d: FiniteDataSet, tol: float = 1e-5) -> RoundtripReport:
    """Forward-solve sigma and compare its first N pairs with the data."""
    d = d.unshifted()
    sd = spectral_data(sigma, d.N)
    k = np.arange(1, d.N + 1)
    rl = k * np.abs(_signed_sqrt(sd.lambdas) - _signed_sqrt(d.lambdas))
    ra = np.abs(sd.alphas - d.alphas)
    return RoundtripReport(float(rl.max()), float(ra.max()), tol, rl, ra)
