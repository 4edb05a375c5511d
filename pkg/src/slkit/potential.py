"""Representations of sigma (the antiderivative of q) on [0, pi].

Two storage forms are supported:

* ``cosine``: ``sigma(x) = sum_j c_j cos(j x)``, j = 0..J;
* ``grid``: samples joined by straight lines.  Samples normally sit on a
  uniform grid; explicit breakpoints are allowed and a repeated breakpoint
  encodes a jump of sigma, i.e. a delta in q.

Every sigma is anchored so that ``sigma(0) = 0``.  Norms work on the
quotient by constants: the zeroth cosine coefficient is ignored.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.fft import dct

from .errors import ValidationError

DEFAULT_GRID = 2048
GAUSS_ORDER = 5

_GL_T, _GL_W = np.polynomial.legendre.leggauss(GAUSS_ORDER)


class SigmaFunction:
    """Antiderivative of a (possibly distributional) potential.

    Use the ``cosine``, ``grid``, ``piecewise_linear``, ``linear`` and
    ``from_function`` constructors rather than ``__init__``.
    """

    __slots__ = ("kind", "coeffs", "nodes", "values")

    def __init__(self, kind, coeffs=None, nodes=None, values=None):
        self.kind = kind
        self.coeffs = coeffs
        self.nodes = nodes
        self.values = values
        for arr in (coeffs, nodes, values):
            if arr is not None:
                arr.setflags(write=False)

    # -- constructors ----------------------------------------------------
    @classmethod
    def cosine(cls, coeffs) -> SigmaFunction:
        c = np.array(coeffs, dtype=float).ravel()
        if c.size == 0:
            c = np.zeros(1)
        c[0] = -c[1:].sum()
        return cls("cosine", coeffs=c)

    @classmethod
    def grid(cls, values) -> SigmaFunction:
        v = np.array(values, dtype=float).ravel()
        if v.size < 2:
            raise ValidationError("a grid sigma needs at least two samples")
        return cls.piecewise_linear(np.linspace(0.0, np.pi, v.size), v)

    @classmethod
    def piecewise_linear(cls, nodes, values) -> SigmaFunction:
        x = np.array(nodes, dtype=float).ravel()
        v = np.array(values, dtype=float).ravel()
        if x.size != v.size or x.size < 2:
            raise ValidationError("nodes and values must have equal length >= 2")
        if np.any(np.diff(x) < 0):
            raise ValidationError("breakpoints must be nondecreasing")
        if not (np.isclose(x[0], 0.0, atol=1e-14) and np.isclose(x[-1], np.pi, atol=1e-12)):
            raise ValidationError("breakpoints must span [0, pi]")
        if not np.all(np.isfinite(v)):
            raise ValidationError("sigma values must be finite")
        x[0], x[-1] = 0.0, np.pi
        return cls("grid", nodes=x, values=v - v[0])

    @classmethod
    def linear(cls, slope: float) -> SigmaFunction:
        """sigma(x) = slope * x, i.e. the constant potential q = slope."""
        return cls.piecewise_linear([0.0, np.pi], [0.0, slope * np.pi])

    @classmethod
    def zero(cls) -> SigmaFunction:
        return cls.linear(0.0)

    @classmethod
    def from_function(cls, f: Callable, n: int = DEFAULT_GRID) -> SigmaFunction:
        x = np.linspace(0.0, np.pi, n + 1)
        return cls.piecewise_linear(x, np.asarray(f(x), dtype=float) * np.ones_like(x))

    # -- evaluation ------------------------------------------------------
    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "cosine":
            j = np.arange(self.coeffs.size)
            return np.cos(np.multiply.outer(x, j)) @ self.coeffs
        return np.interp(x, self.nodes, self.values)

    @property
    def is_linear(self) -> bool:
        if self.kind != "grid":
            return False
        slope = self.values[-1] / np.pi
        return bool(np.allclose(self.values, slope * self.nodes, rtol=0, atol=1e-14 * (1 + abs(slope))))

    @property
    def has_jumps(self) -> bool:
        return self.kind == "grid" and bool(np.any(np.diff(self.nodes) == 0))

    def breakpoints(self, n: int | None = None) -> tuple[np.ndarray, np.ndarray]:
        """Breakpoints and values of the piecewise-linear form.

        Grid sigmas return their own breakpoints; cosine sigmas are sampled
        on a uniform grid of ``n`` cells (default: at least 2048 and at
        least eight cells per shortest stored wavelength).
        """
        if self.kind == "grid":
            return np.array(self.nodes), np.array(self.values)
        if n is None:
            n = max(DEFAULT_GRID, 8 * (self.coeffs.size - 1))
        x = np.linspace(0.0, np.pi, n + 1)
        return x, self(x)

    def to_grid(self, n: int | None = None) -> SigmaFunction:
        x, v = self.breakpoints(n)
        return SigmaFunction.piecewise_linear(x, v)

    def uniform_samples(self, n: int = DEFAULT_GRID) -> np.ndarray:
        return self(np.linspace(0.0, np.pi, n + 1))

    def cosine_coefficients(self, n: int | None = None) -> np.ndarray:
        """Cosine coefficients c_0..c_n.

        Exact for cosine sigmas; for grid sigmas the coefficients of the
        trigonometric interpolant of ``n + 1`` uniform samples (DCT-I).
        """
        if self.kind == "cosine":
            if n is None or n + 1 <= self.coeffs.size:
                return np.array(self.coeffs[: None if n is None else n + 1])
            return np.pad(self.coeffs, (0, n + 1 - self.coeffs.size))
        if n is None:
            n = max(DEFAULT_GRID, self.nodes.size - 1)
        c = dct(self.uniform_samples(n), type=1) / n
        c[0] *= 0.5
        c[-1] *= 0.5
        return c

    # -- algebra ---------------------------------------------------------
    def _grid_pair(self, other):
        if (
            self.kind == "grid"
            and other.kind == "grid"
            and self.nodes.size == other.nodes.size
            and np.array_equal(self.nodes, other.nodes)
        ):
            return self.nodes, self.values, other.values
        n = DEFAULT_GRID
        for s in (self, other):
            if s.kind == "grid":
                n = max(n, s.nodes.size - 1)
            else:
                n = max(n, 8 * (s.coeffs.size - 1))
        x = np.linspace(0.0, np.pi, n + 1)
        return x, self(x), other(x)

    def __add__(self, other):
        if not isinstance(other, SigmaFunction):
            return NotImplemented
        if self.kind == other.kind == "cosine":
            n = max(self.coeffs.size, other.coeffs.size)
            return SigmaFunction.cosine(
                np.pad(self.coeffs, (0, n - self.coeffs.size)) + np.pad(other.coeffs, (0, n - other.coeffs.size))
            )
        x, a, b = self._grid_pair(other)
        return SigmaFunction.piecewise_linear(x, a + b)

    def __mul__(self, t):
        t = float(t)
        if self.kind == "cosine":
            return SigmaFunction.cosine(t * self.coeffs)
        return SigmaFunction.piecewise_linear(self.nodes, t * self.values)

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def __sub__(self, other):
        if not isinstance(other, SigmaFunction):
            return NotImplemented
        return self + (-other)

    def add_linear(self, c: float) -> SigmaFunction:
        """sigma + c*x, i.e. the potential shifted by the constant c."""
        x, v = self.breakpoints()
        return SigmaFunction.piecewise_linear(x, v + c * x)

    def equal_mod_constant(self, other, atol=1e-10, n=DEFAULT_GRID) -> bool:
        x = np.linspace(0.0, np.pi, n + 1)
        d = self(x) - other(x)
        return bool(np.ptp(d) <= 2 * atol)

    # -- serialization ---------------------------------------------------
    def to_dict(self) -> dict:
        if self.kind == "cosine":
            return {"kind": "cosine", "coeffs": self.coeffs.tolist()}
        out = {"kind": "grid", "values": self.values.tolist()}
        if not np.allclose(self.nodes, np.linspace(0.0, np.pi, self.nodes.size), rtol=0, atol=1e-13):
            out["nodes"] = self.nodes.tolist()
        return out

    @classmethod
    def from_dict(cls, d: dict) -> SigmaFunction:
        kind = d.get("kind")
        if kind == "cosine":
            return cls.cosine(d["coeffs"])
        if kind == "grid":
            if "nodes" in d:
                return cls.piecewise_linear(d["nodes"], d["values"])
            return cls.grid(d["values"])
        raise ValidationError(f"unknown sigma kind {kind!r}")

    def __repr__(self):
        if self.kind == "cosine":
            return f"SigmaFunction(cosine, J={self.coeffs.size - 1})"
        return f"SigmaFunction(grid, {self.nodes.size} breakpoints)"


@dataclass(frozen=True)
class PotentialQ:
    """A potential q stored as cosine coefficients or uniform samples.

    ``theta`` is the Sobolev smoothness of q when known; ``None`` marks a
    distributional potential for which only sigma is meaningful.
    """

    kind: str
    data: np.ndarray
    theta: float | None = 0.0
    _sigma: SigmaFunction | None = field(default=None, repr=False, compare=False)

    @classmethod
    def constant(cls, q0: float) -> PotentialQ:
        return cls("cosine", np.array([float(q0)]))

    @classmethod
    def cosine(cls, coeffs, theta=0.0) -> PotentialQ:
        return cls("cosine", np.asarray(coeffs, dtype=float), theta)

    @classmethod
    def grid(cls, values, theta=0.0) -> PotentialQ:
        return cls("grid", np.asarray(values, dtype=float), theta)

    @classmethod
    def from_function(cls, f: Callable, n: int = DEFAULT_GRID, theta=0.0) -> PotentialQ:
        x = np.linspace(0.0, np.pi, n + 1)
        return cls.grid(np.asarray(f(x), dtype=float) * np.ones_like(x), theta)

    @classmethod
    def from_sigma(cls, sigma: SigmaFunction) -> PotentialQ:
        """Wrap a sigma for which q exists only as a distribution."""
        return cls("distributional", np.zeros(0), None, sigma)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "cosine":
            return np.cos(np.multiply.outer(x, np.arange(self.data.size))) @ self.data
        if self.kind == "grid":
            return np.interp(x, np.linspace(0.0, np.pi, self.data.size), self.data)
        raise ValidationError("a distributional potential has no pointwise values")

    @property
    def sigma(self) -> SigmaFunction:
        return self._sigma if self._sigma is not None else sigma_from_q(self)


def sigma_from_q(q: PotentialQ, n: int = DEFAULT_GRID) -> SigmaFunction:
    """Antiderivative of q with sigma(0) = 0, sampled exactly at grid nodes."""
    if q.kind == "distributional":
        return q.sigma
    if q.kind == "cosine":
        c = q.data
        if np.all(c[1:] == 0):
            return SigmaFunction.linear(float(c[0]) if c.size else 0.0)
        x = np.linspace(0.0, np.pi, n + 1)
        j = np.arange(1, c.size)
        vals = c[0] * x + np.sin(np.multiply.outer(x, j)) @ (c[1:] / j)
        return SigmaFunction.piecewise_linear(x, vals)
    v = q.data
    x = np.linspace(0.0, np.pi, v.size)
    h = np.diff(x)
    vals = np.concatenate([[0.0], np.cumsum(0.5 * h * (v[1:] + v[:-1]))])
    return SigmaFunction.piecewise_linear(x, vals)


def q0_of(sigma: SigmaFunction) -> float:
    """Mean value of the potential, (sigma(pi) - sigma(0)) / pi."""
    return float((sigma(np.pi) - sigma(0.0)) / np.pi)


def sobolev_norm(sigma: SigmaFunction, tau: float, n: int | None = None) -> float:
    """Cosine-basis W_2^tau norm of sigma modulo constants.

    ``sqrt(pi/2 * sum_{j>=1} (1 + j^2)^tau c_j^2)``; the pi/2 factor makes
    the tau = 0 value the L2 norm of sigma minus its mean.
    """
    if not 0.0 <= tau < 1.5:
        raise ValidationError(f"tau={tau} outside [0, 3/2)")
    c = sigma.cosine_coefficients(n)[1:]
    j = np.arange(1, c.size + 1, dtype=float)
    return float(np.sqrt(0.5 * np.pi * np.sum((1.0 + j * j) ** tau * c * c)))


def quadrature_rule(nodes: np.ndarray, hmax: float) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre points and weights honouring breakpoints."""
    a = nodes[:-1]
    h = np.diff(nodes)
    keep = h > 0
    a, h = a[keep], h[keep]
    pieces = np.maximum(1, np.ceil(h / hmax).astype(int))
    starts = np.repeat(a, pieces) + np.concatenate([np.arange(p) for p in pieces]) * np.repeat(h / pieces, pieces)
    width = np.repeat(h / pieces, pieces)
    t = starts[:, None] + 0.5 * width[:, None] * (_GL_T[None, :] + 1.0)
    w = 0.5 * width[:, None] * _GL_W[None, :]
    return t.ravel(), w.ravel()


def _sigma_quadrature(sigma: SigmaFunction, K: int):
    x, _ = sigma.breakpoints()
    hmax = np.pi / max(DEFAULT_GRID, 8 * K)
    t, w = quadrature_rule(x, hmax)
    return t, w, sigma(t)


def fourier_projections(sigma: SigmaFunction, K: int) -> tuple[np.ndarray, np.ndarray]:
    """Integrals of sigma(t) sin(2kt) and (pi - t) sigma(t) cos(2kt), k = 1..K."""
    if K < 1:
        raise ValidationError("K must be >= 1")
    t, w, s = _sigma_quadrature(sigma, K)
    k2 = 2.0 * np.arange(1, K + 1)
    arg = np.multiply.outer(t, k2)
    first = (w * s) @ np.sin(arg)
    second = (w * (np.pi - t) * s) @ np.cos(arg)
    return first, second


def load_sigma_json(obj) -> SigmaFunction:
    """Parse the JSON potential format.

    ``{"kind": "cosine", "coeffs": [...]}`` or ``{"kind": "grid", "values":
    [...]}``; an optional ``"of": "q"`` says the numbers describe q.
    """
    if isinstance(obj, (str, bytes)):
        obj = json.loads(obj)
    if not isinstance(obj, dict):
        raise ValidationError("potential JSON must be an object")
    if obj.get("of", "sigma") == "q":
        kind = obj.get("kind")
        if kind == "cosine":
            return sigma_from_q(PotentialQ.cosine(obj["coeffs"]))
        if kind == "grid":
            return sigma_from_q(PotentialQ.grid(obj["values"]))
        raise ValidationError(f"unknown potential kind {kind!r}")
    return SigmaFunction.from_dict(obj)
