"""Regularized spectral data and the weighted sequence spaces around it.

Spectral pairs are interleaved into one real sequence indexed by n = 1, 2, ...

    s_{2k-1} = alpha_k - pi/2,      s_{2k} = sqrt(lambda_k) - k,

with alpha_k in the paper normalization.  The slowly decaying part is carried
by finitely many explicit sequences e_p,

    e_{2s-1}[2k] = (2k)^-(2s-1),    e_{2s}[2k-1] = (2k)^-(2s),

(zero elsewhere), so that ``s = a + sum_j c_j e_j`` with ``a`` in the
weighted space l_2^theta, ``||a||^2 = sum |a_n|^2 n^(2 theta)``.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .forward import DEFAULT_TOL, SpectralData, spectral_data
from .inverse import smoothness_order
from .potential import SigmaFunction, fourier_projections

HALF_PI = 0.5 * math.pi


def e_sequence(p: int, n: int) -> np.ndarray:
    """First ``n`` entries of the explicit sequence e_p (p >= 1)."""
    if p < 1:
        raise ValidationError("p must be >= 1")
    out = np.zeros(n)
    if p % 2:
        idx = np.arange(2, n + 1, 2)
        out[idx - 1] = idx.astype(float) ** (-p)
    else:
        idx = np.arange(1, n + 1, 2)
        out[idx - 1] = (idx + 1.0) ** (-p)
    return out


@dataclass(frozen=True)
class RegularizedSequence:
    """Interleaved regularized data with its l_D^theta decomposition.

    Attributes
    ----------
    entries : ndarray
        s_1, ..., s_2N.
    theta : float
        Smoothness index; m = floor(theta + 1/2) coefficients are split off.
    c : tuple of float
        c_1..c_m, with c_1 = q0.
    q0 : float
        Mean of the potential, kept even when m = 0.
    """

    entries: np.ndarray
    theta: float = 1.0
    c: tuple = ()
    q0: float = 0.0
    tail: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        s = np.array(self.entries, dtype=float).ravel()
        s.setflags(write=False)
        object.__setattr__(self, "entries", s)
        object.__setattr__(self, "c", tuple(float(v) for v in self.c))
        if self.theta < 0:
            raise ValidationError("theta must be >= 0")
        if len(self.c) != smoothness_order(self.theta):
            raise ValidationError(f"theta={self.theta} needs exactly {smoothness_order(self.theta)} coefficients")
        a = s - self.explicit_part()
        a.setflags(write=False)
        object.__setattr__(self, "tail", a)

    @property
    def N(self) -> int:
        return self.entries.size // 2

    def explicit_part(self) -> np.ndarray:
        out = np.zeros(self.entries.size)
        for j, cj in enumerate(self.c, start=1):
            out += cj * e_sequence(j, out.size)
        return out

    def __sub__(self, other: RegularizedSequence) -> RegularizedSequence:
        if smoothness_order(self.theta) != smoothness_order(other.theta):
            raise ValidationError("sequences carry different numbers of coefficients")
        n = min(self.entries.size, other.entries.size)
        c = tuple(a - b for a, b in zip(self.c, other.c))
        return RegularizedSequence(self.entries[:n] - other.entries[:n], self.theta, c, self.q0 - other.q0)


@dataclass(frozen=True)
class OmegaParams:
    """Ball radius ``r`` and gap parameter ``h`` of the admissible set."""

    r: float
    h: float
    theta: float = 1.0

    def __post_init__(self):
        if not self.r > 0:
            raise ValidationError("r must be positive")
        if not 0 < self.h < 1:
            raise ValidationError("h must lie in (0, 1)")


@dataclass(frozen=True)
class OmegaVerdict:
    ok: bool
    violations: tuple
    norm: float

    def __bool__(self):
        return self.ok


def _pairs(data):
    lam = np.asarray(data.lambdas, dtype=float)
    alpha = data.paper_alphas() if isinstance(data, SpectralData) else np.asarray(data.alphas, dtype=float)
    return lam, alpha


def regularize(data, theta: float = 1.0, c_extra=()) -> RegularizedSequence:
    """Interleave spectral pairs into regularized data.

    Parameters
    ----------
    data : SpectralData or FiniteDataSet
        Pairs in the paper normalization (SpectralData is converted).
    theta : float
        Smoothness index selecting m = floor(theta + 1/2).
    c_extra : sequence of float
        c_2, c_3, ... when m >= 2; they are never estimated from the data.
    """
    lam, alpha = _pairs(data)
    if np.any(lam < 0):
        raise ValidationError("negative eigenvalues are outside the real-data scope")
    k = np.arange(1, lam.size + 1, dtype=float)
    s = np.empty(2 * lam.size)
    s[0::2] = alpha - HALF_PI
    s[1::2] = np.sqrt(lam) - k
    m = smoothness_order(theta)
    c = (float(data.q0),) + tuple(c_extra)
    if len(c) < m:
        raise ValidationError(f"theta={theta} needs c_2..c_{m}")
    return RegularizedSequence(s, theta, c[:m], float(data.q0))


def unregularize(seq: RegularizedSequence) -> SpectralData:
    """Inverse of :func:`regularize`: lambda_k = (s_2k + k)^2."""
    k = np.arange(1, seq.N + 1, dtype=float)
    lam = (seq.entries[1 : 2 * seq.N : 2] + k) ** 2
    alpha = seq.entries[0 : 2 * seq.N : 2] + HALF_PI
    return SpectralData(seq.q0, lam, alpha, "paper")


def weighted_norm(seq, theta: float | None = None) -> float:
    """l_D^theta norm ``sqrt(sum |a_n|^2 n^(2 theta) + sum |c_j|^2)``.

    A plain array is treated as a pure tail.
    """
    if isinstance(seq, RegularizedSequence):
        a, c = seq.tail, np.asarray(seq.c)
        theta = seq.theta if theta is None else theta
    else:
        a, c = np.asarray(seq, dtype=float), np.zeros(0)
        theta = 0.0 if theta is None else theta
    n = np.arange(1, a.size + 1, dtype=float)
    return float(np.sqrt(np.sum(a * a * n ** (2.0 * theta)) + np.sum(c * c)))


def check_omega(seq: RegularizedSequence, p: OmegaParams) -> OmegaVerdict:
    """Test the admissibility inequalities on the available entries.

    Violations are reported as ``(rule, k)`` with rules ``"s_2k >= 0"``,
    ``"s_2k - s_2k+2 <= 1 - h"``, ``"s_2k-1 >= -pi/2 + h"`` and
    ``"norm <= r"`` (k = 0 for the last).
    """
    odd = seq.entries[0::2]
    even = seq.entries[1::2]
    bad = []
    bad += [("s_2k >= 0", int(k) + 1) for k in np.flatnonzero(even < 0)]
    gap = even[:-1] - even[1:]
    bad += [("s_2k - s_2k+2 <= 1 - h", int(k) + 1) for k in np.flatnonzero(gap > 1.0 - p.h)]
    bad += [("s_2k-1 >= -pi/2 + h", int(k) + 1) for k in np.flatnonzero(odd < -HALF_PI + p.h)]
    nrm = weighted_norm(seq, p.theta)
    if not nrm <= p.r:
        bad.append(("norm <= r", 0))
    return OmegaVerdict(not bad, tuple(bad), nrm)


def s_map(sigma: SigmaFunction, K: int) -> np.ndarray:
    """First 2K coordinates of the linear map S.

    ``(S sigma)_2k = -(1/pi) int sigma sin 2kt`` and
    ``(S sigma)_2k-1 = -int (pi - t) sigma cos 2kt``.
    """
    first, second = fourier_projections(sigma, K)
    out = np.empty(2 * K)
    out[0::2] = -second
    out[1::2] = -first / math.pi
    return out


def phi_residual(sigma: SigmaFunction, K: int, tol: float = DEFAULT_TOL, n: int | None = None) -> np.ndarray:
    """Nonlinear part ``S sigma - s`` of the regularized data, length 2K.

    sigma is first replaced by its piecewise-linear interpolant so that the
    linear map and the forward solver see the same function.
    """
    g = sigma.to_grid(n)
    seq = regularize(spectral_data(g, K, tol), theta=0.0)
    return s_map(g, K) - seq.entries


def write_csv(seq: RegularizedSequence, path) -> None:
    """Write rows ``(k, value, component)``: the c_j, then the tail a_n."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["k", "value", "component"])
        for j, cj in enumerate(seq.c, start=1):
            w.writerow([j, repr(cj), "c"])
        for i, a in enumerate(seq.tail, start=1):
            w.writerow([i, repr(float(a)), "tail"])
