import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad, solve_ivp
from scipy.optimize import brentq

from slkit import _kernels
from slkit.errors import DomainError, ValidationError
from slkit.experiments import smoothness_class_sigma
from slkit.forward import SpectralData, eigenvalues, integrate_s, norming_constants, spectral_data
from slkit.potential import SigmaFunction, sobolev_norm

ZERO = SigmaFunction.zero()
Q2 = SigmaFunction.linear(2.0)


def test_integrate_free_first_eigenpair():
    r = integrate_s(ZERO, 1.0)
    assert r.s_end == pytest.approx(0.0, abs=1e-12)
    assert r.oscillation_count == 0
    assert r.l2_integral == pytest.approx(math.pi / 2)


def test_integrate_free_closed_form():
    assert integrate_s(ZERO, 2.25).s_end == pytest.approx(-1.0, abs=1e-12)


def test_integrate_constant_potential_eigenvalue():
    assert integrate_s(Q2, 3.0).s_end == pytest.approx(0.0, abs=1e-12)


def test_negative_lambda_uses_unit_slope():
    r = integrate_s(ZERO, -4.0)
    assert r.normalization == "classical"
    assert r.s_end == pytest.approx(math.sinh(2 * math.pi) / 2, rel=1e-12)


def test_quasi_derivative_at_end():
    # sigma = 2x: s^[1](pi) = s'(pi) - 2 pi s(pi)
    lam = 5.0
    r = integrate_s(Q2, lam)
    w = math.sqrt(lam - 2)
    s, ds = math.sqrt(lam) * math.sin(w * math.pi) / w, math.sqrt(lam) * math.cos(w * math.pi)
    assert r.s_end == pytest.approx(s, rel=1e-12)
    assert r.s1_end == pytest.approx(ds - 2 * math.pi * s, rel=1e-11)


def test_against_generic_ode_integrator():
    # q = cos 2x; independent check with an adaptive Runge-Kutta solver
    s = SigmaFunction.from_function(lambda x: 0.5 * np.sin(2 * x), n=8192)
    lam = 7.3
    sol = solve_ivp(lambda x, y: [y[1], (np.cos(2 * x) - lam) * y[0]], (0, math.pi), [0, 1], rtol=1e-12, atol=1e-13)
    r = integrate_s(s, lam)
    assert r.s_end / math.sqrt(lam) == pytest.approx(sol.y[0, -1], abs=1e-6)


def test_eigenvalues_free_and_constant():
    assert eigenvalues(ZERO, 3) == pytest.approx([1, 4, 9], abs=1e-10)
    assert eigenvalues(Q2, 3) == pytest.approx([3, 6, 11], abs=1e-10)


def _step_root(lo, hi):
    # delta of mass 1 at pi/2: sin(w pi/2) + 2 w cos(w pi/2) = 0
    return brentq(lambda w: math.sin(w * math.pi / 2) + 2 * w * math.cos(w * math.pi / 2), lo, hi, xtol=1e-15)


def test_step_sigma_matches_transcendental_root():
    s = SigmaFunction.piecewise_linear([0, math.pi / 2, math.pi / 2, math.pi], [0, 0, 1, 1])
    lams = eigenvalues(s, 2)
    assert lams[0] == pytest.approx(_step_root(1.0, 2.0) ** 2, abs=1e-9)
    # even eigenfunctions vanish at pi/2 and do not feel the delta
    assert lams[1] == pytest.approx(4.0, abs=1e-9)


def test_norming_constants_closed_forms():
    assert norming_constants(ZERO, [1, 4, 9]) == pytest.approx([math.pi / 2] * 3)
    a = norming_constants(Q2, [3, 6])
    assert a == pytest.approx([math.pi / 2 + math.pi, math.pi / 2 + math.pi / 4])


def test_norming_constant_by_quadrature():
    s = SigmaFunction.from_function(lambda x: 0.5 * np.sin(2 * x), n=8192)
    lam = eigenvalues(s, 2)[1]
    sol = solve_ivp(
        lambda x, y: [y[1], (np.cos(2 * x) - lam) * y[0], y[0] ** 2],
        (0, math.pi), [0, math.sqrt(lam), 0], rtol=1e-11, atol=1e-12,
    )
    assert norming_constants(s, [lam])[0] == pytest.approx(sol.y[2, -1], rel=1e-6)


def test_limit_branch_at_zero_eigenvalue():
    s = SigmaFunction.linear(-1.0)
    sd = spectral_data(s, 2)
    assert sd.lambdas[0] == pytest.approx(0.0, abs=1e-10)
    # phi = sin x, integral of phi^2
    assert sd.alphas[0] == pytest.approx(math.pi / 2)


def test_negative_eigenvalue_carries_negative_paper_constant():
    sd = spectral_data(SigmaFunction.linear(-3.0), 2)
    assert sd.lambdas[0] == pytest.approx(-2.0)
    assert sd.alphas[0] < 0 < sd.classical_alphas()[0]
    assert sd.classical_alphas()[0] == pytest.approx(math.pi / 2)


def test_non_eigenvalue_rejected():
    with pytest.raises(DomainError):
        norming_constants(ZERO, [2.0])


def test_input_validation():
    with pytest.raises(ValidationError):
        eigenvalues(ZERO, 0)
    with pytest.raises(ValidationError):
        eigenvalues(ZERO, 3, tol=0.0)
    with pytest.raises(ValidationError):
        SpectralData(0.0, [1.0, 1.0], [1.0, 1.0])
    with pytest.raises(ValidationError):
        SpectralData(0.0, [1.0, 4.0], [1.0, -1.0])


def test_normalization_conversion_round_trip():
    sd = spectral_data(SigmaFunction.cosine([0, 0.3, 0.2]), 5)
    back = sd.to_classical().to_paper()
    assert np.allclose(back.alphas, sd.alphas, rtol=1e-14)
    assert np.allclose(sd.to_classical().alphas * sd.lambdas, sd.alphas, rtol=1e-14)


def test_segment_functions_series_and_closed_form_agree():
    for mu in (1e-3, -1e-3, 0.04, -0.04):
        h = 1.0
        c, sn, iss = _kernels.segment_functions(mu, h)
        w = complex(mu) ** 0.5
        c_ref = np.cos(w * h).real
        sn_ref = (np.sin(w * h) / w).real
        iss_ref = quad(lambda t: (np.sin(w * t) / w).real ** 2, 0, h, epsabs=1e-15)[0]
        assert (c, sn, iss) == pytest.approx((c_ref, sn_ref, iss_ref), rel=1e-13, abs=1e-15)


cosine_sigma = st.lists(st.floats(-1, 1, allow_nan=False), min_size=1, max_size=6).map(
    lambda c: SigmaFunction.cosine([0.0] + c)
)


@settings(max_examples=15, deadline=None)
@given(cosine_sigma)
def test_oscillation_count_monotone_and_brackets(s):
    lams = eigenvalues(s, 5)
    x, v = s.breakpoints()
    grid = np.linspace(lams[0] - 5, lams[-1] + 5, 60)
    counts = [_kernels.zero_count(x, v, g) for g in grid]
    assert all(a <= b for a, b in zip(counts, counts[1:]))
    for k, lam in enumerate(lams, start=1):
        d = 1e-6 * max(1.0, abs(lam))
        assert integrate_s(s, lam - d).oscillation_count == k - 1
        assert integrate_s(s, lam + d).oscillation_count == k


@settings(max_examples=15, deadline=None)
@given(cosine_sigma, st.floats(-3, 3))
def test_constant_shift_covariance(s, c):
    a = eigenvalues(s, 6)
    b = eigenvalues(s.add_linear(c), 6)
    assert np.allclose(b, a + c, atol=1e-9)


def test_exact_root_is_not_returned_twice():
    # this sigma hits phi(pi, lambda_12) == 0.0 exactly in floating point
    s = smoothness_class_sigma(1.0, J=64, seed=6, zero_h0=False)
    s = s * (0.5 / sobolev_norm(s, 1.0))
    assert np.all(np.diff(eigenvalues(s, 20)) > 1.0)
