import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from slkit.errors import SingularBasisError, UnsupportedSmoothnessError, ValidationError
from slkit.forward import spectral_data
from slkit.inverse import (
    FiniteDataSet,
    assemble_glm,
    background_data,
    background_sigma,
    glm_reconstruct,
    reconstruct,
    roundtrip_check,
    shift_normalize,
    smoothness_order,
)
from slkit.potential import PotentialQ, SigmaFunction, sigma_from_q, sobolev_norm

COS2 = sigma_from_q(PotentialQ.cosine([0.0, 0.0, 1.0]), n=8192)


@pytest.fixture(scope="module")
def cos2_data():
    return spectral_data(COS2, 16)


@pytest.mark.parametrize("theta, m", [(0.0, 0), (0.49, 0), (0.5, 1), (1.25, 1), (1.5, 2), (2.49, 2), (2.5, 3)])
def test_smoothness_order(theta, m):
    assert smoothness_order(theta) == m


def test_background_forms():
    assert background_sigma((), 0.2).is_linear
    s = background_sigma((3.0,), 1.0)
    assert s.is_linear and s(math.pi) == pytest.approx(3 * math.pi)
    x = np.linspace(0, math.pi, 9)
    assert np.allclose(background_sigma((0.0, 1.0), 2.0)(x), x * (math.pi - x), atol=1e-12)
    with pytest.raises(UnsupportedSmoothnessError):
        background_sigma((0.0, 0.0, 0.0), 2.5)


def test_background_data_closed_form_matches_solver():
    lam, a = background_data(SigmaFunction.linear(2.0), 4)
    sd = spectral_data(SigmaFunction.linear(2.0), 4).to_classical()
    assert np.allclose(lam, sd.lambdas) and np.allclose(a, sd.alphas, rtol=1e-12)


def test_finite_data_validation():
    with pytest.raises(ValidationError):
        FiniteDataSet([1.0, 1.0], [1.0, 1.0], (0.0,))
    with pytest.raises(ValidationError):
        FiniteDataSet([1.0, 4.0], [1.0, 0.0], (0.0,))
    with pytest.raises(ValidationError):
        FiniteDataSet([1.0], [1.0], (), theta=1.0)


def test_finite_data_dict_round_trip(cos2_data):
    d = FiniteDataSet.from_spectral(cos2_data, 1.0, N=4)
    back = FiniteDataSet.from_dict(d.to_dict())
    assert np.array_equal(back.lambdas, d.lambdas) and back.c == d.c
    with pytest.raises(ValidationError):
        FiniteDataSet.from_dict({"alphas": [1.0]})


@settings(max_examples=30, deadline=None)
@given(st.floats(0.1, 10.0), st.floats(-0.5, 5.0))
def test_shift_normalize_round_trip(q0, c):
    k = np.arange(1, 6, dtype=float)
    d = FiniteDataSet(k * k + q0, math.pi / 2 + math.pi * q0 / (2 * k * k), (q0,))
    s = shift_normalize(d, c)
    assert np.allclose(s.classical_alphas(), d.classical_alphas(), rtol=1e-13)
    back = s.unshifted()
    assert np.allclose(back.lambdas, d.lambdas, rtol=1e-13)
    assert np.allclose(back.alphas, d.alphas, rtol=1e-12)
    assert back.c[0] == pytest.approx(q0)


def test_shift_matches_shifted_potential():
    s = SigmaFunction.cosine([0, 0.3, -0.2])
    d = FiniteDataSet.from_spectral(spectral_data(s, 4), 1.0)
    direct = spectral_data(s.add_linear(2.0), 4)
    shifted = shift_normalize(d, 2.0)
    assert np.allclose(shifted.lambdas, direct.lambdas, atol=1e-9)
    assert np.allclose(shifted.alphas, direct.alphas, atol=1e-8)


def test_exact_background_data_reproduce_background():
    k = np.arange(1, 9, dtype=float)
    d = FiniteDataSet(k * k + 2.0, math.pi / 2 + math.pi / k**2, (2.0,))
    p = assemble_glm(d)
    assert p.size == 0 and p.dropped == tuple(range(1, 9))
    x = np.linspace(0, math.pi, 7)
    assert np.allclose(glm_reconstruct(p)(x), 2 * x, atol=1e-14)


def test_shared_eigenvalue_is_singular():
    d = FiniteDataSet([4.0, 9.0], [1.0, 2.0], (0.0,))
    with pytest.raises(SingularBasisError):
        assemble_glm(d)


def test_gram_matrix_properties(cos2_data):
    p = assemble_glm(FiniteDataSet.from_spectral(cos2_data, 1.0, N=4))
    G = p.gram(math.pi)
    assert np.allclose(G, G.T, atol=1e-14)
    assert np.linalg.eigvalsh(G).min() > -1e-12
    # background half: f_k = sin(kx)/k, so G_kk(pi) is the classical constant
    n = p.size // 2
    assert np.allclose(np.diag(G)[n:], math.pi / (2 * (np.arange(1, n + 1) ** 2)), rtol=1e-10)
    assert np.allclose(p.gram(0.0), 0.0)


def test_general_and_symmetric_solves_agree(cos2_data):
    p = assemble_glm(FiniteDataSet.from_spectral(cos2_data, 1.0, N=8), grid=512)
    a = glm_reconstruct(p, "general")
    b = glm_reconstruct(p, "symmetric")
    assert np.max(np.abs(a.values - b.values)) < 1e-10
    with pytest.raises(ValidationError):
        glm_reconstruct(p, "cholesky")


@pytest.mark.parametrize("N", [4, 8])
def test_roundtrip_cos2x(cos2_data, N):
    d = FiniteDataSet.from_spectral(cos2_data, 1.0, N=N)
    rep = roundtrip_check(reconstruct(d), d)
    assert rep.passed, rep.to_dict()


def test_reconstruction_improves_with_N(cos2_data):
    errs = [
        sobolev_norm(reconstruct(FiniteDataSet.from_spectral(cos2_data, 1.0, N=N)) - COS2, 0.0) for N in (4, 8, 16)
    ]
    assert errs[0] > errs[1] > errs[2]


def test_want_q_returns_potential(cos2_data):
    p = assemble_glm(FiniteDataSet.from_spectral(cos2_data, 1.0, N=16))
    sigma, q = glm_reconstruct(p, want_q=True)
    x = np.linspace(0.5, 2.5, 5)
    assert np.allclose(q(x), np.cos(2 * x), atol=0.05)


def test_shifted_data_reconstruct_original(cos2_data):
    d = FiniteDataSet.from_spectral(cos2_data, 1.0, N=6)
    a = reconstruct(d)
    b = reconstruct(shift_normalize(d, 3.0))
    assert np.max(np.abs(a.values - b.values)) < 1e-9
