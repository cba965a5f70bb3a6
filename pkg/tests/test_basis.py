import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad, simpson
from scipy.special import eval_legendre

from artifact.basis import BasisSpec, eval_basis, expand, feature_count, feature_labels, rescale
from artifact.errors import DimensionError, InvalidArgumentError

CUBE3 = ((-1, 1),) * 3
CIRCLE = ((0, 2 * np.pi),)


def test_monomial_order_and_values():
    spec = BasisSpec("monomial", 2, CUBE3)
    assert feature_count(spec) == 10
    assert feature_labels(spec) == ["1", "x1", "x2", "x3", "x1^2", "x2^2", "x3^2", "x1*x2", "x1*x3", "x2*x3"]
    np.testing.assert_array_equal(eval_basis(spec, [0.5, -1.0, 2.0]), [1, 0.5, -1, 2, 0.25, 1, 4, -0.5, 1.0, -2])


def test_fourier_scalar_at_zero():
    spec = BasisSpec("fourier", 3, CIRCLE)
    phi = eval_basis(spec, [0.0])
    np.testing.assert_allclose(phi, [1 / np.sqrt(2), 1, 0, 1, 0, 1, 0], atol=1e-15)
    theta = 1.234
    phi = eval_basis(spec, [theta])
    np.testing.assert_allclose(phi[1::2], np.cos(np.arange(1, 4) * theta), atol=1e-13)
    np.testing.assert_allclose(phi[2::2], np.sin(np.arange(1, 4) * theta), atol=1e-13)


def test_legendre_matches_scipy():
    spec = BasisSpec("legendre", 5, ((-2.0, 4.0),))
    x = np.linspace(-2, 4, 17)
    xt = (x + 2) / 3 - 1
    phi = eval_basis(spec, x[:, None])
    for k in range(6):
        np.testing.assert_allclose(phi[:, k], np.sqrt(k + 0.5) * eval_legendre(k, xt), atol=1e-13)
    # normalisation by adaptive quadrature
    for k in range(6):
        val = quad(lambda t: (np.sqrt(k + 0.5) * eval_legendre(k, t)) ** 2, -1, 1)[0]
        assert val == pytest.approx(1.0, abs=1e-12)


def test_feature_counts():
    assert feature_count(BasisSpec("monomial", 2, CUBE3)) == 10
    assert feature_count(BasisSpec("fourier", 2, CUBE3)) == 13
    assert feature_count(BasisSpec("fourier", 5, CUBE3)) == 31
    assert feature_count(BasisSpec("legendre", 3, CUBE3)) == 20
    assert feature_count(BasisSpec("fourier", 6, CIRCLE)) == 13
    for fam in ("fourier", "legendre", "monomial"):
        assert feature_count(BasisSpec(fam, 0, CUBE3)) == 1


@pytest.mark.parametrize("family,L", [("legendre", 6), ("fourier", 4)])
def test_gram_matrix_is_identity(family, L):
    spec = BasisSpec(family, L, ((-1, 1),))
    x = np.linspace(-1, 1, 10001)
    phi = eval_basis(spec, x[:, None])
    G = simpson(phi[:, :, None] * phi[:, None, :], x=x, axis=0)
    assert np.abs(G - np.eye(phi.shape[1])).max() <= 1e-6


def test_legendre_product_gram_2d():
    spec = BasisSpec("legendre", 2, ((-1, 1), (-1, 1)))
    g = np.linspace(-1, 1, 801)
    X, Y = np.meshgrid(g, g, indexing="ij")
    phi = eval_basis(spec, np.stack([X, Y], axis=-1))
    G = simpson(simpson(phi[..., :, None] * phi[..., None, :], x=g, axis=1), x=g, axis=0)
    assert np.abs(G - np.eye(6)).max() <= 1e-6


def test_expand_reproduces_functions():
    spec = BasisSpec("monomial", 2, CUBE3)
    c = np.zeros(10)
    c[3] = 0.6
    f = expand(spec, c)
    x = np.random.default_rng(0).uniform(-1, 1, (50, 3))
    np.testing.assert_allclose(f(x), 0.6 * x[:, 2], atol=1e-15)
    spec = BasisSpec("fourier", 2, CIRCLE)
    f = expand(spec, [np.sqrt(2) * 3, 0, 0, 0, 1])
    t = np.linspace(0, 6, 9)
    np.testing.assert_allclose(f(t[:, None]), 3 + np.sin(2 * t), atol=1e-13)
    with pytest.raises(DimensionError):
        expand(spec, [1.0, 2.0])


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(["fourier", "legendre", "monomial"]), st.integers(0, 4), st.integers(1, 3), st.integers(0, 10**6))
def test_expand_round_trip(family, L, n, seed):
    # fit random coefficients back from values at many points
    spec = BasisSpec(family, L, ((-1, 2),) * n)
    rng = np.random.default_rng(seed)
    c = rng.normal(size=feature_count(spec))
    x = rng.uniform(-1, 2, (8 * feature_count(spec) + 20, n))
    phi = eval_basis(spec, x)
    back = np.linalg.lstsq(phi, expand(spec, c)(x), rcond=None)[0]
    if np.linalg.matrix_rank(phi) == phi.shape[1]:
        np.testing.assert_allclose(back, c, atol=1e-7)


def test_batched_shapes():
    spec = BasisSpec("legendre", 2, CUBE3)
    assert eval_basis(spec, np.zeros((4, 5, 3))).shape == (4, 5, 10)
    assert eval_basis(spec, np.zeros(3)).shape == (10,)


def test_rescale_endpoints():
    spec = BasisSpec("legendre", 1, ((2.0, 6.0), (-1.0, 0.0)))
    np.testing.assert_allclose(rescale(spec, [[2.0, -1.0], [6.0, 0.0], [4.0, -0.5]]), [[-1, -1], [1, 1], [0, 0]])


def test_per_entry_orders():
    spec = BasisSpec("monomial", ((0, 1), (2, 0)), ((-1, 1), (-1, 1)))
    assert feature_count(spec, (0, 0)) == 1
    assert feature_count(spec, (0, 1)) == 3
    assert feature_count(spec, (1, 0)) == 6
    assert eval_basis(spec, [0.1, 0.2], (1, 0)).shape == (6,)
    with pytest.raises(InvalidArgumentError):
        feature_count(spec)


def test_spec_errors():
    with pytest.raises(InvalidArgumentError):
        BasisSpec("chebyshev", 2, CUBE3)
    with pytest.raises(InvalidArgumentError):
        BasisSpec("monomial", -1, CUBE3)
    with pytest.raises(InvalidArgumentError):
        BasisSpec("monomial", 1, ((1, 1),))
    with pytest.raises(DimensionError):
        eval_basis(BasisSpec("monomial", 1, CUBE3), [1.0, 2.0])


def test_spec_is_frozen_and_serialisable():
    spec = BasisSpec("fourier", 6, CIRCLE)
    with pytest.raises(AttributeError):
        spec.order = 3
    assert spec.to_dict() == {"family": "fourier", "order": 6, "domain": [[0.0, 2 * np.pi]]}
    assert hash(spec) == hash(BasisSpec("fourier", 6, [[0, 2 * np.pi]]))
