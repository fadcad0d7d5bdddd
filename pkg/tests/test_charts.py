
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ckytool import charts as ch
from ckytool.charts import ANTI_DE_SITTER, DE_SITTER, MINKOWSKI, ChartPoint, SpacetimeId

CURVED = (ANTI_DE_SITTER, DE_SITTER)
coord = st.floats(-0.5, 0.5, allow_nan=False)
points = st.tuples(st.floats(-1.0, 1.0), coord, coord, coord)


def _fd_metric_derivative(spacetime, x, h=1e-5):
    out = np.zeros((4, 4, 4))
    for l in range(4):
        e = np.zeros(4)
        e[l] = h
        out[l] = (np.asarray(ch.metric(spacetime, x + e)) - np.asarray(ch.metric(spacetime, x - e))) / (2 * h)
    return out


def _fd_pullback_metric(spacetime, x, h=1e-6):
    """g_ab = <∂_a y, ∂_b y> in the flat ambient space, by central differences."""
    jac = np.zeros((5, 4))
    for a in range(4):
        e = np.zeros(4)
        e[a] = h
        jac[:, a] = (np.asarray(ch.embed(spacetime, x + e)) - np.asarray(ch.embed(spacetime, x - e))) / (2 * h)
    return jac.T @ np.diag(ch.ambient_signature(spacetime)) @ jac


def test_parse_aliases_and_rejects_unknown():
    assert SpacetimeId.parse("AdS") is ANTI_DE_SITTER
    assert SpacetimeId.parse("de_sitter") is DE_SITTER
    with pytest.raises(ValueError):
        SpacetimeId.parse("schwarzschild")


@pytest.mark.parametrize("spacetime", CURVED)
def test_metric_at_origin(spacetime):
    g = np.asarray(ch.metric(spacetime, np.zeros(4)))
    np.testing.assert_array_equal(g, np.diag([-1.0, 4.0, 4.0, 4.0]))


def test_minkowski_metric_and_connection():
    x = np.array([0.3, 1.0, -2.0, 0.5])
    np.testing.assert_array_equal(np.asarray(ch.metric(MINKOWSKI, x)), np.diag([-1.0, 1, 1, 1]))
    assert not np.any(ch.christoffel(MINKOWSKI, x))


@pytest.mark.parametrize("spacetime", CURVED)
def test_embedding_at_origin_and_quadric(spacetime, rng):
    np.testing.assert_allclose(np.asarray(ch.embed(spacetime, np.zeros(4))), [1, 0, 0, 0, 0])
    x = ch.sample_points(spacetime, 50, seed=3)
    assert np.max(np.abs(ch.quadric_residual(spacetime, ch.embed(spacetime, x)))) < 1e-12


@pytest.mark.parametrize("spacetime", CURVED)
@given(p=points)
def test_embedding_pulls_back_to_chart_metric(spacetime, p):
    x = np.array(p)
    np.testing.assert_allclose(_fd_pullback_metric(spacetime, x), np.asarray(ch.metric(spacetime, x)), atol=1e-7)


@pytest.mark.parametrize("spacetime", CURVED)
@given(p=points)
def test_christoffel_matches_finite_differences(spacetime, p):
    x = np.array(p)
    dg = _fd_metric_derivative(spacetime, x)
    g = np.asarray(ch.metric(spacetime, x))
    low = 0.5 * (np.einsum("mrn->rmn", dg) + np.einsum("nrm->rmn", dg) - dg)
    expected = np.einsum("lr,rmn->lmn", np.linalg.inv(g), low)
    np.testing.assert_allclose(np.asarray(ch.christoffel(spacetime, x)), expected, atol=1e-8)


@pytest.mark.parametrize("spacetime", CURVED)
def test_riemann_has_constant_curvature(spacetime):
    x = ch.sample_points(spacetime, 20, seed=5)
    R = np.asarray(ch.riemann(spacetime, x))
    Rc = np.asarray(ch.constant_curvature_riemann(spacetime, x))
    assert np.max(np.abs(R - Rc)) < 1e-10
    assert np.max(np.abs(Rc)) > 1.0  # the comparison is not vacuous


@pytest.mark.parametrize("spacetime", CURVED)
def test_frames_are_orthonormal(spacetime):
    x = ch.sample_points(spacetime, 10, seed=2)
    e = np.asarray(ch.frame_vectors(spacetime, x))
    g = np.asarray(ch.metric(spacetime, x))
    eta = np.einsum("ia...,ab...,jb...->ij...", e, g, e)
    expected = np.broadcast_to(np.diag([-1.0, 1, 1, 1])[..., None], eta.shape)
    np.testing.assert_allclose(eta, expected, atol=1e-13)
    theta = np.asarray(ch.coframe(spacetime, x))
    dual = np.einsum("ia...,ja...->ij...", theta, e)
    np.testing.assert_allclose(dual, np.broadcast_to(np.eye(4)[..., None], dual.shape), atol=1e-13)


def test_ads_coframe_at_origin():
    fr = ch.frame_at(ChartPoint((0, 0, 0, 0), "ads"))
    np.testing.assert_allclose(fr.theta[1], [0, 2, 0, 0])
    np.testing.assert_allclose(fr.theta[0], [1, 0, 0, 0])


def test_radial_covector_is_unit():
    p = ChartPoint((0.0, 0.3, 0.0, 0.4), "ads")
    w = ch.frame_at(p).omega
    gi = np.linalg.inv(ch.metric_at(p).g)
    assert w @ gi @ w == pytest.approx(1.0)


@pytest.mark.parametrize("spacetime", CURVED)
@pytest.mark.parametrize("mu", [0, 1, 2, 3, 4])
def test_static_potentials(spacetime, mu):
    p = ChartPoint((0.2, 0.1, -0.3, 0.25), spacetime)
    assert ch.static_potential_residual(p, mu) < 1e-11


def test_static_potentials_unsupported_on_minkowski():
    with pytest.raises(ch.UnsupportedSpacetimeError):
        ch.static_potential_residual(ChartPoint((0, 0, 0, 0), "minkowski"), 0)
    with pytest.raises(ch.UnsupportedSpacetimeError):
        ch.embed(MINKOWSKI, np.zeros(4))


def test_chart_domain():
    with pytest.raises(ch.ChartDomainError):
        ChartPoint((0.0, 1.0, 0.0, 0.0), "ads")
    ChartPoint((0.0, 5.0, 0.0, 0.0), "minkowski")


def test_sqrt_det_at_origin():
    assert ch.metric_at(ChartPoint((0, 0, 0, 0), "ds")).sqrt_det == pytest.approx(8.0)
    assert float(ch.sqrt_abs_det(DE_SITTER, np.zeros(4))) == pytest.approx(8.0)


def test_sample_points_are_seeded():
    a = ch.sample_points(ANTI_DE_SITTER, 30, seed=9)
    np.testing.assert_array_equal(a, ch.sample_points(ANTI_DE_SITTER, 30, seed=9))
    assert a.shape == (4, 30)
    assert np.max(np.linalg.norm(a[1:], axis=0)) < 0.9 + 1e-12


def test_string_spacetime_names_are_parsed():
    x = np.array([0.1, 0.2, 0.3, -0.1])
    np.testing.assert_array_equal(np.asarray(ch.embed("ads", x)), np.asarray(ch.embed(ANTI_DE_SITTER, x)))
    np.testing.assert_array_equal(np.asarray(ch.metric("ds", x)), np.asarray(ch.metric(DE_SITTER, x)))
