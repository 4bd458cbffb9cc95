import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays
from scipy.stats import norm

from cctext import edgemap as em

NOISE = em.NoiseModel(0.02)
images = arrays(np.float64, st.tuples(st.integers(6, 18), st.integers(6, 18)),
                elements=st.floats(0.0, 1.0, allow_nan=False))


def step_image(size=16, contrast=0.8, col=8):
    img = np.full((size, size), 0.1)
    img[:, col:] += contrast
    return img


def test_twelve_directions_at_thirty_degrees():
    th = em.directions()
    assert len(th) == 12
    np.testing.assert_allclose(np.diff(np.degrees(th)), 30.0)


def test_noise_model_rejects_non_positive_sigma():
    with pytest.raises(ValueError):
        em.NoiseModel(0.0)


def test_linear_ramp_has_no_second_derivative():
    ramp = np.tile(np.arange(12, dtype=float), (12, 1))
    for th in em.directions():
        r = em.directional_derivatives(ramp, th)
        np.testing.assert_allclose(r.second_deriv[1:-1, 1:-1], 0.0, atol=1e-12)


def test_quadratic_has_constant_second_derivative():
    x = np.arange(12, dtype=float)
    img = np.tile(x ** 2, (12, 1))
    # (x-1)^2 - 2x^2 + (x+1)^2 = 2, and the cross-axis smoothing sums to 1
    r = em.directional_derivatives(img, 0.0)
    np.testing.assert_allclose(r.second_deriv[1:-1, 1:-1], 2.0, atol=1e-12)


def test_response_sigmas_follow_kernel_norms():
    r = em.directional_derivatives(np.zeros((5, 5)), 0.0, em.NoiseModel(2.0))
    _, k2, k3 = em.steered_kernels(0.0)
    assert r.sigma2 == pytest.approx(2.0 * np.linalg.norm(k2))
    assert r.sigma3 == pytest.approx(2.0 * np.linalg.norm(k3))
    # the x-second-derivative kernel is outer([1,2,1]/4, [1,-2,1]): norm 1.5
    assert np.linalg.norm(k2) == pytest.approx(1.5)


def test_rotating_image_and_direction_together():
    img = np.random.default_rng(3).random((16, 16))
    for th in em.directions():
        a = em.directional_derivatives(img, th)
        # np.rot90 maps a direction at angle t onto t - 90 degrees
        b = em.directional_derivatives(np.rot90(img), th - np.pi / 2)
        np.testing.assert_allclose(np.rot90(a.second_deriv)[2:-2, 2:-2], b.second_deriv[2:-2, 2:-2], atol=1e-12)
        np.testing.assert_allclose(np.rot90(a.third_deriv)[3:-3, 3:-3], b.third_deriv[3:-3, 3:-3], atol=1e-12)


@pytest.mark.parametrize("x1, x2, expected", [(10, 10, 0.0), (10, -10, 1.0), (0, 0, 0.5)])
def test_straddle_asymptotes(x1, x2, expected):
    assert em.straddle_probability(x1, x2, 1.0) == pytest.approx(expected, abs=1e-12)


def test_step_edge_zero_crossing_against_closed_form():
    img = step_image()
    r = em.directional_derivatives(img, 0.0, NOISE)
    p = em.zero_crossing_probability(r)
    # by hand on the step row: L2 = +0.8 left of the step, -0.8 right of it;
    # L1 = 0.4 and L3 = -0.4 at the left pixel
    s2, s3 = r.sigma2, r.sigma3
    x1, x2 = 0.8, -0.8
    straddle = norm.cdf(x1 / s2) * norm.cdf(-x2 / s2) + norm.cdf(-x1 / s2) * norm.cdf(x2 / s2)
    expected = straddle * norm.cdf(0.4 / s3)
    assert r.second_deriv[8, 7] == pytest.approx(0.8)
    assert r.first_deriv[8, 7] == pytest.approx(0.4)
    assert r.third_deriv[8, 7] == pytest.approx(-0.4)
    assert p[8, 7] == pytest.approx(expected, rel=1e-9)
    assert np.all(p[2:-2, 7] > 0.9)


def test_combine_directions_is_max():
    maps = [np.zeros((3, 3)) for _ in range(12)]
    assert np.all(em.combine_directions(maps) == 0)
    maps[4] = np.full((3, 3), 0.9)
    assert np.all(em.combine_directions(maps) == 0.9)
    with pytest.raises(ValueError):
        em.combine_directions([np.zeros((3, 3)), np.zeros((3, 4))])


def test_confidence_zero_image_and_step():
    assert np.all(em.confidence_map(np.zeros((8, 8)), noise=NOISE) == 0)
    conf = em.confidence_map(step_image(), noise=NOISE)
    assert np.all(conf[:, 7:9] > 0.99)
    with pytest.raises(ValueError):
        em.confidence_map(np.zeros((8, 8)), window=4)


def test_confidence_on_noise_is_calibrated():
    rng = np.random.default_rng(11)
    img = 0.5 + rng.normal(0.0, NOISE.sigma, (128, 128))
    frac = np.mean(em.confidence_map(img, noise=NOISE) >= 0.98)
    assert 0.01 <= frac <= 0.03


@pytest.mark.parametrize("conf, neighbours, edge", [(1.0, 8, True), (0.0, 0, False), (0.6, 4, True), (0.4, 4, False)])
def test_binarize_examples(conf, neighbours, edge):
    p = np.zeros((3, 3))
    ring = [(0, 0), (0, 1), (0, 2), (1, 2), (2, 2), (2, 1), (2, 0), (1, 0)]
    for r, c in ring[:neighbours]:
        p[r, c] = 0.9
    c_map = np.zeros((3, 3))
    c_map[1, 1] = conf
    assert em.binarize(p, c_map)[1, 1] == edge


def test_border_density_uses_available_neighbours():
    p = np.ones((3, 3))
    d = em.neighbour_density(p)
    assert d[0, 0] == 1.0 and d[1, 1] == 1.0


def test_noiseless_step_marks_the_two_bordering_columns():
    e = em.edge_map(step_image(64, col=32), NOISE).edges
    assert e[:, 31:33].all()
    assert not e[:, :31].any() and not e[:, 33:].any()


@settings(max_examples=30, deadline=None)
@given(images)
def test_maps_are_probabilities(img):
    m = em.edge_map(img, em.NoiseModel(0.05))
    for arr in (m.p_zc, m.confidence):
        assert arr.shape == img.shape
        assert arr.min() >= 0.0 and arr.max() <= 1.0
    assert m.edges.dtype == bool


@given(st.floats(0.0, 1.0), st.integers(4, 20), st.integers(4, 20))
def test_constant_image_has_no_edges(v, h, w):
    assert not em.edge_map(np.full((h, w), v), NOISE).edges.any()


@settings(max_examples=25, deadline=None)
@given(images, st.floats(-0.5, 0.5))
def test_offset_invariance(img, offset):
    # offsets that are exact in binary keep derivatives bit-identical
    offset = round(offset * 64) / 64
    a = em.edge_map(img, em.NoiseModel(0.05)).edges
    b = em.edge_map(img + offset, em.NoiseModel(0.05)).edges
    assert np.array_equal(a, b)


@settings(max_examples=25, deadline=None)
@given(images)
def test_mirror_symmetry(img):
    nm = em.NoiseModel(0.05)
    a = em.edge_map(img, nm)
    b = em.edge_map(img[:, ::-1], nm)
    np.testing.assert_allclose(a.p_zc[:, ::-1], b.p_zc, atol=1e-9)
    assert np.array_equal(a.edges[:, ::-1], b.edges)


def test_deterministic():
    img = np.random.default_rng(5).random((20, 20))
    a, b = em.edge_map(img, NOISE), em.edge_map(img.copy(), NOISE)
    for x, y in zip((a.p_zc, a.confidence, a.edges), (b.p_zc, b.confidence, b.edges)):
        assert np.array_equal(x, y)
