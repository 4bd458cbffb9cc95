import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from cctext import features as ft
from cctext.regions import Region

BANK = ft.filter_bank()


def test_unmodulated_kernel_is_real_symmetric_gaussian():
    h = ft.gabor_response(1.0, 1.0, 0.0, 0.0)
    assert np.all(h.imag == 0)
    np.testing.assert_allclose(h.real, h.real.T)
    np.testing.assert_allclose(h.real, h.real[::-1, ::-1])
    assert h[1, 1] == 1.0
    assert h[1, 2].real == pytest.approx(np.exp(-1.0))


def test_hand_evaluated_sample():
    h = ft.gabor_response(1.0, 1.0, 0.5, 0.0)
    # x = 1, y = 0: exp(-1) * exp(-j*pi)
    assert h[1, 2].real == pytest.approx(-0.36787944117144233, abs=1e-12)
    assert h[1, 2].imag == pytest.approx(0.0, abs=1e-12)


def test_kernels_are_dc_free_and_unit_norm():
    for k in BANK:
        assert abs(k.values.sum()) <= 1e-9
        assert np.sum(np.abs(k.values) ** 2) == pytest.approx(1.0)
        mag = ft.filter_magnitude(np.full((9, 9), 0.7), k)
        assert mag.max() <= 1e-9


def test_bank_layout():
    assert len(BANK) == 4
    assert [(k.u, k.v) for k in BANK][0] == (0.25, 0.0)
    np.testing.assert_allclose(BANK[0].values, BANK[2].values.T, atol=1e-15)


def grating(angle_deg, n=32, freq=0.25):
    y, x = np.mgrid[0:n, 0:n].astype(float)
    t = np.deg2rad(angle_deg)
    return 0.5 + 0.5 * np.cos(2 * np.pi * freq * (x * np.cos(t) + y * np.sin(t)))


def test_matched_grating_beats_orthogonal():
    for i, k in enumerate(BANK):
        angle = 45.0 * i
        matched = ft.filter_magnitude(grating(angle), k)[8:-8, 8:-8].mean()
        ortho = ft.filter_magnitude(grating(angle + 90.0), k)[8:-8, 8:-8].mean()
        assert matched >= 2.0 * ortho


def test_constant_region_gives_zero_vector():
    v = ft.extract_features(np.full((30, 40), 0.4), (3, 4, 25, 19), BANK)
    assert v.shape == (ft.FEATURE_LEN,)
    assert not v.any()


def test_twenty_square_patch_skips_resampling():
    img = np.random.default_rng(0).random((30, 30))
    box = (5, 6, 24, 25)
    patch = img[6:26, 5:25]
    direct = np.concatenate([ft.filter_magnitude(patch, k).ravel() for k in BANK])
    np.testing.assert_allclose(ft.extract_features(img, box, BANK), ft.standardize(direct), atol=1e-12)


def test_region_and_bbox_inputs_agree():
    img = np.random.default_rng(1).random((30, 30))
    r = Region(1, (2, 3, 17, 12), 10, 1, (9.0, 7.0))
    assert np.array_equal(ft.extract_features(img, r, BANK), ft.extract_features(img, r.bbox, BANK))


def test_bad_boxes_raise():
    img = np.zeros((10, 10))
    with pytest.raises(ValueError):
        ft.extract_features(img, (5, 5, 4, 8), BANK)
    with pytest.raises(ValueError):
        ft.extract_features(img, (0, 0, 10, 5), BANK)


@settings(max_examples=30, deadline=None)
@given(arrays(np.float64, (16, 16), elements=st.floats(0, 1)), st.integers(0, 10), st.integers(0, 10))
def test_translation_covariance(patch, dx, dy):
    a = np.zeros((30, 30))
    a[2:18, 3:19] = patch
    b = np.zeros((30, 30))
    b[2 + dy:18 + dy, 3 + dx:19 + dx] = patch
    va = ft.extract_features(a, (3, 2, 18, 17), BANK)
    vb = ft.extract_features(b, (3 + dx, 2 + dy, 18 + dx, 17 + dy), BANK)
    np.testing.assert_allclose(va, vb, atol=1e-12)


# --- PCA -----------------------------------------------------------------

def random_samples(n=60, d=ft.FEATURE_LEN, seed=0):
    rng = np.random.default_rng(seed)
    return rng.normal(size=(n, 8)) @ rng.normal(size=(8, d)) + 0.01 * rng.normal(size=(n, d))


def test_rank_one_data():
    rng = np.random.default_rng(2)
    direction = rng.normal(size=ft.FEATURE_LEN)
    x = rng.normal(size=(30, 1)) * direction + 3.0
    model = ft.pca_fit(x)
    assert model.explained_ratio[0] == pytest.approx(1.0, abs=1e-9)


def test_correlated_pair_closed_form():
    rng = np.random.default_rng(3)
    z = rng.normal(size=(50, 2))
    z -= z.mean(axis=0)
    # whiten to an exact identity sample covariance, then colour it
    u, s, vt = np.linalg.svd(z, full_matrices=False)
    z = u * np.sqrt(z.shape[0] - 1)
    cov = np.array([[2.0, 1.0], [1.0, 2.0]])
    pts = z @ np.linalg.cholesky(cov).T
    x = np.zeros((50, ft.FEATURE_LEN))
    x[:, :2] = pts
    model = ft.pca_fit(x, k=2)
    # eigenpairs of [[2,1],[1,2]]: 3 along (1,1)/sqrt2, 1 along (1,-1)/sqrt2
    np.testing.assert_allclose(model.explained_variance, [3.0, 1.0], atol=1e-9)
    np.testing.assert_allclose(model.basis[0, :2], [2 ** -0.5, 2 ** -0.5], atol=1e-9)
    assert np.abs(model.basis[:, 2:]).max() < 1e-12


def test_basis_orthonormal_and_variances_match():
    x = random_samples()
    model = ft.pca_fit(x)
    np.testing.assert_allclose(model.basis @ model.basis.T, np.eye(20), atol=1e-6)
    assert np.all(np.diff(model.explained_variance) <= 0)
    proj = ft.pca_project(model, x)
    np.testing.assert_allclose(proj.var(axis=0, ddof=1), model.explained_variance, rtol=1e-6)


def test_sign_convention():
    model = ft.pca_fit(random_samples(seed=4))
    for row in model.basis:
        first = row[np.flatnonzero(np.abs(row) > 1e-12)[0]]
        assert first > 0


def test_projection_examples():
    model = ft.pca_fit(random_samples(seed=5))
    np.testing.assert_allclose(ft.pca_project(model, model.mean), 0.0, atol=1e-12)
    e0 = ft.pca_project(model, model.mean + model.basis[0])
    np.testing.assert_allclose(e0, np.eye(20)[0], atol=1e-9)
    with pytest.raises(ValueError):
        ft.pca_project(model, np.zeros(10))


def test_reconstruction_is_the_closest_point_in_the_span():
    model = ft.pca_fit(random_samples(seed=6))
    rng = np.random.default_rng(7)
    for _ in range(20):
        v = rng.normal(size=ft.FEATURE_LEN)
        best = np.linalg.norm(ft.pca_reconstruct(model, ft.pca_project(model, v)) - v)
        for _ in range(10):
            other = model.mean + rng.normal(size=20) @ model.basis
            assert best <= np.linalg.norm(other - v) + 1e-12


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 1000))
def test_projection_energy_bound(seed):
    model = ft.pca_fit(random_samples(seed=8))
    v = np.random.default_rng(seed).normal(size=ft.FEATURE_LEN) * 5
    assert np.linalg.norm(ft.pca_project(model, v)) <= np.linalg.norm(v - model.mean) + 1e-9


def test_fit_errors():
    with pytest.raises(ValueError):
        ft.pca_fit(np.random.default_rng(0).normal(size=(20, 50)), k=20)
    with pytest.raises(ValueError):
        ft.pca_fit(np.ones((30, 50)), k=5)


def test_model_dict_roundtrip():
    model = ft.pca_fit(random_samples(seed=9))
    back = ft.PcaModel.from_dict(model.to_dict())
    assert np.array_equal(back.basis, model.basis) and np.array_equal(back.mean, model.mean)
