"""Feature values against the naive reference implementation, plus
invariance properties (translation, rotation, intensity shift)."""
import numpy as np
import pytest

from fetalfuse.radiomics import (
    canonical_feature_names,
    discretize,
    extract_all,
    glcm,
    glcm_features,
)
from fetalfuse.types import MaskedImage

from reference_radiomics import naive_firstorder, naive_texture_vector


def make_img(pixels, mask=None, s=1.0):
    pixels = np.asarray(pixels, dtype=np.uint8)
    if mask is None:
        mask = np.ones_like(pixels)
    return MaskedImage("t", pixels, np.asarray(mask, dtype=np.uint8), s)


def assert_close(got, ref, name, rel=1e-6, abs_tol=1e-9):
    assert got == pytest.approx(ref, rel=rel, abs=abs_tol), \
        f"{name}: got {got}, reference {ref}"


def checkerboard(n=4):
    px = np.indices((n, n)).sum(axis=0) % 2 * 60
    return px.astype(np.uint8)


class TestGlcmFeatures:
    def test_constant_roi_degenerate_values(self):
        f = glcm_features(glcm(discretize(make_img(np.full((4, 4), 77)))))
        assert f["Contrast"] == 0
        assert f["MaximumProbability"] == 1
        assert f["JointEntropy"] == pytest.approx(0, abs=1e-9)
        assert f["Correlation"] == 1  # zero-variance convention

    def test_checkerboard_matches_reference(self):
        img = make_img(checkerboard())
        f = glcm_features(glcm(discretize(img)))
        ref = naive_texture_vector(img.pixels, img.mask)
        for k, v in f.items():
            assert_close(v, ref[f"glcm.{k}"], f"glcm.{k}")


class TestReferenceParity:
    @pytest.mark.parametrize("seed", range(8))
    def test_texture_parity_random(self, seed):
        rng = np.random.default_rng(100 + seed)
        px = rng.integers(0, 256, (12, 12)).astype(np.uint8)
        mask = (rng.random((12, 12)) < 0.8).astype(np.uint8)
        mask[5, 5] = 1
        img = make_img(px, mask, s=0.3)
        vec = extract_all(img)
        ref = naive_texture_vector(px, mask)
        ref.update({f"firstorder.{k}": v
                    for k, v in naive_firstorder(px, mask, 0.3).items()})
        for name, val in zip(vec.feature_names, vec.values):
            if name.startswith("shape2d."):
                continue  # shape has analytic tests of its own
            assert_close(val, ref[name], name, rel=1e-6)


class TestInvariances:
    def _texture_part(self, img):
        vec = extract_all(img)
        return {n: v for n, v in zip(vec.feature_names, vec.values)
                if not n.startswith("shape2d.")}

    def test_translation_leaves_all_features_unchanged(self):
        rng = np.random.default_rng(3)
        px = rng.integers(0, 256, (10, 10)).astype(np.uint8)
        mask = np.zeros((10, 10), np.uint8)
        mask[2:7, 2:7] = 1
        canvas_px = np.zeros((20, 20), np.uint8)
        canvas_mask = np.zeros((20, 20), np.uint8)
        canvas_px[:10, :10] = px
        canvas_mask[:10, :10] = mask
        shifted_px = np.roll(np.roll(canvas_px, 6, axis=0), 4, axis=1)
        shifted_mask = np.roll(np.roll(canvas_mask, 6, axis=0), 4, axis=1)
        v1 = extract_all(make_img(canvas_px, canvas_mask))
        v2 = extract_all(make_img(shifted_px, shifted_mask))
        np.testing.assert_allclose(v1.values, v2.values, rtol=1e-12)

    def test_rotation_90_leaves_texture_unchanged(self):
        rng = np.random.default_rng(4)
        px = rng.integers(0, 256, (9, 9)).astype(np.uint8)
        mask = (rng.random((9, 9)) < 0.7).astype(np.uint8)
        mask[4, 4] = 1
        f1 = self._texture_part(make_img(px, mask))
        f2 = self._texture_part(make_img(np.rot90(px).copy(),
                                         np.rot90(mask).copy()))
        for k in f1:
            assert f1[k] == pytest.approx(f2[k], rel=1e-9, abs=1e-9), k

    def test_intensity_shift(self):
        rng = np.random.default_rng(5)
        px = rng.integers(0, 150, (8, 8)).astype(np.uint8)
        v1 = extract_all(make_img(px))
        v2 = extract_all(make_img(px + 50))
        f1 = dict(zip(v1.feature_names, v1.values))
        f2 = dict(zip(v2.feature_names, v2.values))
        for cls in ("glcm.", "glrlm.", "glszm.", "gldm."):
            for k in f1:
                if k.startswith(cls):
                    assert f1[k] == pytest.approx(f2[k], rel=1e-9, abs=1e-12), k
        assert f2["firstorder.Mean"] - f1["firstorder.Mean"] == pytest.approx(50)
        assert f1["firstorder.Variance"] == pytest.approx(
            f2["firstorder.Variance"], rel=1e-9)
        assert f1["firstorder.Entropy"] == pytest.approx(
            f2["firstorder.Entropy"], rel=1e-9, abs=1e-12)

    @pytest.mark.parametrize("seed", range(15))
    def test_fuzz_no_nan(self, seed):
        rng = np.random.default_rng(1000 + seed)
        h, w = rng.integers(1, 16, 2)
        px = rng.integers(0, 256, (h, w)).astype(np.uint8)
        mask = (rng.random((h, w)) < rng.uniform(0.05, 0.95)).astype(np.uint8)
        if mask.sum() == 0:
            mask[rng.integers(h), rng.integers(w)] = 1
        vec = extract_all(make_img(px, mask))
        assert np.all(np.isfinite(vec.values))
        assert len(vec.values) == 97


class TestCanonicalOrdering:
    def test_count_and_prefixes(self):
        names = canonical_feature_names()
        assert len(names) == 97
        counts = {}
        for n in names:
            counts[n.split(".")[0]] = counts.get(n.split(".")[0], 0) + 1
        assert counts == {"shape2d": 9, "firstorder": 18, "glcm": 24,
                          "glrlm": 16, "glszm": 16, "gldm": 14}

    def test_disable_list(self):
        names = canonical_feature_names(("glcm.SumAverage", "gldm.GrayLevelVariance"))
        assert len(names) == 95
        assert "glcm.SumAverage" not in names

    def test_constant_square_entropies_zero(self):
        vec = extract_all(make_img(np.full((6, 6), 120)))
        f = dict(zip(vec.feature_names, vec.values))
        assert f["glcm.JointEntropy"] == pytest.approx(0, abs=1e-9)
        assert f["glszm.ZoneEntropy"] == pytest.approx(0, abs=1e-9)
        assert f["firstorder.Entropy"] == pytest.approx(0, abs=1e-9)
        assert f["shape2d.Elongation"] == pytest.approx(1.0)
