"""UV correspondence invariants: identity transport, bilinear hull, serialization."""

import numpy as np
import pytest
import torch
from hypothesis import given, settings
from hypothesis import strategies as st

from style_vton.core import BinaryMask, ImageTensor
from style_vton.texture_map import (
    UVCorrespondence,
    bilinear_sample_torch,
    identity_correspondence,
    interp_coord_field,
    mask_bbox,
    sample_texture,
)


def random_garment(rng, h=16, w=12):
    return ImageTensor(rng.uniform(0, 1, size=(h, w, 3)).astype(np.float32))


class TestIdentityTransport:
    def test_reproduces_garment_bit_near_exactly(self):
        rng = np.random.default_rng(0)
        garment = random_garment(rng)
        mask = BinaryMask(np.ones((16, 12), dtype=np.uint8))
        corr = identity_correspondence(16, 12, grid=(8, 8))
        out = sample_texture(corr, garment, mask)
        mae = np.abs(out.data - garment.data).mean()
        assert mae < 1e-6

    def test_holds_for_coarse_and_fine_grids(self):
        rng = np.random.default_rng(1)
        garment = random_garment(rng, 20, 15)
        mask = BinaryMask(np.ones((20, 15), dtype=np.uint8))
        for grid in [(2, 2), (5, 3), (32, 32)]:
            corr = identity_correspondence(20, 15, grid=grid)
            out = sample_texture(corr, garment, mask)
            assert np.abs(out.data - garment.data).mean() < 1e-6, grid

    def test_footprint_restricts_output(self):
        rng = np.random.default_rng(2)
        garment = random_garment(rng)
        mask = BinaryMask(np.ones((16, 12), dtype=np.uint8))
        fp = np.zeros((16, 12), dtype=np.uint8)
        fp[4:10, 3:9] = 1
        corr = identity_correspondence(16, 12, grid=(8, 8), footprint=BinaryMask(fp))
        out = sample_texture(corr, garment, mask)
        inside = fp.astype(bool)
        assert np.abs(out.data[inside] - garment.data[inside]).mean() < 1e-6
        assert np.abs(out.data[~inside]).max() == 0.0

    def test_garment_mask_zeroes_unmasked_source(self):
        rng = np.random.default_rng(3)
        garment = random_garment(rng)
        gm = np.zeros((16, 12), dtype=np.uint8)
        gm[:8] = 1  # only the top half of the garment exists
        corr = identity_correspondence(16, 12, grid=(16, 12))
        out = sample_texture(corr, garment, BinaryMask(gm))
        assert np.abs(out.data[:8] - garment.data[:8]).mean() < 1e-6
        assert out.data[9:].max() == 0.0

    def test_no_valid_texels_warns_and_zeroes(self):
        rng = np.random.default_rng(4)
        garment = random_garment(rng)
        corr = identity_correspondence(16, 12, grid=(4, 4))
        corr = UVCorrespondence(
            coords=corr.coords,
            validity=np.zeros((4, 4), dtype=np.uint8),
            bbox=corr.bbox,
            target_shape=corr.target_shape,
        )
        with pytest.warns(UserWarning, match="no valid texel"):
            out = sample_texture(corr, garment, BinaryMask(np.ones((16, 12), dtype=np.uint8)))
        assert out.data.max() == 0.0


class TestBilinearSampling:
    def test_convex_hull_property_thousand_texels(self):
        rng = np.random.default_rng(5)
        image = torch.tensor(rng.uniform(0, 1, size=(3, 9, 7)), dtype=torch.float64)
        ys = rng.uniform(0, 8, size=1000)
        xs = rng.uniform(0, 6, size=1000)
        coords = torch.tensor(np.stack([ys, xs], axis=-1), dtype=torch.float64)
        samples = bilinear_sample_torch(image, coords)
        y0 = np.clip(np.floor(ys).astype(int), 0, 7)
        x0 = np.clip(np.floor(xs).astype(int), 0, 5)
        img = image.numpy()
        for i in range(1000):
            corners = img[:, y0[i] : y0[i] + 2, x0[i] : x0[i] + 2].reshape(3, 4)
            lo = corners.min(axis=1) - 1e-12
            hi = corners.max(axis=1) + 1e-12
            s = samples[i].numpy()
            assert (s >= lo).all() and (s <= hi).all()

    def test_integer_coords_hit_pixels_exactly(self):
        rng = np.random.default_rng(6)
        image = torch.tensor(rng.uniform(0, 1, size=(2, 5, 4)), dtype=torch.float64)
        coords = torch.tensor([[0.0, 0.0], [4.0, 3.0], [2.0, 1.0]], dtype=torch.float64)
        out = bilinear_sample_torch(image, coords)
        assert torch.allclose(out[0], image[:, 0, 0])
        assert torch.allclose(out[1], image[:, 4, 3])
        assert torch.allclose(out[2], image[:, 2, 1])

    def test_out_of_range_coords_clamp_to_border(self):
        image = torch.arange(12, dtype=torch.float64).reshape(1, 3, 4)
        coords = torch.tensor([[-5.0, -5.0], [99.0, 99.0]], dtype=torch.float64)
        out = bilinear_sample_torch(image, coords)
        assert out[0, 0].item() == image[0, 0, 0].item()
        assert out[1, 0].item() == image[0, 2, 3].item()

    @given(st.floats(0.0, 3.0), st.floats(0.0, 2.0))
    @settings(max_examples=50, deadline=None)
    def test_linear_images_interpolate_exactly(self, y, x):
        # a plane a*y + b*x + c is reproduced exactly by bilinear interpolation
        a, b, c = 0.25, -0.5, 1.0
        yy, xx = np.meshgrid(np.arange(4.0), np.arange(3.0), indexing="ij")
        image = torch.tensor((a * yy + b * xx + c)[None], dtype=torch.float64)
        out = bilinear_sample_torch(image, torch.tensor([[y, x]], dtype=torch.float64))
        assert abs(out[0, 0].item() - (a * y + b * x + c)) < 1e-9


class TestCoordFieldInterpolation:
    def test_exact_at_texel_centers(self):
        rng = np.random.default_rng(7)
        coords = torch.tensor(rng.uniform(0, 10, size=(4, 5, 2)), dtype=torch.float64)
        bbox = (2.0, 1.0, 14.0, 9.0)
        ys = np.linspace(2.0, 14.0, 4)
        xs = np.linspace(1.0, 9.0, 5)
        pts = torch.tensor(
            [[y, x] for y in ys for x in xs], dtype=torch.float64
        )
        out = interp_coord_field(coords, bbox, pts)
        assert torch.allclose(out, coords.reshape(-1, 2), atol=1e-9)

    def test_linear_field_is_reproduced_everywhere(self):
        k, l = 5, 4
        bbox = (0.0, 0.0, 12.0, 9.0)
        ys = np.linspace(0, 12, k)
        xs = np.linspace(0, 9, l)
        field = np.stack(np.meshgrid(2 * ys + 1, 0.5 * xs - 3, indexing="ij"), axis=-1)
        coords = torch.tensor(field, dtype=torch.float64)
        rng = np.random.default_rng(8)
        pts_np = rng.uniform([0, 0], [12, 9], size=(64, 2))
        out = interp_coord_field(coords, bbox, torch.tensor(pts_np))
        want = np.stack([2 * pts_np[:, 0] + 1, 0.5 * pts_np[:, 1] - 3], axis=-1)
        assert np.abs(out.numpy() - want).max() < 1e-9


class TestSerialization:
    def test_round_trip_is_exact(self):
        rng = np.random.default_rng(9)
        corr = UVCorrespondence(
            coords=rng.uniform(0, 30, size=(6, 5, 2)),
            validity=rng.integers(0, 2, size=(6, 5)).astype(np.uint8),
            bbox=(1.5, 2.5, 20.0, 17.25),
            target_shape=(32, 24),
        )
        back = UVCorrespondence.from_bytes(corr.to_bytes())
        assert np.array_equal(back.coords, corr.coords)
        assert np.array_equal(back.validity, corr.validity)
        assert back.bbox == corr.bbox
        assert back.target_shape == corr.target_shape

    def test_garbage_blob_rejected(self):
        with pytest.raises(ValueError):
            UVCorrespondence.from_bytes(b"not a correspondence")


class TestMaskBBox:
    def test_empty_mask_has_no_bbox(self):
        assert mask_bbox(np.zeros((5, 5), dtype=np.uint8)) is None

    def test_single_pixel(self):
        m = np.zeros((6, 6), dtype=np.uint8)
        m[2, 4] = 1
        assert mask_bbox(m) == (2.0, 4.0, 2.0, 4.0)

    def test_extents(self):
        m = np.zeros((8, 8), dtype=np.uint8)
        m[1:5, 2:7] = 1
        assert mask_bbox(m) == (1.0, 2.0, 4.0, 6.0)
