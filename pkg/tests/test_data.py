"""Synthetic data generation and dataset IO round trips."""

import numpy as np
import pytest

from style_vton.core import (
    LABELS,
    BinaryMask,
    ImageTensor,
    PoseHeatmap,
    SegmentationMap,
    make_gaussian_heatmap,
    mask_iou,
)
from style_vton.data_synth import TEXTURE_KINDS, generate_synthetic_dataset, generate_synthetic_pair
from style_vton.dataset_io import (
    image_to_png_bytes,
    load_dataset,
    load_pair,
    load_parsing,
    load_pose,
    parsing_from_png_bytes,
    png_bytes_to_image,
    pose_from_keypoints,
    save_pair,
    save_parsing,
    save_pose,
)
from style_vton.person import NEUTRAL_FILL, build_person_representation

H, W = 64, 48


class TestGenerator:
    def test_same_seed_reproduces_bitwise(self):
        a = generate_synthetic_pair(7, H, W)
        b = generate_synthetic_pair(7, H, W)
        assert np.array_equal(a.person.data, b.person.data)
        assert np.array_equal(a.garment.data, b.garment.data)
        assert np.array_equal(a.parsing_gt.labels, b.parsing_gt.labels)
        assert np.array_equal(a.pose.data, b.pose.data)

    def test_different_seeds_differ(self):
        a = generate_synthetic_pair(0, H, W)
        b = generate_synthetic_pair(1, H, W)
        assert not np.array_equal(a.person.data, b.person.data)

    def test_pairs_are_self_reconstructing(self):
        pair = generate_synthetic_pair(3, H, W)
        assert np.array_equal(pair.tryon_gt.data, pair.person.data)

    def test_generator_extras_present(self):
        pair = generate_synthetic_pair(11, H, W)
        assert pair.garment_warp is not None
        assert pair.texture_kind in TEXTURE_KINDS
        assert pair.seed == 11

    def test_parsing_covers_expected_regions(self):
        pair = generate_synthetic_pair(5, H, W)
        present = {LABELS[i] for i in np.unique(pair.parsing_gt.labels)}
        assert {"background", "face", "hair", "torso-garment", "arms"} <= present

    def test_garment_mask_matches_nonzero_garment(self):
        pair = generate_synthetic_pair(9, H, W)
        assert pair.garment_mask.data.sum() > 0
        outside = pair.garment.data[pair.garment_mask.data == 0]
        assert np.abs(outside).max() == 0.0

    def test_warp_maps_torso_into_garment_bbox(self):
        pair = generate_synthetic_pair(13, H, W)
        torso = pair.parsing_gt.region_mask("torso-garment")
        ys, xs = np.nonzero(torso.data)
        pts = np.stack([ys, xs], axis=-1).astype(np.float64)
        mapped = pair.garment_warp.apply(pts)
        assert mapped[:, 0].min() >= -1.0 and mapped[:, 0].max() <= H
        assert mapped[:, 1].min() >= -1.0 and mapped[:, 1].max() <= W

    def test_dataset_helper_matches_single_calls(self):
        pairs = generate_synthetic_dataset([2, 4], H, W)
        single = generate_synthetic_pair(4, H, W)
        assert np.array_equal(pairs[1].person.data, single.person.data)

    def test_too_small_canvas_rejected(self):
        with pytest.raises(ValueError):
            generate_synthetic_pair(0, 8, 8)


class TestPairIO:
    def test_round_trip_quantizes_once(self, tmp_path):
        pair = generate_synthetic_pair(21, H, W)
        save_pair(tmp_path / pair.pair_id, pair)  # directory name is the id
        back = load_pair(tmp_path / pair.pair_id)
        # 8-bit png quantization: loaded values within half a step
        assert np.abs(back.person.data - pair.person.data).max() <= 0.5 / 255 + 1e-6
        assert np.abs(back.garment.data - pair.garment.data).max() <= 0.5 / 255 + 1e-6
        assert np.array_equal(back.parsing_gt.labels, pair.parsing_gt.labels)
        assert np.array_equal(back.garment_mask.data, pair.garment_mask.data)
        assert back.pair_id == pair.pair_id

    def test_loaded_pair_is_self_reconstructing(self, tmp_path):
        pair = generate_synthetic_pair(22, H, W)
        save_pair(tmp_path / "p", pair)
        back = load_pair(tmp_path / "p")
        assert np.array_equal(back.tryon_gt.data, back.person.data)

    def test_generator_extras_do_not_persist(self, tmp_path):
        pair = generate_synthetic_pair(23, H, W)
        save_pair(tmp_path / "p", pair)
        back = load_pair(tmp_path / "p")
        assert back.garment_warp is None
        assert back.texture_kind is None
        assert back.seed is None

    def test_pose_peaks_survive_round_trip(self, tmp_path):
        pair = generate_synthetic_pair(24, H, W)
        save_pair(tmp_path / "p", pair)
        back = load_pair(tmp_path / "p")
        assert back.pose.data.shape == pair.pose.data.shape
        for k in range(pair.pose.keypoints):
            if pair.pose.data[k].max() == 0:
                assert back.pose.data[k].max() == 0
                continue
            want = np.unravel_index(int(pair.pose.data[k].argmax()), (H, W))
            got = np.unravel_index(int(back.pose.data[k].argmax()), (H, W))
            assert want == got

    def test_dataset_round_trip_preserves_order(self, tmp_path):
        pairs = generate_synthetic_dataset([31, 30, 29], H, W)
        from style_vton.dataset_io import save_dataset

        save_dataset(tmp_path, pairs)
        back = load_dataset(tmp_path)
        assert [p.pair_id for p in back] == sorted(p.pair_id for p in pairs)

    def test_second_save_load_is_idempotent(self, tmp_path):
        pair = generate_synthetic_pair(25, H, W)
        save_pair(tmp_path / "a", pair)
        once = load_pair(tmp_path / "a")
        save_pair(tmp_path / "b", once)
        twice = load_pair(tmp_path / "b")
        assert np.array_equal(once.person.data, twice.person.data)
        assert np.array_equal(once.garment.data, twice.garment.data)


class TestImageBytes:
    def test_png_round_trip(self):
        rng = np.random.default_rng(0)
        img = ImageTensor(rng.uniform(0, 1, size=(20, 16, 3)).astype(np.float32))
        back = png_bytes_to_image(image_to_png_bytes(img))
        assert back.data.shape == img.data.shape
        assert np.abs(back.data - img.data).max() <= 0.5 / 255 + 1e-6

    def test_parsing_palette_round_trip(self, tmp_path):
        labels = np.random.default_rng(1).integers(0, len(LABELS), size=(16, 16))
        parsing = SegmentationMap(labels.astype(np.int64))
        save_parsing(tmp_path / "m.png", parsing)
        back = load_parsing(tmp_path / "m.png")
        assert np.array_equal(back.labels, parsing.labels)

    def test_parsing_upload_decoding(self, tmp_path):
        labels = np.zeros((16, 16), dtype=np.int64)
        labels[4:9, 5:10] = 4
        save_parsing(tmp_path / "m.png", SegmentationMap(labels))
        decoded = parsing_from_png_bytes((tmp_path / "m.png").read_bytes())
        assert np.array_equal(decoded.labels, labels)

    def test_parsing_upload_must_be_palette_indexed(self):
        rgb = ImageTensor(np.zeros((16, 16, 3), dtype=np.float32))
        with pytest.raises(ValueError, match="palette"):
            parsing_from_png_bytes(image_to_png_bytes(rgb))


class TestPose:
    def test_heatmap_peaks_at_one(self):
        pose = make_gaussian_heatmap([(3.0, 5.0), None], 12, 10, sigma=1.5)
        assert pose.data[0, 5, 3] == 1.0
        assert pose.data[0].max() == 1.0
        assert pose.data[1].max() == 0.0

    def test_heatmap_decays_from_peak(self):
        pose = make_gaussian_heatmap([(4.0, 4.0)], 12, 12, sigma=1.0)
        assert pose.data[0, 4, 4] > pose.data[0, 4, 6] > pose.data[0, 4, 8]

    def test_out_of_image_keypoint_rejected(self):
        with pytest.raises(ValueError):
            make_gaussian_heatmap([(20.0, 3.0)], 12, 10, sigma=1.0)

    def test_keypoint_upload_helper(self):
        pose = pose_from_keypoints([[3, 5], None], 12, 10)
        assert pose.data.shape[0] == 2
        assert pose.data[0, 5, 3] == 1.0

    def test_save_load_preserves_none_channels(self, tmp_path):
        pose = make_gaussian_heatmap([(2.0, 2.0), None, (5.0, 7.0)], 12, 10, sigma=1.2)
        save_pose(tmp_path / "pose.json", pose)
        back = load_pose(tmp_path / "pose.json", 12, 10, sigma=1.2)
        assert np.allclose(back.data, pose.data, atol=1e-6)


class TestPersonRepresentation:
    def test_garment_regions_are_fused_and_filled(self):
        pair = generate_synthetic_pair(40, H, W)
        rep = build_person_representation(pair.person, pair.parsing_gt, pair.pose)
        vocab = rep.fuzzy_parsing.label_vocabulary
        fused_ids = [vocab.index("torso-garment"), vocab.index("arms")]
        assert not np.isin(rep.fuzzy_parsing.labels, fused_ids).any()

        torso = pair.parsing_gt.region_mask("torso-garment").data.astype(bool)
        assert np.all(rep.identity_image.data[torso] == NEUTRAL_FILL)

    def test_preserved_regions_copied_through(self):
        pair = generate_synthetic_pair(41, H, W)
        rep = build_person_representation(pair.person, pair.parsing_gt, pair.pose)
        face = pair.parsing_gt.region_mask("face").data.astype(bool)
        assert np.array_equal(rep.identity_image.data[face], pair.person.data[face])

    def test_shape_mismatch_rejected(self):
        pair = generate_synthetic_pair(42, H, W)
        small = generate_synthetic_pair(42, 32, 32)
        with pytest.raises(ValueError):
            build_person_representation(pair.person, small.parsing_gt, pair.pose)


class TestMaskIoU:
    def test_disjoint_masks_score_zero(self):
        a = np.zeros((6, 6), dtype=np.uint8)
        b = np.zeros((6, 6), dtype=np.uint8)
        a[:2] = 1
        b[4:] = 1
        assert mask_iou(BinaryMask(a), BinaryMask(b)) == 0.0

    def test_identical_masks_score_one(self):
        m = np.random.default_rng(2).integers(0, 2, size=(6, 6)).astype(np.uint8)
        assert mask_iou(BinaryMask(m), BinaryMask(m)) == 1.0

    def test_both_empty_score_one(self):
        z = BinaryMask(np.zeros((4, 4), dtype=np.uint8))
        assert mask_iou(z, z) == 1.0
