"""Run configuration: stage groups, overrides, hashing, validation."""

import json

import pytest

from style_vton.config import (
    STAGE_GROUPS,
    STAGE_NAMES,
    RunConfig,
    StageConfig,
    config_from_dict,
    config_from_json,
    config_from_overrides,
    config_hash,
    get_profile,
    paper_profile,
    resolve_stages,
    toy_profile,
)


class TestStageResolution:
    def test_numbered_groups(self):
        assert resolve_stages("1") == ("parsing",)
        assert resolve_stages("2") == ("contour", "correspondence", "synthesizer")
        assert resolve_stages("3") == ("vae", "texture", "classifier")
        assert resolve_stages("all") == STAGE_NAMES

    def test_fine_grained_names_pass_through(self):
        for name in STAGE_NAMES:
            assert resolve_stages(name) == (name,)

    def test_unknown_token_rejected(self):
        with pytest.raises(ValueError, match="unknown stage"):
            resolve_stages("4")

    def test_groups_cover_all_stages_once(self):
        flat = [s for g in ("1", "2", "3") for s in STAGE_GROUPS[g]]
        assert tuple(flat) == STAGE_NAMES


class TestProfiles:
    def test_toy_profile_shape(self):
        run = toy_profile(seed=0)
        assert (run.image_height, run.image_width) == (64, 48)
        assert run.num_train_pairs + run.num_eval_pairs == 64
        assert set(run.stages) == set(STAGE_NAMES)

    def test_paper_profile_has_larger_canvas(self):
        run = paper_profile(seed=0)
        assert run.image_height > 64 and run.image_width > 48

    def test_get_profile_dispatch(self):
        assert get_profile("toy", seed=3).seed == 3
        assert get_profile("paper", seed=4).seed == 4
        with pytest.raises(ValueError):
            get_profile("huge", seed=0)

    def test_profiles_validate(self):
        toy_profile(seed=0)
        paper_profile(seed=0)


class TestValidation:
    def test_negative_epochs_rejected(self):
        with pytest.raises(ValueError, match="epochs"):
            StageConfig(epochs=-1)

    def test_nonpositive_lr_rejected(self):
        with pytest.raises(ValueError, match="lr"):
            StageConfig(epochs=1, lr=0.0)

    def test_negative_stage_l1_weight_rejected(self):
        with pytest.raises(ValueError, match="lambda_l1"):
            StageConfig(epochs=1, lambda_l1=-0.5)

    def test_tiny_grid_rejected(self):
        run = toy_profile(seed=0)
        with pytest.raises(ValueError, match="grid"):
            config_from_dict({**run.to_dict(), "grid": 1})


class TestOverrides:
    def test_nested_stage_override(self):
        run = config_from_overrides({"profile": "toy", "seed": 0, "stages": {"parsing": {"epochs": 3}}})
        assert run.stages["parsing"].epochs == 3
        # untouched fields keep profile values
        assert run.stages["contour"].epochs == toy_profile(0).stages["contour"].epochs

    def test_run_field_override(self):
        run = config_from_overrides({"num_train_pairs": 8, "num_eval_pairs": 2})
        assert run.num_train_pairs == 8 and run.num_eval_pairs == 2

    def test_stage_l1_weight_override(self):
        run = config_from_overrides({"stages": {"synthesizer": {"lambda_l1": 7.5}}})
        assert run.stages["synthesizer"].lambda_l1 == 7.5

    def test_unknown_run_key_rejected(self):
        with pytest.raises(ValueError, match="unknown"):
            config_from_overrides({"not_a_field": 1})

    def test_unknown_stage_rejected(self):
        with pytest.raises(ValueError, match="stages"):
            config_from_overrides({"stages": {"warp": {"epochs": 1}}})

    def test_wrong_type_names_field_path(self):
        with pytest.raises(ValueError, match="stages.parsing.epochs"):
            config_from_overrides({"stages": {"parsing": {"epochs": "ten"}}})

    def test_bool_is_not_a_number(self):
        with pytest.raises(ValueError, match="lambda_l1"):
            config_from_overrides({"lambda_l1": True})

    def test_json_entrypoint(self, tmp_path):
        payload = {"profile": "toy", "seed": 5, "num_train_pairs": 4, "num_eval_pairs": 2}
        path = tmp_path / "run.json"
        path.write_text(json.dumps(payload))
        run = config_from_json(path)
        assert run.seed == 5 and run.num_train_pairs == 4


class TestHashing:
    def test_hash_is_stable(self):
        assert config_hash(toy_profile(0)) == config_hash(toy_profile(0))

    def test_hash_sees_stage_changes(self):
        base = toy_profile(0)
        tweaked = config_from_overrides({"stages": {"vae": {"epochs": 1}}})
        assert config_hash(base) != config_hash(tweaked)

    def test_hash_sees_seed(self):
        assert config_hash(toy_profile(0)) != config_hash(toy_profile(1))

    def test_hash_is_short_hex(self):
        h = config_hash(toy_profile(0))
        assert len(h) == 16
        int(h, 16)

    def test_round_trip_through_dict_preserves_hash(self):
        run = toy_profile(0)
        again = config_from_dict(run.to_dict())
        assert config_hash(run) == config_hash(again)


class TestL1WeightResolution:
    def test_stage_override_wins(self):
        from style_vton.training import _l1_weight

        run = toy_profile(0)
        assert _l1_weight(run, run.stages["synthesizer"]) == run.stages["synthesizer"].lambda_l1
        assert _l1_weight(run, run.stages["parsing"]) == run.lambda_l1

    def test_unset_stage_uses_run_default(self):
        from style_vton.training import _l1_weight

        run = toy_profile(0)
        cfg = StageConfig(epochs=1, lambda_l1=None)
        assert _l1_weight(run, cfg) == run.lambda_l1
