import numpy as np
import pytest

from lskmatte import (
    Label,
    PipelineStageError,
    RunConfig,
    Trimap,
    run_matte,
)

from conftest import random_scene, two_color_scene


def test_config_defaults_are_reference_constants():
    config = RunConfig()
    assert config.pre_spatial == 9.0 and config.pre_color == 9.0
    assert config.sigma_sq == 2.0 and config.rho == 15.0
    assert config.lam == 100.0 and config.epsilon_sim == 0.1
    config.validate()


@pytest.mark.parametrize(
    "field,value",
    [
        ("mode", "other"),
        ("features", "12d"),
        ("lam", 0.0),
        ("epsilon_sim", -1.0),
        ("sigma_sq", 0.0),
        ("rho", -2.0),
        ("pre_spatial", 0.0),
        ("accuracy_floor", 1.5),
        ("k_max", 0),
        ("cv_folds", 1),
        ("window_radius", 0),
        ("epsilon_reg", 0.0),
    ],
)
def test_config_rejects_out_of_bounds(field, value):
    config = RunConfig(**{field: value})
    with pytest.raises(ValueError):
        config.validate()


def test_stage_error_names_the_stage():
    # a trimap without background kills sample collection inside 'train'
    img, _ = random_scene(3, h=16, w=16)
    labels = np.full((16, 16), Label.UNKNOWN, dtype=np.uint8)
    labels[:, :4] = Label.FOREGROUND
    with pytest.raises(PipelineStageError) as info:
        run_matte(img, Trimap(labels))
    assert info.value.stage == "train"
    assert "train" in str(info.value)


def test_no_preprocess_keeps_input_trimap():
    img, tri = two_color_scene(h=30, w=24, fg_end=8, bg_start=16)
    result = run_matte(img, tri, RunConfig(preprocess=False))
    assert np.array_equal(result.trimap.labels, tri.labels)
    expanded = run_matte(img, tri, RunConfig(preprocess=True))
    # constant-colored strips expand into the band
    assert expanded.trimap.is_unknown.sum() < tri.is_unknown.sum()


def test_cf_baseline_skips_classifier():
    img, tri = two_color_scene(h=30, w=24, fg_end=8, bg_start=16)
    result = run_matte(img, tri, RunConfig(mode="cf-baseline"))
    assert result.classifier is None and result.constraints is None


def test_force_9d_policy_threaded_through():
    img, tri = two_color_scene(h=30, w=24, fg_end=8, bg_start=16)
    result = run_matte(img, tri, RunConfig(features="9d"))
    assert result.classifier.used_coords is False


def test_verbose_logging_collects_stage_lines():
    img, tri = two_color_scene(h=30, w=24, fg_end=8, bg_start=16)
    lines = []
    run_matte(img, tri, RunConfig(verbose=True), log=lines.append)
    text = "\n".join(lines)
    for stage in ("preprocess", "train", "laplacian", "solve"):
        assert stage in text
    assert "k=" in text  # the k-score table


def test_timings_recorded():
    img, tri = two_color_scene(h=30, w=24, fg_end=8, bg_start=16)
    result = run_matte(img, tri)
    for stage in ("preprocess", "features", "train", "constraints",
                  "laplacian", "assemble", "solve"):
        assert stage in result.timings
