import math

import numpy as np
import pytest

import synsal


def half_mask(n=8):
    m = np.zeros((n, n))
    m[:, : n // 2] = 1.0
    return m


def test_metric_values():
    gt = half_mask()
    assert synsal.mae(gt, gt) == 0.0
    assert synsal.mae(np.full((8, 8), 0.5), gt) == 0.5
    assert synsal.f_measure(gt, gt) == 1.0
    assert synsal.f_measure(np.ones((8, 8)), gt) == pytest.approx(1.3 * 0.5 / (0.3 * 0.5 + 1), abs=1e-12)
    assert synsal.s_measure(gt, gt) == pytest.approx(1.0, abs=1e-12)
    assert synsal.e_measure(gt, gt) == pytest.approx(1.0, abs=1e-12)
    assert synsal.adaptive_threshold(np.full((4, 4), 0.25)) == pytest.approx(0.5)


def test_metric_matches_numpy_mae():
    rng = np.random.default_rng(0)
    pred = rng.random((9, 7))
    gt = (rng.random((9, 7)) > 0.5).astype(float)
    assert synsal.mae(pred, gt) == pytest.approx(np.abs(pred - gt).mean(), abs=1e-12)


def test_metric_rejects_bad_shapes():
    with pytest.raises(Exception):
        synsal.mae(np.zeros(4), np.zeros(4))


def test_config_round_trip():
    text = synsal.normalize_config("seed = 3\nablation = B+M\n")
    assert "seed = 3" in text
    assert "ablation = B+M" in text
    assert synsal.normalize_config(text) == text
    with pytest.raises(synsal.ConfigError):
        synsal.normalize_config("no_such_key = 1\n")


def test_train_and_predict(tmp_path):
    dirs = synsal.generate_toy_dataset(tmp_path / "toy", n_rgb=8, n_rgbd=8, n_test=2, size=32, seed=5)
    assert len(list((tmp_path / "toy" / "rgb" / "images").iterdir())) == 8
    config = "\n".join(
        [
            f"rgb_root = {dirs['rgb']}",
            f"rgbd_root = {dirs['rgbd']}",
            f"checkpoint_dir = {tmp_path / 'run'}",
            "backbone = tiny",
            "input_size = 32",
            "batch_size = 2",
            "steps = 3",
            "checkpoint_every = 0",
        ]
    )
    ckpt = synsal.train(config)
    info = synsal.checkpoint_info(ckpt)
    assert info["version"] == 1
    assert info["step"] == 3
    assert [name for name, _ in info["groups"]] == ["generator", "adam_generator", "ds", "dt", "adam_ds", "adam_dt"]

    predictor = synsal.Predictor(ckpt)
    assert predictor.input_size == 32
    image = np.random.default_rng(1).integers(0, 256, size=(21, 30, 3), dtype=np.uint8)
    out = predictor.predict(image)
    assert out.shape == (21, 30)
    assert out.dtype == np.float32
    assert np.all((out >= 0) & (out <= 1))
    assert np.array_equal(out, predictor.predict(image))
    assert not math.isnan(float(out.mean()))
