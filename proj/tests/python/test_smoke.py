import math

import numpy as np
import pytest

import sga_da


def test_rbf_and_bandwidth():
    x = np.array([[0.0, 0.0]])
    y = np.array([[2.0, 0.0]])
    assert sga_da.median_heuristic_sigma(x, y) == pytest.approx(math.sqrt(2.0))
    k = sga_da.rbf_kernel_matrix(x, y, math.sqrt(2.0))
    assert k.shape == (1, 1)
    assert k[0, 0] == pytest.approx(math.exp(-1.0))


def test_mmd_hardness():
    rng = np.random.default_rng(0)
    f = rng.uniform(-2, 2, size=(6, 3))
    assert sga_da.mmd_hardness(f, f) == 0.0
    sigma = 0.8
    g = sga_da.mmd_hardness([[0.0, 0.0]], [[2 * sigma, 0.0]], sigma)
    assert g * g == pytest.approx(2 - 2 * math.exp(-2))
    t = rng.uniform(-2, 2, size=(4, 3))
    assert sga_da.mmd_hardness(f, t) == sga_da.mmd_hardness(t, f)


def test_errors_map_to_exceptions():
    with pytest.raises(sga_da.ShapeError):
        sga_da.mmd_hardness(np.zeros((2, 2)), np.zeros((3, 3)), 1.0)
    with pytest.raises(sga_da.EmptyInputError):
        sga_da.mmd_hardness(np.zeros((0, 2)), np.zeros((3, 2)), 1.0)
    with pytest.raises(sga_da.ConfigError):
        sga_da.focal_domain_loss([0.5], 1, -1.0)
    assert issubclass(sga_da.ConfigError, sga_da.SgaError)


def test_focal_loss():
    assert sga_da.focal_domain_loss([0.5], 1, 2.0) == pytest.approx(0.25 * math.log(2))
    p = 0.3
    assert sga_da.focal_domain_loss([p], 0, 0.0) == pytest.approx(-math.log(1 - p))


def test_sps_state():
    s = sga_da.SpsState()
    assert not s.gated
    with pytest.raises(sga_da.StateError):
        s.gate(0.1)
    for v in (0.4, 0.1, 0.3, 0.2):
        s.record(v)
    summary = s.epoch_end()
    assert summary["alpha"] == pytest.approx(0.25)
    assert s.gated and s.alpha == pytest.approx(0.25)
    assert s.gate(0.25)["selected"]
    assert not s.gate(0.26)["selected"]
    assert sga_da.median([3.0, 1.0, 2.0]) == 2.0


def test_generate_dataset_is_deterministic():
    spec = {"family": "two-moons", "points_per_domain": 50, "seed": 3,
            "shift": {"rotation_degrees": 30}}
    a = sga_da.generate_dataset(spec)
    b = sga_da.generate_dataset(spec)
    assert a["source_x"].shape == (50, 2)
    np.testing.assert_array_equal(a["target_x"], b["target_x"])
    assert sorted(set(a["source_y"])) == [0, 1]
    with pytest.raises(sga_da.ConfigError):
        sga_da.generate_dataset({"points_per_domain": 0})


def test_train_and_evaluate(tmp_path):
    config = {
        "dataset": {"points_per_domain": 80, "seed": 5, "shift": {"rotation_degrees": 30}},
        "epochs": 2, "steps_per_epoch": 5, "batch_size": 8, "width": 6,
        "disc_hidden": 5, "variant": "sga-s", "seed": 1,
    }
    out = sga_da.train(config, tmp_path)
    assert len(out["epochs"]) == 2
    assert 0.0 <= out["final"]["target_accuracy"] <= 1.0
    assert (tmp_path / "metrics.jsonl").exists()

    data = tmp_path / "data.csv"
    sga_da.save_dataset(config["dataset"], data)
    report = sga_da.evaluate(tmp_path / "model.json", data)
    assert set(report) >= {"source_accuracy", "target_accuracy", "domain_confusion_degree"}

    with pytest.raises(sga_da.ConfigError):
        sga_da.train({**config, "bogus": 1})
