import csv

import numpy as np
import pytest

from cli.constants import EXIT_OK
from cli.main import main
from dto.camera import CameraRig
from dto.config import ModelConfig
from network.evaluation import evaluate_dataset
from network.model import VolumetricPropagationNetwork
from network.training import train
from scenes.generator import generate_scenes


pytestmark = pytest.mark.slow

SEEDS = (0, 1, 2)
LADDER = (10, 1000, 5000, 15000)
BENCH_MODEL = ["--channels", "4", "--depth-bins", "16", "--stages", "2", "--agg-channels", "4"]


@pytest.fixture(scope="module")
def bench_rig():
    return CameraRig(fx=100.0, fy=100.0, cx=63.5, cy=31.5, baseline=0.5, image_width=128, image_height=64)


@pytest.fixture(scope="module")
def bench_samples(bench_rig):
    return generate_scenes(frames=4, seed=0, rig=bench_rig, object_count=4, z_max=100.0, points=1000)


@pytest.fixture(scope="module")
def trained_runs(bench_samples):
    runs = []
    for seed in SEEDS:
        config = ModelConfig(C=4, D=16, z_max=100.0, stages=2, agg_channels=4, seed=seed)
        model = VolumetricPropagationNetwork(config)
        logs = train(model, bench_samples, steps=200, points=1000, seed=seed)
        runs.append((model, logs))
    return runs


def test_training_halves_the_loss(trained_runs):
    curves = np.array([[log.total for log in logs] for _, logs in trained_runs])
    assert curves.shape == (len(SEEDS), 200)
    assert np.all(np.isfinite(curves))
    mean_curve = curves.mean(axis=0)
    assert mean_curve[-10:].mean() < 0.5 * mean_curve[:5].mean()


def test_points_beat_stereo_only(trained_runs, bench_samples):
    with_points, without = [], []
    for seed, (model, _) in zip(SEEDS, trained_runs):
        with_points.append(evaluate_dataset(model, bench_samples, seed=seed)[1].rmse_mm)
        without.append(evaluate_dataset(model, bench_samples, dropout=1.0, seed=seed)[1].rmse_mm)
    assert np.isfinite(without).all()
    assert np.mean(with_points) < np.mean(without)


def test_error_falls_along_point_ladder(trained_runs, bench_samples):
    rmse = np.array(
        [
            [evaluate_dataset(model, bench_samples, points=n, seed=seed)[1].rmse_mm for n in LADDER]
            for seed, (model, _) in zip(SEEDS, trained_runs)
        ]
    ).mean(axis=0)
    assert np.isfinite(rmse).all()
    rises = [later / earlier for earlier, later in zip(rmse, rmse[1:]) if later > earlier]
    # one small step up is tolerated
    assert len(rises) <= 1
    assert all(ratio <= 1.05 for ratio in rises)

    model = trained_runs[0][0]
    _, dropped = evaluate_dataset(model, bench_samples, points=LADDER[-1], dropout=1.0)
    assert np.isfinite([dropped.rmse_mm, dropped.mae_mm, dropped.irmse_per_km, dropped.imae_per_km]).all()


def test_ablation_ordering(tmp_path):
    data = tmp_path / "data"
    assert main(["synth", "--out", str(data), "--frames", "4", "--seed", "0"]) == EXIT_OK
    report = tmp_path / "ablate.csv"
    argv = [
        "ablate", "--data", str(data), "--seeds", str(len(SEEDS)), "--steps", "200",
        "--report", str(report), *BENCH_MODEL,
    ]
    assert main(argv) == EXIT_OK
    with report.open(newline="") as handle:
        rows = list(csv.reader(handle))
    means = {(r[0], r[1], r[2]): float(r[4]) for r in rows[1:] if r[3] == "mean"}
    assert len(means) == 4
    assert means[("fusion", "fusionconv", "intermediate")] <= means[("cost", "fusionconv", "intermediate")]
    assert means[("fusion", "raw", "intermediate")] <= means[("fusion", "raw", "early")]
    # FusionConv against raw points is reported only
    assert np.isfinite(means[("fusion", "fusionconv", "intermediate")])
    assert np.isfinite(means[("fusion", "raw", "intermediate")])
