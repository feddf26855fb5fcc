import csv

import pytest

from cli.constants import EXIT_DATA, EXIT_OK, EXIT_USAGE
from cli.main import main
from dto.camera import CameraRig
from dto.reports import MetricsRow, QuantizationRow
from geometry.io import save_calibration
from network.io import load_depth

SYNTH = ["--width", "32", "--height", "16", "--rig-fx", "16", "--objects", "2", "--z-max", "20"]
MODEL = ["--channels", "2", "--depth-bins", "8", "--z-max", "20", "--stages", "1", "--agg-channels", "2"]


def read_csv(path):
    with open(path, newline="") as handle:
        return list(csv.reader(handle))


@pytest.fixture(scope="module")
def dataset(tmp_path_factory):
    out = tmp_path_factory.mktemp("data")
    assert main(["synth", "--out", str(out), "--frames", "2", "--points", "60", *SYNTH]) == EXIT_OK
    return out


@pytest.fixture(scope="module")
def trained(dataset, tmp_path_factory):
    out = tmp_path_factory.mktemp("run")
    argv = ["train", "--data", str(dataset), "--out", str(out), "--steps", "2", "--points-train", "50", *MODEL]
    assert main(argv) == EXIT_OK
    return out


def infer_argv(dataset, trained, out, calib=None):
    return [
        "infer",
        "--left", str(dataset / "0000_left.ppm"),
        "--right", str(dataset / "0000_right.ppm"),
        "--points", str(dataset / "0000_points.pcb"),
        "--calib", str(calib or dataset / "calib.txt"),
        "--model", str(trained / "model.vpn1"),
        "--out", str(out),
    ]


class TestSynth:
    def test_layout(self, dataset):
        names = sorted(p.name for p in dataset.iterdir())
        assert names == [
            "0000_depth.pfm", "0000_left.ppm", "0000_points.pcb", "0000_right.ppm",
            "0001_depth.pfm", "0001_left.ppm", "0001_points.pcb", "0001_right.ppm",
            "calib.txt",
        ]

    def test_byte_identical_reruns(self, tmp_path):
        for name in ("a", "b"):
            assert main(["synth", "--out", str(tmp_path / name), "--frames", "1", "--seed", "7", *SYNTH]) == EXIT_OK
        for path in (tmp_path / "a").iterdir():
            assert path.read_bytes() == (tmp_path / "b" / path.name).read_bytes(), path.name

    def test_zero_frames_writes_calibration_only(self, tmp_path):
        assert main(["synth", "--out", str(tmp_path), "--frames", "0", *SYNTH]) == EXIT_OK
        assert [p.name for p in tmp_path.iterdir()] == ["calib.txt"]

    def test_extents_not_divisible_by_four(self, tmp_path):
        assert main(["synth", "--out", str(tmp_path), "--width", "30"]) == EXIT_USAGE

    def test_unknown_flag(self, tmp_path):
        with pytest.raises(SystemExit) as exc:
            main(["synth", "--out", str(tmp_path), "--colour", "blue"])
        assert exc.value.code == EXIT_USAGE


class TestTrain:
    def test_outputs(self, trained):
        assert (trained / "model.vpn1").read_bytes()[:4] == b"VPN1"
        assert (trained / "model.vpn1.json").exists()
        rows = read_csv(trained / "loss.csv")
        assert rows[0] == ["step", "loss_stage1", "total"]
        assert [r[0] for r in rows[1:]] == ["0", "1"]

    def test_illegal_mode_combination(self, dataset, tmp_path):
        argv = ["train", "--data", str(dataset), "--out", str(tmp_path), "--fusion", "early", *MODEL]
        assert main(argv) == EXIT_USAGE

    def test_missing_dataset(self, tmp_path):
        assert main(["train", "--data", str(tmp_path / "nope"), "--out", str(tmp_path), *MODEL]) == EXIT_DATA

    def test_empty_dataset(self, tmp_path):
        (tmp_path / "data").mkdir()
        assert main(["train", "--data", str(tmp_path / "data"), "--out", str(tmp_path), *MODEL]) == EXIT_DATA


class TestInfer:
    def test_repeatable(self, dataset, trained, tmp_path):
        for name in ("a.pfm", "b.pfm"):
            assert main(infer_argv(dataset, trained, tmp_path / name)) == EXIT_OK
        assert (tmp_path / "a.pfm").read_bytes() == (tmp_path / "b.pfm").read_bytes()
        assert load_depth(tmp_path / "a.pfm").shape == (16, 32)

    def test_without_points(self, dataset, trained, tmp_path):
        argv = infer_argv(dataset, trained, tmp_path / "d.pfm")
        index = argv.index("--points")
        del argv[index:index + 2]
        assert main(argv) == EXIT_OK

    def test_calibration_extent_mismatch(self, dataset, trained, tmp_path):
        rig = CameraRig(fx=16.0, fy=16.0, cx=31.5, cy=7.5, baseline=0.5, image_width=64, image_height=16)
        save_calibration(rig, tmp_path / "calib.txt")
        assert main(infer_argv(dataset, trained, tmp_path / "d.pfm", tmp_path / "calib.txt")) == EXIT_DATA

    def test_mode_flag_must_match_checkpoint(self, dataset, trained, tmp_path):
        argv = infer_argv(dataset, trained, tmp_path / "d.pfm") + ["--volume", "cost"]
        assert main(argv) == EXIT_USAGE


class TestEval:
    def test_report(self, dataset, trained, tmp_path):
        report = tmp_path / "metrics.csv"
        argv = ["eval", "--data", str(dataset), "--model", str(trained / "model.vpn1"), "--report", str(report)]
        assert main(argv) == EXIT_OK
        rows = read_csv(report)
        assert rows[0] == MetricsRow.CSV_COLUMNS
        assert [r[0] for r in rows[1:]] == ["0000", "0001", "aggregate"]

    def test_points_ladder(self, dataset, trained, tmp_path):
        report = tmp_path / "ladder.csv"
        argv = [
            "eval", "--data", str(dataset), "--model", str(trained / "model.vpn1"),
            "--report", str(report), "--points-ladder", "0,20",
        ]
        assert main(argv) == EXIT_OK
        rows = read_csv(report)
        assert [r[0] for r in rows[1:]] == ["aggregate@0", "aggregate@20"]
        assert [r[5] for r in rows[1:]] == ["0", "20"]

    def test_mode_flag_must_match_checkpoint(self, dataset, trained, tmp_path):
        argv = [
            "eval", "--data", str(dataset), "--model", str(trained / "model.vpn1"),
            "--report", str(tmp_path / "m.csv"), "--volume", "cost",
        ]
        assert main(argv) == EXIT_USAGE

    def test_missing_checkpoint(self, dataset, tmp_path):
        argv = ["eval", "--data", str(dataset), "--model", str(tmp_path / "none.vpn1"), "--report", str(tmp_path / "m.csv")]
        assert main(argv) == EXIT_DATA


class TestQuantize:
    def test_table(self, dataset, tmp_path):
        report = tmp_path / "q.csv"
        argv = [
            "quantize", "--data", str(dataset), "--report", str(report),
            "--depth-bins", "8", "--z-max", "20", "--bands", "0-5,5-10,10-20",
        ]
        assert main(argv) == EXIT_OK
        rows = read_csv(report)
        assert rows[0] == QuantizationRow.CSV_COLUMNS
        assert [(r[0], r[1], r[2]) for r in rows[1:]] == [
            ("fusion", "0", "5"), ("fusion", "5", "10"), ("fusion", "10", "20"),
            ("cost", "0", "5"), ("cost", "5", "10"), ("cost", "10", "20"),
        ]

    def test_point_report_and_plot(self, dataset, tmp_path):
        argv = [
            "quantize", "--data", str(dataset), "--report", str(tmp_path / "q.csv"),
            "--spec", "fusion", "--points-report", str(tmp_path / "p.csv"), "--plot", str(tmp_path / "q.png"),
            "--depth-bins", "8", "--z-max", "20",
        ]
        assert main(argv) == EXIT_OK
        rows = read_csv(tmp_path / "p.csv")
        assert rows[0] == ["spec", "z", "z_hat", "abs_err"]
        assert {r[0] for r in rows[1:]} == {"fusion"}
        assert (tmp_path / "q.png").read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"

    def test_bad_band(self, dataset, tmp_path):
        with pytest.raises(SystemExit) as exc:
            main(["quantize", "--data", str(dataset), "--report", str(tmp_path / "q.csv"), "--bands", "5-1"])
        assert exc.value.code == EXIT_USAGE


class TestGradcheck:
    def test_single_kind(self, tmp_path, capsys):
        report = tmp_path / "g.csv"
        assert main(["gradcheck", "--kinds", "relu", "--probes", "2", "--report", str(report)]) == EXIT_OK
        assert "relu" in capsys.readouterr().out
        rows = read_csv(report)
        assert rows[0] == ["kind", "max_error", "tolerance", "probes", "status"]
        assert rows[1][0] == "relu"
        assert rows[1][-1] == "PASS"

    def test_unknown_kind(self):
        assert main(["gradcheck", "--kinds", "nope"]) == EXIT_USAGE


def test_pipeline_reruns_are_byte_identical(tmp_path):
    outputs = []
    for name in ("a", "b"):
        root = tmp_path / name
        data, run = root / "data", root / "run"
        assert main(["synth", "--out", str(data), "--frames", "2", "--points", "60", "--seed", "3", *SYNTH]) == EXIT_OK
        argv = ["train", "--data", str(data), "--out", str(run), "--steps", "3", "--points-train", "40", *MODEL]
        assert main(argv) == EXIT_OK
        report = root / "metrics.csv"
        argv = ["eval", "--data", str(data), "--model", str(run / "model.vpn1"), "--report", str(report)]
        assert main(argv) == EXIT_OK
        outputs.append(((run / "loss.csv").read_bytes(), report.read_bytes()))
    assert outputs[0] == outputs[1]
    assert len(outputs[0][0].splitlines()) == 4


def test_ablate(dataset, tmp_path):
    report = tmp_path / "ablate.csv"
    argv = [
        "ablate", "--data", str(dataset), "--modes", "fusion:raw:intermediate", "fusion:raw:early",
        "--seeds", "1", "--steps", "1", "--points-train", "30", "--report", str(report), *MODEL,
    ]
    assert main(argv) == EXIT_OK
    rows = read_csv(report)
    assert [(r[0], r[1], r[2], r[3]) for r in rows[1:]] == [
        ("fusion", "raw", "intermediate", "0"),
        ("fusion", "raw", "intermediate", "mean"),
        ("fusion", "raw", "early", "0"),
        ("fusion", "raw", "early", "mean"),
    ]


def test_bad_mode_triple(dataset, tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["ablate", "--data", str(dataset), "--modes", "fusion:raw", "--report", str(tmp_path / "a.csv")])
    assert exc.value.code == EXIT_USAGE
