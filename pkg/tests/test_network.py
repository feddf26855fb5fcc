import math

import numpy as np
import pytest

from dto.camera import VoxelGridSpec
from dto.config import ModelConfig
from dto.depth import DepthMap
from dto.point_cloud import PointCloud
from errors import (
    BackwardBeforeForwardError,
    ConfigError,
    EmptyMaskError,
    FormatError,
    ShapeMismatchError,
)
from network.aggregation import Aggregator
from network.features import FeatureExtractor
from network.io import decode_pfm, encode_pfm, load_depth, save_depth
from network.losses import DepthLoss, depth_loss, stage_losses, total_loss, total_loss_backward
from network.metrics import aggregate_metrics, evaluate_metrics
from network.model import (
    VolumetricPropagationNetwork,
    forward_pipeline,
    load_model_config,
    sparse_depth_channel,
)
from network.regression import DepthRegressor, DisparityToDepth, SoftArgmax, regress_depth
from core.ops.activation import Softmax
from core.parameters import ParameterSet


class TestRegression:
    def test_uniform_logits_give_mid_range(self):
        depth = regress_depth(np.zeros((48, 2, 3)), z_max=100.0, D=48)
        assert depth.shape == (8, 12)
        np.testing.assert_allclose(depth.depth, 50.0, rtol=1e-6)

    def test_saturated_last_bin(self):
        logits = np.zeros((48, 1, 1))
        logits[47] = 1e4
        depth = regress_depth(logits, z_max=100.0, D=48)
        np.testing.assert_allclose(depth.depth, 100.0, rtol=1e-6)

    def test_two_bins_by_hand(self):
        logits = np.array([0.0, math.log(3.0)]).reshape(2, 1, 1)
        depth = regress_depth(logits, z_max=100.0, D=2)
        np.testing.assert_allclose(depth.depth, 75.0, rtol=1e-9)

    def test_bin_count_checked(self):
        with pytest.raises(ShapeMismatchError):
            regress_depth(np.zeros((1, 1, 1)), z_max=100.0, D=1)
        with pytest.raises(ShapeMismatchError):
            SoftArgmax(np.arange(4.0)).forward(np.zeros((5, 1, 1)))

    def test_disparity_conversion(self):
        op = DisparityToDepth(focal_baseline=50.0, z_max=100.0)
        np.testing.assert_allclose(op.forward(np.array([5.0, 0.1])), [10.0, 100.0])
        (grad,) = op.backward(np.ones(2))
        assert grad[0] == pytest.approx(-2.0)
        assert grad[1] == 0.0

    def test_regressor_backward_before_forward(self, small_rig, small_config):
        spec = VolumetricPropagationNetwork(small_config).builder(small_rig).output_spec
        with pytest.raises(BackwardBeforeForwardError):
            DepthRegressor(spec, small_rig).backward(np.zeros((16, 32)))

    def test_monotone_in_each_logit(self, rng):
        values = np.arange(16, dtype=np.float64) / 15 * 100.0
        logits = rng.standard_normal((16, 1, 1))
        base = SoftArgmax(values).forward(logits)[0, 0]
        for d in range(16):
            bumped = logits.copy()
            bumped[d] += 0.5
            depth = SoftArgmax(values).forward(bumped)[0, 0]
            # raising a bin's logit pulls the estimate toward that bin
            if values[d] > base:
                assert depth > base
            else:
                assert depth < base

    @pytest.mark.parametrize("mode", ["depth-linear", "disparity-linear"])
    def test_bounded_over_random_logits(self, rig, rng, mode):
        spec = VoxelGridSpec.for_rig(rig, D=48, z_max=100.0, mode=mode, d_max=47.0)
        logits = rng.normal(0.0, rng.uniform(0.1, 30.0, (1, 100, 100)), (48, 100, 100))
        prob = Softmax(axis=0).forward(logits)
        np.testing.assert_allclose(prob.sum(axis=0), 1.0, atol=1e-6)
        if mode == "depth-linear":
            depth = SoftArgmax(spec.depth_centers()).forward(logits)
        else:
            disparity = SoftArgmax(spec.disparity_centers()).forward(logits)
            assert disparity.min() >= 0.0 and disparity.max() <= 47.0 + 1e-9
            depth = DisparityToDepth(rig.focal_baseline, spec.z_max).forward(disparity)
        assert depth.shape == (100, 100)
        assert np.all(np.isfinite(depth))
        assert depth.min() >= -1e-9 and depth.max() <= 100.0 + 1e-9


class TestLosses:
    def truth(self, value=2.0):
        return DepthMap(depth=np.array([[value]]))

    def test_perfect_prediction(self):
        assert depth_loss(self.truth(), self.truth()) == 0.0

    def test_quadratic_branch(self):
        assert DepthLoss(self.truth()).forward(np.array([[2.5]], dtype=np.float32)) == pytest.approx(0.125)

    def test_linear_branch(self):
        assert DepthLoss(self.truth()).forward(np.array([[5.0]], dtype=np.float32)) == pytest.approx(2.5)

    def test_invalid_pixels_ignored(self):
        truth = DepthMap(depth=np.array([[2.0, 0.0]]))
        assert DepthLoss(truth).forward(np.array([[2.5, 80.0]])) == pytest.approx(0.125)

    def test_empty_truth(self):
        with pytest.raises(EmptyMaskError):
            DepthLoss(DepthMap(depth=np.zeros((2, 2))))

    def test_total(self):
        assert total_loss([1.0, 1.0, 1.0], [0.5, 0.7, 1.0]) == pytest.approx(2.2)
        assert total_loss([0.0, 0.0, 0.0], [0.5, 0.7, 1.0]) == 0.0
        assert total_loss_backward([0.5, 0.7, 1.0], 2.0) == [1.0, 1.4, 2.0]

    def test_total_weight_count(self):
        with pytest.raises(ShapeMismatchError):
            total_loss([1.0, 1.0], [0.5, 0.7, 1.0])

    def test_total_is_weighted_sum(self, rng):
        for _ in range(20):
            stages = int(rng.integers(1, 6))
            losses = rng.uniform(0.0, 50.0, stages)
            weights = rng.uniform(0.0, 2.0, stages)
            assert total_loss(list(losses), list(weights)) == pytest.approx(np.dot(losses, weights), abs=1e-6)

    def test_gradient_is_weighted_sum_of_stage_gradients(self, small_sample):
        def gradients(weights):
            model = VolumetricPropagationNetwork(
                ModelConfig(C=2, D=8, z_max=20.0, stages=2, agg_channels=2, weights=weights)
            )
            losses = model.train_step_gradients(small_sample)
            return losses, {p.name: p.grad.astype(np.float64) for p in model.params}

        weights = [0.5, 0.7]
        losses, combined = gradients(weights)
        first_losses, first = gradients([1.0, 0.0])
        _, second = gradients([0.0, 1.0])
        np.testing.assert_allclose(losses, first_losses, rtol=1e-6)
        assert total_loss(losses, weights) == pytest.approx(np.dot(losses, weights), abs=1e-6)
        for name, grad in combined.items():
            expected = weights[0] * first[name] + weights[1] * second[name]
            scale = max(np.abs(expected).max(), 1e-12)
            np.testing.assert_allclose(grad, expected, rtol=1e-4, atol=1e-5 * scale, err_msg=name)


class TestMetrics:
    def test_perfect(self):
        truth = DepthMap(depth=np.array([[1.0, 4.0]]))
        metrics = evaluate_metrics(truth.depth, truth)
        assert (metrics.rmse_mm, metrics.mae_mm, metrics.irmse_per_km, metrics.imae_per_km) == (0, 0, 0, 0)

    def test_by_hand(self):
        truth = DepthMap(depth=np.array([[1.0, 1.0]]))
        metrics = evaluate_metrics(np.array([[1.0, 3.0]]), truth)
        assert metrics.rmse_mm == pytest.approx(1414.2136, rel=1e-6)
        assert metrics.mae_mm == pytest.approx(1000.0)
        assert metrics.imae_per_km == pytest.approx(333.333, rel=1e-5)
        assert metrics.abs_rel == pytest.approx(1.0)

    def test_non_positive_prediction_excluded_from_inverse(self):
        truth = DepthMap(depth=np.array([[1.0, 2.0]]))
        metrics = evaluate_metrics(np.array([[1.0, 0.0]]), truth)
        assert metrics.excluded_inverse == 1
        assert metrics.imae_per_km == 0.0
        assert metrics.mae_mm == pytest.approx(1000.0)

    def test_no_valid_pixel(self):
        with pytest.raises(EmptyMaskError):
            evaluate_metrics(np.ones((2, 2)), DepthMap(depth=np.zeros((2, 2))))

    def test_bands(self):
        truth = DepthMap(depth=np.array([[1.0, 5.0]]))
        metrics = evaluate_metrics(np.array([[1.5, 5.0]]), truth, bands=[(0.0, 2.0), (2.0, 10.0), (10.0, 20.0)])
        assert set(metrics.bands) == {"0-2", "2-10"}
        assert metrics.bands["0-2"].mae_mm == pytest.approx(500.0)
        assert metrics.bands["2-10"].mae_mm == 0.0

    def test_aggregate_is_mean(self):
        truth = DepthMap(depth=np.array([[1.0]]))
        first = evaluate_metrics(np.array([[2.0]]), truth)
        second = evaluate_metrics(np.array([[4.0]]), truth)
        assert aggregate_metrics([first, second]).mae_mm == pytest.approx(2000.0)


class TestDepthFiles:
    def test_round_trip(self, tmp_path):
        depth = DepthMap(depth=np.array([[1.5, 0.0, 3.25], [7.0, 8.5, 0.0]]))
        save_depth(depth, tmp_path / "d.pfm")
        loaded = load_depth(tmp_path / "d.pfm")
        np.testing.assert_array_equal(loaded.depth, depth.depth)
        np.testing.assert_array_equal(loaded.mask, depth.mask)

    def test_header(self):
        data = encode_pfm(DepthMap(depth=np.ones((2, 3))))
        assert data.startswith(b"Pf\n3 2\n-1.0\n")
        assert len(data) == len(b"Pf\n3 2\n-1.0\n") + 2 * 3 * 4

    def test_rows_bottom_to_top(self):
        data = encode_pfm(DepthMap(depth=np.array([[1.0], [2.0]])))
        body = np.frombuffer(data.split(b"\n", 3)[3], dtype="<f4")
        np.testing.assert_array_equal(body, [2.0, 1.0])

    @pytest.mark.parametrize("bad", [b"abc", b"0"])
    def test_corrupt_scale_line(self, bad):
        data = encode_pfm(DepthMap(depth=np.ones((2, 2)))).replace(b"-1.0", bad)
        with pytest.raises(FormatError, match="scale"):
            decode_pfm(data)

    def test_colour_pfm_rejected(self):
        data = encode_pfm(DepthMap(depth=np.ones((2, 2)))).replace(b"Pf", b"PF", 1)
        with pytest.raises(FormatError):
            decode_pfm(data)

    def test_truncated(self):
        data = encode_pfm(DepthMap(depth=np.ones((2, 2))))
        with pytest.raises(FormatError):
            decode_pfm(data[:-1])


class TestModel:
    @pytest.fixture
    def cloud(self, small_rig, rng, make_cloud):
        return make_cloud(small_rig, rng, 20, z_range=(3.0, 15.0))

    @pytest.fixture
    def images(self, rng):
        return rng.uniform(0.0, 1.0, (3, 16, 32)), rng.uniform(0.0, 1.0, (3, 16, 32))

    def run(self, config, small_rig, images, cloud):
        return VolumetricPropagationNetwork(config).forward(*images, cloud, small_rig)

    def test_fusionconv_volume_channels(self, small_config, small_rig, images, cloud):
        out = self.run(small_config, small_rig, images, cloud)
        assert out.volume.channels == 3 * small_config.C
        assert len(out.stage_depths) == small_config.stages
        assert out.depth.shape == (16, 32)

    def test_raw_volume_channels(self, small_config, small_rig, images, cloud):
        config = small_config.model_copy(update={"pointnet": "raw"})
        out = self.run(config, small_rig, images, cloud)
        assert out.volume.channels == 2 * config.C + 1
        assert out.volume.occupied_count > 0

    def test_early_fusion_embeds_nothing(self, small_config, small_rig, images, cloud):
        config = ModelConfig(C=2, D=8, z_max=20.0, stages=2, agg_channels=2, pointnet="raw", fusion="early")
        model = VolumetricPropagationNetwork(config)
        assert model.extractor.in_channels == 4
        out = model.forward(*images, cloud, small_rig)
        assert out.volume.channels == 2 * config.C
        assert out.volume.occupied_count == 0

    @pytest.mark.parametrize("volume", ["cost", "depth"])
    def test_baseline_volumes_regress_full_resolution(self, small_config, small_rig, images, cloud, volume):
        config = small_config.model_copy(update={"volume": volume})
        out = self.run(config, small_rig, images, cloud)
        assert out.depth.shape == (16, 32)
        assert np.all(np.isfinite(out.depth))

    def test_illegal_mode_combination(self):
        with pytest.raises(ConfigError, match="early fusion"):
            ModelConfig.build(fusion="early", pointnet="fusionconv")

    def test_image_extent_checked(self, small_config, small_rig, cloud):
        model = VolumetricPropagationNetwork(small_config)
        with pytest.raises(ShapeMismatchError):
            model.forward(np.zeros((3, 16, 28)), np.zeros((3, 16, 28)), cloud, small_rig)

    def test_deterministic(self, small_config, small_rig, images, cloud):
        first = self.run(small_config, small_rig, images, cloud).depth
        second = self.run(small_config, small_rig, images, cloud).depth
        np.testing.assert_array_equal(first, second)

    def test_empty_cloud_runs_stereo_only(self, small_config, small_rig, images):
        out = self.run(small_config, small_rig, images, PointCloud.empty())
        assert out.points_used == 0
        assert np.all(np.isfinite(out.depth))

    def test_gradients_reach_every_parameter(self, small_config, small_sample):
        model = VolumetricPropagationNetwork(small_config)
        losses = model.train_step_gradients(small_sample)
        assert len(losses) == small_config.stages
        for p in model.params:
            assert p.grad is not None, p.name
            assert np.all(np.isfinite(p.grad)), p.name

    def test_losses_match_pipeline(self, small_config, small_sample):
        model = VolumetricPropagationNetwork(small_config)
        losses = model.train_step_gradients(small_sample)
        depth, pipeline_losses = forward_pipeline(small_sample, small_config)
        np.testing.assert_allclose(losses, pipeline_losses, rtol=1e-6)
        assert depth.shape == small_sample.depth.shape

    def test_backward_before_forward(self, small_config):
        with pytest.raises(BackwardBeforeForwardError):
            VolumetricPropagationNetwork(small_config).backward([np.zeros((16, 32))] * 2)

    def test_save_and_load(self, small_config, small_rig, images, cloud, tmp_path):
        model = VolumetricPropagationNetwork(small_config.model_copy(update={"seed": 4}))
        model.save(tmp_path / "model.vpn1")
        assert load_model_config(tmp_path / "model.vpn1").seed == 4
        loaded = VolumetricPropagationNetwork.load(tmp_path / "model.vpn1")
        np.testing.assert_array_equal(
            loaded.predict(*images, cloud, small_rig).depth, model.predict(*images, cloud, small_rig).depth
        )

    def test_missing_sidecar(self, small_config, tmp_path):
        VolumetricPropagationNetwork(small_config).save(tmp_path / "model.vpn1")
        (tmp_path / "model.vpn1.json").unlink()
        with pytest.raises(FormatError):
            load_model_config(tmp_path / "model.vpn1")


class TestComponents:
    def test_feature_extractor_quarter_resolution(self):
        extractor = FeatureExtractor(ParameterSet(), 3, 4, np.random.default_rng(0))
        features, _ = extractor.extract(np.zeros((3, 16, 32), dtype=np.float32))
        assert features.shape == (4, 4, 8)

    def test_feature_extractor_rejects_odd_extent(self):
        extractor = FeatureExtractor(ParameterSet(), 3, 4, np.random.default_rng(0))
        with pytest.raises(ShapeMismatchError):
            extractor.extract(np.zeros((3, 10, 32), dtype=np.float32))

    def test_aggregator_stage_outputs(self):
        aggregator = Aggregator(ParameterSet(), 5, 2, 3, np.random.default_rng(0))
        outputs = aggregator.forward(np.zeros((5, 6, 4, 8), dtype=np.float32))
        assert [o.shape for o in outputs] == [(6, 4, 8)] * 3
        d_volume = aggregator.backward([np.ones((6, 4, 8))] * 3)
        assert d_volume.shape == (5, 6, 4, 8)

    def test_sparse_depth_channel(self, small_rig):
        # pixel (16, 8) at z = 10
        points = PointCloud(xyz=[[(16 - 15.5) * 10 / 16, (8 - 7.5) * 10 / 16, 10.0]])
        channel = sparse_depth_channel(points, small_rig, z_max=20.0)
        assert channel[8, 16] == pytest.approx(0.5)
        assert np.count_nonzero(channel) == 1

    def test_sparse_depth_channel_is_normalized(self, small_rig):
        points = PointCloud(
            xyz=[
                [5.625, 0.625, 20.0],  # pixel (20, 8) at z_max
                [0.0, 0.0, 2.0],  # pixel (16, 8)
                [0.0, 0.0, 8.0],  # same pixel, farther
                [0.5, 0.0, 20.5],  # beyond z_max
            ]
        )
        channel = sparse_depth_channel(points, small_rig, z_max=20.0)
        assert channel[8, 20] == pytest.approx(1.0)
        assert channel[8, 16] == pytest.approx(0.1)
        assert channel.max() <= 1.0 and channel.min() == 0.0
        assert np.count_nonzero(channel) == 2

def test_stage_losses_one_per_stage():
    truth = DepthMap(depth=np.array([[2.0]]))
    losses, ops = stage_losses([np.array([[2.5]]), np.array([[5.0]])], truth)
    assert losses == pytest.approx([0.125, 2.5])
    assert len(ops) == 2
