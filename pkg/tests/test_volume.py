import numpy as np
import pytest

from dto.camera import VoxelGridSpec
from dto.config import ModelConfig
from dto.point_cloud import PointCloud
from volume.baselines import (
    DepthResample,
    build_cost_volume_baseline,
    build_depth_volume_baseline,
    resampling_matrix,
)
from volume.builder import (
    CostVolumeBuilder,
    DepthVolumeBuilder,
    FusionVolumeBuilder,
    build_volume_builder,
)
from volume.embed import PointEmbedding, embed_points
from volume.quantization import point_errors, quantization_specs
from volume.stereo import StereoPayload, build_stereo_payload


def ramp(spec: VoxelGridSpec) -> np.ndarray:
    """One channel whose value is the feature column index."""
    return np.broadcast_to(np.arange(spec.W, dtype=np.float64), (1, spec.H, spec.W)).copy()


class TestStereoPayload:
    @pytest.fixture
    def coarse(self, rig):
        # bin 1 sits at z = 10 m, disparity 5 px
        return VoxelGridSpec.for_rig(rig, D=11, z_max=100.0)

    def test_right_sample_shift(self, rig, coarse):
        out = build_stereo_payload(np.zeros((1, coarse.H, coarse.W)), ramp(coarse), rig, coarse)
        iu = np.arange(2, coarse.W)
        np.testing.assert_allclose(out[1, 1, :, 2:], np.broadcast_to(iu - 1.25, (coarse.H, iu.size)))

    def test_left_channels_copied(self, rig, coarse, rng):
        left = rng.standard_normal((2, coarse.H, coarse.W))
        out = build_stereo_payload(left, np.zeros_like(left), rig, coarse)
        for d in range(coarse.D):
            np.testing.assert_array_equal(out[:2, d], left)

    def test_infinite_disparity_bin_is_zero(self, rig, coarse):
        out = build_stereo_payload(np.ones((1, coarse.H, coarse.W)), np.ones((1, coarse.H, coarse.W)), rig, coarse)
        np.testing.assert_array_equal(out[1, 0], 0.0)

    def test_constant_fields(self, rig, coarse):
        ones = np.full((1, coarse.H, coarse.W), 2.0)
        out = build_stereo_payload(ones, ones, rig, coarse)
        np.testing.assert_allclose(out[0], 2.0)
        # z = 100 m shifts 0.125 cells: every column but the first is in bounds
        np.testing.assert_allclose(out[1, 10, :, 1:], 2.0)

    def test_out_of_bounds_has_no_gradient(self, rig, coarse):
        op = StereoPayload.for_spec(rig, coarse)
        shape = (1, coarse.H, coarse.W)
        op.forward(np.ones(shape), np.ones(shape))
        upstream = np.zeros((2, coarse.D, coarse.H, coarse.W))
        # column 0 of bin 1 samples at x = -1.25: both taps outside
        upstream[1, 1, :, 0] = 1.0
        _, d_right = op.backward(upstream)
        np.testing.assert_array_equal(d_right, 0.0)


class TestEmbedding:
    def bin_center(self, grid, index):
        return grid.depth_centers()[index]

    def test_empty_cloud(self, rig, grid):
        occupancy, channels = embed_points(PointCloud.empty(), None, rig, grid)
        assert not occupancy.any()
        assert channels is None

    def test_point_at_bin_center(self, rig, grid):
        z = self.bin_center(grid, 24)
        occupancy, _ = embed_points(PointCloud(xyz=[[0.0, 0.0, z]]), None, rig, grid)
        assert occupancy.sum() == 1
        assert occupancy[24, 13, 13]

    def test_collision_averages_features(self, rig, grid):
        z = self.bin_center(grid, 24)
        points = PointCloud(xyz=[[0.0, 0.0, z], [0.001, 0.0, z]])
        occupancy, channels = embed_points(points, np.array([[2.0, 4.0]]), rig, grid)
        assert occupancy.sum() == 1
        assert channels[0, 24, 13, 13] == pytest.approx(3.0)

    def test_collision_gradient_is_shared(self, rig, grid):
        z = self.bin_center(grid, 24)
        embedding = PointEmbedding(PointCloud(xyz=[[0.0, 0.0, z], [0.001, 0.0, z]]), rig, grid)
        embedding.forward(np.array([[2.0, 4.0]]))
        (grad,) = embedding.backward(np.ones((1, grid.D, grid.H, grid.W)))
        np.testing.assert_allclose(grad, [[0.5, 0.5]])

    def test_outside_points_skipped(self, rig, grid):
        points = PointCloud(xyz=[[0.0, 0.0, 10.0], [-20.0, 0.0, 10.0], [0.0, 0.0, 500.0]])
        embedding = PointEmbedding(points, rig, grid)
        assert embedding.rejected == 2
        assert embedding.occupancy().sum() == 1

    def test_idempotent(self, rig, grid, rng, make_cloud):
        points = make_cloud(rig, rng, 300, z_range=(1.0, 90.0))
        features = rng.standard_normal((2, 300))
        first = embed_points(points, features, rig, grid)
        second = embed_points(points, features, rig, grid)
        np.testing.assert_array_equal(first[0], second[0])
        np.testing.assert_array_equal(first[1], second[1])


class TestBuilders:
    @pytest.fixture
    def features(self, small_rig, small_config, rng):
        shape = (small_config.C, small_rig.image_height // 4, small_rig.image_width // 4)
        return rng.standard_normal(shape), rng.standard_normal(shape)

    @pytest.fixture
    def cloud(self, small_rig, rng, make_cloud):
        return make_cloud(small_rig, rng, 12, z_range=(3.0, 15.0))

    def test_occupancy_channel(self, small_rig, small_config, features, cloud):
        config = small_config.model_copy(update={"pointnet": "raw"})
        volume = build_volume_builder(config, small_rig).build(*features, cloud)
        assert volume.channels == 2 * config.C + 1
        assert volume.occupied_count > 0
        np.testing.assert_array_equal(volume.point_channels()[0], volume.occupancy)

    def test_point_feature_channels(self, small_rig, small_config, features, cloud, rng):
        point_features = rng.standard_normal((small_config.C, cloud.count))
        volume = build_volume_builder(small_config, small_rig).build(*features, cloud, point_features)
        assert volume.channels == 3 * small_config.C

    def test_no_embedding(self, small_rig, small_config, features, cloud):
        volume = build_volume_builder(small_config, small_rig).build(*features, cloud, embed=False)
        assert volume.channels == 2 * small_config.C
        assert volume.occupied_count == 0

    def test_factory(self, small_rig, small_config):
        for mode, cls in (("fusion", FusionVolumeBuilder), ("cost", CostVolumeBuilder), ("depth", DepthVolumeBuilder)):
            config = small_config.model_copy(update={"volume": mode})
            assert isinstance(build_volume_builder(config, small_rig), cls)

    def test_depth_volume_outputs_depth_grid(self, small_rig, small_config, features, cloud):
        config = small_config.model_copy(update={"volume": "depth", "pointnet": "raw"})
        builder = build_volume_builder(config, small_rig)
        volume = builder.build(*features, cloud)
        assert builder.embed_spec.mode == "disparity-linear"
        assert volume.spec.mode == "depth-linear"
        assert volume.payload.shape[1] == config.D

    def test_backward_round_trip_shapes(self, small_rig, small_config, features, cloud, rng):
        builder = build_volume_builder(small_config, small_rig)
        point_features = rng.standard_normal((small_config.C, cloud.count))
        volume = builder.build(*features, cloud, point_features)
        d_left, d_right, d_points = builder.backward(np.ones_like(volume.payload))
        assert d_left.shape == features[0].shape
        assert d_right.shape == features[1].shape
        assert d_points.shape == point_features.shape


class TestBaselines:
    def test_cost_volume_needs_disparity_grid(self, rig, grid):
        with pytest.raises(ValueError):
            build_cost_volume_baseline(np.ones((1, grid.H, grid.W)), np.ones((1, grid.H, grid.W)), rig, grid)

    def test_resampling_rows_sum_to_one(self, rig):
        source = VoxelGridSpec.for_rig(rig, D=48, mode="disparity-linear", d_max=47.0)
        target = VoxelGridSpec.for_rig(rig, D=48)
        np.testing.assert_allclose(resampling_matrix(source, target, rig).sum(axis=1), 1.0)

    def test_constant_volume_stays_constant(self, rig):
        source = VoxelGridSpec.for_rig(rig, D=48, mode="disparity-linear", d_max=47.0)
        target = VoxelGridSpec.for_rig(rig, D=48)
        volume = np.full((2, source.D, 3, 4), 3.0)
        out = build_depth_volume_baseline(volume, source, target, rig)
        np.testing.assert_allclose(out, 3.0)

    def test_node_copies_slice(self, rig, rng):
        source = VoxelGridSpec.for_rig(rig, D=48, mode="disparity-linear", d_max=47.0)
        # depth bin 1 is z = 2 m, disparity exactly 25 px
        target = VoxelGridSpec.for_rig(rig, D=51, z_max=100.0)
        volume = rng.standard_normal((2, source.D, 3, 4))
        out = DepthResample(resampling_matrix(source, target, rig)).forward(volume)
        np.testing.assert_allclose(out[:, 1], volume[:, 25])

    def test_cost_and_depth_share_embedding_error(self, rig, rng, make_cloud):
        specs = quantization_specs(rig, ("cost", "depth"))
        assert specs["cost"] == specs["depth"]
        points = make_cloud(rig, rng, 500, z_range=(2.0, 90.0))
        cost = point_errors(points, rig, specs["cost"])
        depth = point_errors(points, rig, specs["depth"])
        np.testing.assert_array_equal(cost.error, depth.error)
