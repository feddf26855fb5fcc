import numpy as np
import pytest

from core.parameters import Parameter, ParameterSet
from dto.camera import CameraRig, VoxelGridSpec
from dto.config import ModelConfig
from dto.point_cloud import PointCloud
from errors import BackwardBeforeForwardError
from geometry.camera import backproject_pixels
from geometry.voxel import voxel_indices
from pointnet.baselines import PointMLP, RawPoints
from pointnet.cluster import cluster, cluster_voxels
from pointnet.factory import build_point_network
from pointnet.fusion import feature_coordinates, image_to_point_fuse
from pointnet.fusionconv import FusionConv, FusionConvNetwork


def brute_force_neighbors(index, window):
    index = np.asarray(index)
    limit = np.asarray(window)
    return [
        {i for i in range(len(index)) if np.all(np.abs(index[i] - index[c]) <= limit)}
        for c in range(len(index))
    ]


def naive_fusionconv(A, mix, fused, xyz, neighbor_sets):
    """Double loop over centers and neighbors, straight from the layer formula."""
    mixed = mix @ fused
    out = np.zeros((A.shape[0], len(neighbor_sets)))
    for c, members in enumerate(neighbor_sets):
        for i in sorted(members):
            delta = xyz[c] - xyz[i]
            G = A[:, 0] + A[:, 1:] @ delta
            out[:, c] += mixed[:, i] * G
        out[:, c] /= len(members)
    return out


@pytest.fixture
def node_rig():
    return CameraRig(fx=8.0, fy=8.0, cx=8.0, cy=8.0, baseline=0.5, image_width=16, image_height=16)


class TestClustering:
    def test_single_point_is_its_own_cluster(self):
        assert cluster_voxels(np.array([[1, 2, 3]])).as_sets() == [{0}]

    def test_depth_window(self):
        index = np.array([[5, 5, 10], [5, 5, 13]])
        assert cluster_voxels(index, (1, 1, 1)).as_sets() == [{0}, {1}]
        assert cluster_voxels(index, (1, 1, 3)).as_sets() == [{0, 1}, {0, 1}]

    def test_empty(self):
        result = cluster_voxels(np.zeros((0, 3)))
        assert result.count == 0
        assert result.neighbors.size == 0

    @pytest.mark.parametrize("window", [(1, 1, 1), (0, 0, 2), (2, 1, 0)])
    def test_matches_brute_force(self, rig, grid, rng, make_cloud, window):
        points = make_cloud(rig, rng, 200, z_range=(1.0, 30.0))
        index, _ = voxel_indices(grid, rig, points.xyz)
        result = cluster(points, rig, grid, window)
        assert result.as_sets() == brute_force_neighbors(index, window)

    def test_neighbor_lists_ascending(self, rig, grid, rng, make_cloud):
        points = make_cloud(rig, rng, 150, z_range=(1.0, 20.0))
        result = cluster(points, rig, grid)
        for c in range(result.count):
            members = result.neighbors_of(c)
            assert np.all(np.diff(members) > 0)
            assert c in members


class TestImageToPointFusion:
    def test_constant_field(self, rng):
        rig = CameraRig(fx=10.0, fy=10.0, cx=7.5, cy=7.5, baseline=0.5, image_width=16, image_height=16)
        spec = VoxelGridSpec.for_rig(rig, D=8, z_max=20.0)
        u = rng.uniform(0.0, 12.0, 20)
        v = rng.uniform(0.0, 12.0, 20)
        points = PointCloud(xyz=backproject_pixels(rig, u, v, rng.uniform(2.0, 18.0, 20)))
        image = np.full((2, spec.H, spec.W), 5.0)
        fused = image_to_point_fuse(image, points, np.zeros((2, 20)), rig, spec)
        assert fused.shape == (4, 20)
        np.testing.assert_allclose(fused[:2], 5.0)

    def test_point_on_node(self, node_rig):
        spec = VoxelGridSpec.for_rig(node_rig, D=8, z_max=20.0)
        image = np.arange(2 * 16, dtype=np.float64).reshape(2, 4, 4)
        # projects to pixel (12, 4), feature cell (3, 1)
        points = PointCloud(xyz=np.array([[1.0, -1.0, 2.0]]))
        fused = image_to_point_fuse(image, points, None, node_rig, spec)
        np.testing.assert_array_equal(fused[:, 0], image[:, 1, 3])

    def test_midway_between_cells(self, node_rig):
        spec = VoxelGridSpec.for_rig(node_rig, D=8, z_max=20.0)
        image = np.zeros((1, 4, 4))
        image[0, 1, 1] = 1.0
        image[0, 1, 2] = 3.0
        # projects to pixel (6, 4), feature coordinate (1.5, 1)
        points = PointCloud(xyz=np.array([[-0.5, -1.0, 2.0]]))
        fused = image_to_point_fuse(image, points, None, node_rig, spec)
        assert fused[0, 0] == pytest.approx(2.0)

    def test_point_left_of_first_node_clamps(self, node_rig):
        spec = VoxelGridSpec.for_rig(node_rig, D=8, z_max=20.0)
        image = np.arange(2 * 16, dtype=np.float64).reshape(2, 4, 4) + 1.0
        # projects to pixel (-0.4, 4), feature coordinate (-0.1, 1)
        points = PointCloud(xyz=np.array([[-2.1, -1.0, 2.0]]))
        _, accepted = voxel_indices(spec, node_rig, points.xyz)
        assert accepted[0]
        fused = image_to_point_fuse(image, points, None, node_rig, spec)
        np.testing.assert_allclose(fused[:, 0], image[:, 1, 0])

    def test_point_right_of_last_node_clamps(self, node_rig):
        spec = VoxelGridSpec.for_rig(node_rig, D=8, z_max=20.0)
        image = np.arange(2 * 16, dtype=np.float64).reshape(2, 4, 4) + 1.0
        # projects to pixel (13.2, 4), feature coordinate (3.3, 1)
        points = PointCloud(xyz=np.array([[1.3, -1.0, 2.0]]))
        _, accepted = voxel_indices(spec, node_rig, points.xyz)
        assert accepted[0]
        fused = image_to_point_fuse(image, points, None, node_rig, spec)
        np.testing.assert_allclose(fused[:, 0], image[:, 1, 3])

    def test_coordinates_stay_on_map(self, node_rig, rng):
        spec = VoxelGridSpec.for_rig(node_rig, D=8, z_max=20.0)
        u = rng.uniform(-1.9, 15.9, 200)
        v = rng.uniform(-1.9, 15.9, 200)
        points = PointCloud(xyz=backproject_pixels(node_rig, u, v, rng.uniform(1.0, 15.0, 200)))
        x, y = feature_coordinates(points, node_rig, spec)
        assert x.min() >= 0.0 and x.max() <= spec.W - 1
        assert y.min() >= 0.0 and y.max() <= spec.H - 1


class TestFusionConv:
    def lone(self):
        A = Parameter("A", np.array([[1.0, 0.0, 0.0, 0.0]]))
        mix = Parameter("mix", np.array([[1.0, 0.0]]))
        op = FusionConv(A, mix, cluster_voxels(np.array([[0, 0, 0]])), np.array([[0.0, 0.0, 5.0]]))
        return A, mix, op

    def test_lone_point(self):
        _, _, op = self.lone()
        out = op.forward(np.array([[3.0], [0.0]]))
        np.testing.assert_allclose(out, [[3.0]])

    def test_geometry_kernel_by_hand(self):
        A = Parameter("A", np.array([[1.0, 1.0, 0.0, 0.0]]))
        mix = Parameter("mix", np.array([[1.0, 0.0]]))
        clusters = cluster_voxels(np.array([[0, 0, 0], [1, 0, 0]]))
        xyz = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]])
        out = FusionConv(A, mix, clusters, xyz).forward(np.array([[2.0, 4.0], [0.0, 0.0]]))
        assert out[0, 0] == pytest.approx(1.0)
        assert out[0, 1] == pytest.approx(4.0)

    @pytest.mark.parametrize("seed", range(100))
    def test_matches_naive_oracle(self, rig, grid, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(0, 65)) if seed else 0
        # a random pixel box and depth slab; small boxes pack many points per voxel
        span_u, span_v = rng.uniform(0.0, 40.0), rng.uniform(0.0, 30.0)
        u0, v0 = rng.uniform(0.0, 124.0 - span_u), rng.uniform(0.0, 60.0 - span_v)
        z0, span_z = rng.uniform(1.0, 60.0), rng.uniform(0.0, 20.0)
        xyz = backproject_pixels(
            rig,
            rng.uniform(u0, u0 + span_u, n),
            rng.uniform(v0, v0 + span_v, n),
            rng.uniform(z0, z0 + span_z, n),
        )
        points = PointCloud(xyz=xyz)
        index, _ = voxel_indices(grid, rig, points.xyz)
        C = int(rng.integers(1, 5))
        A = Parameter("A", rng.standard_normal((C, 4)))
        mix = Parameter("mix", rng.standard_normal((C, 2 * C)))
        fused = rng.standard_normal((2 * C, n))
        op = FusionConv(A, mix, cluster(points, rig, grid, (1, 1, 1)), points.xyz)
        expected = naive_fusionconv(
            A.value, mix.value, fused, points.xyz.astype(np.float64),
            brute_force_neighbors(index, (1, 1, 1)),
        )
        out = op.forward(fused)
        assert out.shape == (C, n)
        np.testing.assert_allclose(out, expected, atol=1e-5)

    def test_cluster_mean_with_unit_bias_and_identity_mix(self, rig, grid, rng, make_cloud):
        points = make_cloud(rig, rng, 60, z_range=(1.0, 10.0))
        clusters = cluster(points, rig, grid)
        C = 3
        A = Parameter("A", np.hstack([np.ones((C, 1)), np.zeros((C, 3))]))
        mix = Parameter("mix", np.hstack([np.eye(C), np.zeros((C, C))]))
        fused = rng.standard_normal((2 * C, 60))
        out = FusionConv(A, mix, clusters, points.xyz).forward(fused)
        expected = np.stack(
            [fused[:C, sorted(members)].mean(axis=1) for members in clusters.as_sets()], axis=1
        )
        np.testing.assert_allclose(out, expected, atol=1e-12)

    def test_linear_in_center_translation(self, rng):
        clusters = cluster_voxels(np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [5, 5, 5]]))
        A = Parameter("A", rng.standard_normal((2, 4)))
        mix = Parameter("mix", rng.standard_normal((2, 4)))
        fused = rng.standard_normal((4, 4))
        xyz = rng.uniform(1.0, 5.0, (4, 3))

        def moved(t):
            shifted = xyz.copy()
            shifted[0] += t
            return FusionConv(A, mix, clusters, shifted).forward(fused)

        base = moved(np.zeros(3))
        t1, t2 = np.array([0.3, -0.2, 0.5]), np.array([-1.0, 0.4, 0.1])
        d1, d2 = moved(t1) - base, moved(t2) - base
        np.testing.assert_allclose(moved(t1 + t2) - base, d1 + d2, atol=1e-12)
        np.testing.assert_allclose(moved(2.5 * t1) - base, 2.5 * d1, atol=1e-12)

        # center 0 gathers {0, 1, 2}; its own term has zero offset
        mixed = mix.value @ fused
        expected = (A.value[:, 1:] @ t1) * (mixed[:, 1] + mixed[:, 2]) / 3
        np.testing.assert_allclose(d1[:, 0], expected, atol=1e-12)
        np.testing.assert_allclose(d1[:, 3], 0.0, atol=1e-12)

    def test_translation_invariant(self, rig, grid, rng, make_cloud):
        points = make_cloud(rig, rng, 30)
        clusters = cluster(points, rig, grid)
        A = Parameter("A", rng.standard_normal((2, 4)))
        mix = Parameter("mix", rng.standard_normal((2, 4)))
        fused = rng.standard_normal((4, 30))
        xyz = points.xyz.astype(np.float64)
        base = FusionConv(A, mix, clusters, xyz).forward(fused)
        moved = FusionConv(A, mix, clusters, xyz + np.array([3.0, -2.0, 7.0])).forward(fused)
        np.testing.assert_allclose(moved, base, atol=1e-9)

    def test_zero_upstream_gives_zero_gradients(self):
        A, mix, op = self.lone()
        op.forward(np.array([[3.0], [0.0]]))
        op.backward(np.zeros((1, 1)))
        np.testing.assert_array_equal(A.grad, 0.0)
        np.testing.assert_array_equal(mix.grad, 0.0)

    def test_bias_gradient_is_mixed_feature(self):
        A, _, op = self.lone()
        op.forward(np.array([[3.0], [0.0]]))
        op.backward(np.ones((1, 1)))
        assert A.grad[0, 0] == pytest.approx(3.0)

    def test_backward_before_forward(self):
        _, _, op = self.lone()
        with pytest.raises(BackwardBeforeForwardError):
            op.backward(np.ones((1, 1)))

    def test_network_on_empty_cloud(self, rig, grid):
        params = ParameterSet()
        network = FusionConvNetwork(params, 2, 2, 100.0, (1, 1, 1), np.random.default_rng(0))
        out = network.forward(np.ones((2, grid.H, grid.W), dtype=np.float32), PointCloud.empty(), rig, grid)
        assert out.shape == (2, 0)


class TestBaselines:
    def test_mlp_identity(self):
        params = ParameterSet()
        mlp = PointMLP(params, channels=2, layers=1, z_max=100.0, rng=np.random.default_rng(0))
        params["mlp.0.weight"].value = np.eye(2, dtype=np.float32)
        out = mlp.transform(np.full((2, 3), 7.0, dtype=np.float32))
        np.testing.assert_allclose(out, 7.0)

    def test_mlp_permutation_equivariant(self, rng):
        params = ParameterSet()
        mlp = PointMLP(params, channels=4, layers=3, z_max=100.0, rng=rng)
        features = rng.standard_normal((4, 10)).astype(np.float32)
        perm = rng.permutation(10)
        np.testing.assert_allclose(mlp.transform(features[:, perm]), mlp.transform(features)[:, perm], rtol=1e-5, atol=1e-5)

    def test_raw_keeps_occupancy_layout(self):
        config = ModelConfig(C=4, pointnet="raw")
        network = build_point_network(config, ParameterSet(), np.random.default_rng(0))
        assert isinstance(network, RawPoints)
        assert network.out_channels == 0
        assert config.volume_channels == 2 * 4 + 1

    def test_factory_dispatch(self):
        for mode, cls in (("mlp", PointMLP), ("fusionconv", FusionConvNetwork)):
            config = ModelConfig(C=2, pointnet=mode)
            assert isinstance(build_point_network(config, ParameterSet(), np.random.default_rng(0)), cls)
