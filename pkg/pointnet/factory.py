import numpy as np

from core.parameters import ParameterSet
from dto.config import ModelConfig
from pointnet.base import PointNetwork
from pointnet.baselines import PointMLP, RawPoints
from pointnet.fusionconv import FusionConvNetwork


def build_point_network(
    config: ModelConfig, params: ParameterSet, rng: np.random.Generator
) -> PointNetwork:
    """
    Instantiate the point network named by ``config.pointnet``:
      - "raw"         → RawPoints          (occupancy only)
      - "mlp"         → PointMLP           (per-point stack)
      - "fusionconv"  → FusionConvNetwork  (image-guided, clustered)
    """
    mode = config.pointnet
    if mode == "raw":
        return RawPoints()
    if mode == "mlp":
        return PointMLP(params, config.C, config.mlp_layers, config.z_max, rng)
    if mode == "fusionconv":
        return FusionConvNetwork(
            params, config.C, config.fusionconv_layers, config.z_max, config.window, rng
        )
    raise ValueError(f"Unknown point network: {mode!r}")
