"""
Model assembly.

  - features      shared-weight image towers
  - aggregation   sequential 3D stages with one head each
  - regression    soft-argmax depth and x4 upsampling
  - losses        masked smooth-L1 per stage, weighted total
  - metrics       RMSE / MAE / iRMSE / iMAE (+ AbsRel, SqRel)
  - model         the end-to-end network and its checkpoint sidecar
  - io            PFM depth maps

The training loop lives in ``network.training``.
"""

from network.features import FeatureExtractor, extract_image_features
from network.aggregation import Aggregator, aggregate
from network.regression import DepthRegressor, regress_depth, regress_depth_map
from network.losses import depth_loss, total_loss
from network.metrics import aggregate_metrics, evaluate_metrics
from network.model import VolumetricPropagationNetwork, forward_pipeline
from network.io import load_depth, save_depth

__all__ = [
    "Aggregator",
    "DepthRegressor",
    "FeatureExtractor",
    "VolumetricPropagationNetwork",
    "aggregate",
    "aggregate_metrics",
    "depth_loss",
    "evaluate_metrics",
    "extract_image_features",
    "forward_pipeline",
    "load_depth",
    "regress_depth",
    "regress_depth_map",
    "save_depth",
    "total_loss",
]
