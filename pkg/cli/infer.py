"""``infer``: depth map for one stereo pair."""

from __future__ import annotations

import argparse
import logging
from pathlib import Path

from cli.constants import EXIT_OK
from cli.options import add_mode_flags, check_modes
from dto.point_cloud import PointCloud
from errors import DatasetError
from geometry.io import load_calibration, load_points
from network.io import save_depth
from network.model import VolumetricPropagationNetwork, load_model_config
from scenes.dataset import load_image

logger = logging.getLogger(__name__)


def register(sub) -> None:
    p = sub.add_parser("infer", help="depth map (PFM) for one stereo pair")
    p.add_argument("--left", type=Path, required=True)
    p.add_argument("--right", type=Path, required=True)
    p.add_argument("--points", type=Path, default=None, help="PCB1 or .xyz cloud (optional)")
    p.add_argument("--calib", type=Path, required=True)
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    add_mode_flags(p, defaults=False)
    p.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    check_modes(args, load_model_config(args.model))
    rig = load_calibration(args.calib)
    left = load_image(args.left)
    right = load_image(args.right)
    expected = (3, rig.image_height, rig.image_width)
    for path, image in ((args.left, left), (args.right, right)):
        if image.shape != expected:
            raise DatasetError(
                f"{path}: image is {image.shape[2]}x{image.shape[1]}, "
                f"calibration says {rig.image_width}x{rig.image_height}"
            )
    if rig.image_width % 4 or rig.image_height % 4:
        raise DatasetError(f"image extents {rig.image_width}x{rig.image_height} not divisible by 4")
    if args.points is None:
        logger.info("No point cloud given; running stereo-only")
        points = PointCloud.empty()
    else:
        points = load_points(args.points)

    model = VolumetricPropagationNetwork.load(args.model)
    depth = model.predict(left, right, points, rig)
    save_depth(depth, args.out)
    logger.info("Depth map written to %s", args.out)
    return EXIT_OK
