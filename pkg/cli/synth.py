"""``synth``: render a synthetic dataset directory."""

from __future__ import annotations

import argparse
import logging
from pathlib import Path

from cli.constants import EXIT_OK, VPNET_THREADS
from cli.options import validated
from dto.camera import CameraRig
from errors import ConfigError
from scenes.dataset import save_dataset
from scenes.generator import generate_scenes

logger = logging.getLogger(__name__)


def register(sub) -> None:
    p = sub.add_parser("synth", help="render a synthetic stereo + LiDAR dataset")
    p.add_argument("--out", type=Path, required=True, help="dataset directory")
    p.add_argument("--frames", type=int, default=4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--width", type=int, default=128)
    p.add_argument("--height", type=int, default=64)
    p.add_argument("--objects", type=int, default=4)
    p.add_argument("--rig-fx", type=float, default=100.0, help="focal length in pixels (fx = fy)")
    p.add_argument("--rig-baseline", type=float, default=0.5, help="stereo baseline in meters")
    p.add_argument("--points", type=int, default=1000, help="LiDAR points stored per frame")
    p.add_argument("--z-max", type=float, default=100.0)
    p.add_argument("--threads", type=int, default=VPNET_THREADS)
    p.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    if args.width % 4 or args.height % 4:
        raise ConfigError(f"--width/--height must be divisible by 4, got {args.width}x{args.height}")
    if args.frames < 0 or args.objects < 1 or args.points < 0:
        raise ConfigError("need --frames >= 0, --objects >= 1 and --points >= 0")
    rig = validated(
        CameraRig,
        fx=args.rig_fx,
        fy=args.rig_fx,
        cx=(args.width - 1) / 2.0,
        cy=(args.height - 1) / 2.0,
        baseline=args.rig_baseline,
        image_width=args.width,
        image_height=args.height,
    )
    samples = generate_scenes(
        args.frames, args.seed, rig, args.objects, args.z_max, args.points, max(1, args.threads)
    )
    save_dataset(samples, args.out, rig)
    return EXIT_OK
