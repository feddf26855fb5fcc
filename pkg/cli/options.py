"""Flag groups and converters shared by several subcommands."""

from __future__ import annotations

import argparse
from typing import List, Optional, Sequence, Tuple

from pydantic import ValidationError

from dto.config import ModelConfig
from errors import ConfigError

VOLUME_MODES = ("fusion", "cost", "depth")
POINT_MODES = ("raw", "mlp", "fusionconv")
FUSION_LEVELS = ("early", "intermediate")

# Flags whose value, when given to eval / infer, must agree with the checkpoint.
MODE_FLAGS = ("volume", "pointnet", "fusion")


def float_list(text: str) -> List[float]:
    try:
        return [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def int_list(text: str) -> List[int]:
    try:
        return [int(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def window(text: str) -> Tuple[int, int, int]:
    values = int_list(text)
    if len(values) != 3:
        raise argparse.ArgumentTypeError(f"window needs three extents wu,wv,wd, got {text!r}")
    return tuple(values)


def bands(text: str) -> List[Tuple[float, float]]:
    """``"0-20,20-40,40-80"`` -> [(0, 20), (20, 40), (40, 80)]."""
    out = []
    for tok in text.split(","):
        try:
            lo, hi = (float(part) for part in tok.split("-"))
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad band {tok!r} (expected lo-hi)") from None
        if not lo < hi:
            raise argparse.ArgumentTypeError(f"empty band {tok!r}")
        out.append((lo, hi))
    return out


def mode_triple(text: str) -> Tuple[str, str, str]:
    parts = text.split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"expected volume:pointnet:fusion, got {text!r}")
    volume, pointnet, fusion = parts
    for value, allowed in ((volume, VOLUME_MODES), (pointnet, POINT_MODES), (fusion, FUSION_LEVELS)):
        if value not in allowed:
            raise argparse.ArgumentTypeError(f"{value!r} is not one of {', '.join(allowed)}")
    return volume, pointnet, fusion


def add_mode_flags(parser: argparse.ArgumentParser, defaults: bool = True) -> None:
    parser.add_argument("--volume", choices=VOLUME_MODES, default="fusion" if defaults else None)
    parser.add_argument("--pointnet", choices=POINT_MODES, default="fusionconv" if defaults else None)
    parser.add_argument("--fusion", choices=FUSION_LEVELS, default="intermediate" if defaults else None)


def add_model_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("model")
    group.add_argument("--channels", type=int, default=8, help="feature channels C")
    group.add_argument("--depth-bins", type=int, default=48, help="depth bins D")
    group.add_argument("--z-max", type=float, default=100.0, help="far limit in meters")
    group.add_argument("--stages", type=int, default=3, help="aggregation stages S")
    group.add_argument("--weights", type=float_list, default=None, help="per-stage loss weights")
    group.add_argument("--agg-channels", type=int, default=8)
    group.add_argument("--window", type=window, default=(1, 1, 1), help="cluster window wu,wv,wd")
    group.add_argument("--d-max", type=float, default=None, help="disparity range of cost/depth volumes")


def model_config(args: argparse.Namespace, seed: Optional[int] = None, **overrides) -> ModelConfig:
    fields = dict(
        C=args.channels,
        D=args.depth_bins,
        z_max=args.z_max,
        stages=args.stages,
        weights=args.weights or [],
        volume=getattr(args, "volume", "fusion"),
        pointnet=getattr(args, "pointnet", "fusionconv"),
        fusion=getattr(args, "fusion", "intermediate"),
        agg_channels=args.agg_channels,
        window=args.window,
        d_max=args.d_max,
        seed=args.seed if seed is None else seed,
    )
    fields.update(overrides)
    return ModelConfig.build(**fields)


def check_modes(args: argparse.Namespace, config: ModelConfig) -> None:
    """Reject explicitly passed mode flags that contradict the checkpoint."""
    for flag in MODE_FLAGS:
        given = getattr(args, flag, None)
        if given is not None and given != getattr(config, flag):
            raise ConfigError(
                f"--{flag} {given} does not match the checkpoint ({flag}={getattr(config, flag)})"
            )


def validated(model_cls, **fields):
    """Build a pydantic model, turning validation failures into ConfigError."""
    try:
        return model_cls(**fields)
    except ValidationError as exc:
        raise ConfigError("; ".join(err["msg"] for err in exc.errors())) from exc


def names(values: Optional[Sequence[str]], default: Sequence[str]) -> List[str]:
    return list(values) if values else list(default)
