"""``train``: fit a model on a dataset directory."""

from __future__ import annotations

import argparse
import logging
from pathlib import Path

from cli.constants import EXIT_OK
from cli.options import add_mode_flags, add_model_flags, model_config, validated
from dto.config import LRSchedule, RunConfig
from errors import DatasetError
from network.model import VolumetricPropagationNetwork
from network.training import train, write_loss_log
from scenes.dataset import load_dataset

logger = logging.getLogger(__name__)

CHECKPOINT_NAME = "model.vpn1"
LOSS_LOG_NAME = "loss.csv"


def register(sub) -> None:
    p = sub.add_parser("train", help="train a model, write a checkpoint and loss.csv")
    p.add_argument("--data", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True, help="output directory")
    p.add_argument("--steps", type=int, default=200)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--lr2", type=float, default=1e-4)
    p.add_argument("--decay-step", type=int, default=None)
    p.add_argument("--points-train", type=int, default=1000)
    p.add_argument("--batch", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--progress", action="store_true", help="show a progress bar")
    add_mode_flags(p)
    add_model_flags(p)
    p.set_defaults(handler=run)


def run_config(args: argparse.Namespace) -> RunConfig:
    return validated(
        RunConfig,
        subcommand="train",
        data=args.data,
        model_path=args.out / CHECKPOINT_NAME,
        report=args.out / LOSS_LOG_NAME,
        model=model_config(args),
        steps=args.steps,
        batch=args.batch,
        schedule=validated(LRSchedule, lr=args.lr, lr2=args.lr2, decay_step=args.decay_step),
        seed=args.seed,
        points_train=args.points_train,
    )


def fit(run: RunConfig, samples, progress: bool = False) -> VolumetricPropagationNetwork:
    model = VolumetricPropagationNetwork(run.model)
    logs = train(
        model, samples, run.steps, run.schedule, run.batch, run.points_train, run.seed, progress
    )
    if run.report is not None:
        write_loss_log(logs, run.report, run.model.stages)
    return model


def run(args: argparse.Namespace) -> int:
    config = run_config(args)
    samples = load_dataset(config.data)
    if not samples:
        raise DatasetError(f"{config.data}: no frames to train on")
    args.out.mkdir(parents=True, exist_ok=True)
    model = fit(config, samples, args.progress)
    model.save(config.model_path)
    return EXIT_OK
