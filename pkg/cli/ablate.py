"""
``ablate``: train and evaluate each mode triple over several seeds with one
shared budget, one CSV row per run and a ``mean`` row per triple.
"""

from __future__ import annotations

import argparse
import logging
from pathlib import Path
from typing import List

import numpy as np

from cli.constants import EXIT_DATA, EXIT_OK, VPNET_THREADS
from cli.options import add_model_flags, mode_triple, model_config, validated
from cli.train import fit
from dto.config import LRSchedule, RunConfig
from dto.reports import AblationRow
from errors import DatasetError
from network.evaluation import evaluate_dataset
from scenes.dataset import load_dataset
from utils.reports import write_csv

logger = logging.getLogger(__name__)

DEFAULT_MODES = [
    ("fusion", "fusionconv", "intermediate"),
    ("cost", "fusionconv", "intermediate"),
    ("fusion", "raw", "intermediate"),
    ("fusion", "raw", "early"),
]
METRICS = ("rmse_mm", "mae_mm", "irmse_per_km", "imae_per_km")


def register(sub) -> None:
    p = sub.add_parser("ablate", help="train + evaluate mode triples over seeds")
    p.add_argument("--data", type=Path, required=True)
    p.add_argument("--eval-data", type=Path, default=None, help="evaluation set (default --data)")
    p.add_argument("--modes", type=mode_triple, nargs="+", default=DEFAULT_MODES,
                   help="volume:pointnet:fusion triples")
    p.add_argument("--seeds", type=int, default=3)
    p.add_argument("--steps", type=int, default=200)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--lr2", type=float, default=1e-4)
    p.add_argument("--decay-step", type=int, default=None)
    p.add_argument("--points-train", type=int, default=1000)
    p.add_argument("--points", type=int, default=None, help="evaluation points per frame")
    p.add_argument("--batch", type=int, default=1)
    p.add_argument("--report", type=Path, required=True)
    p.add_argument("--threads", type=int, default=VPNET_THREADS)
    add_model_flags(p)
    p.set_defaults(handler=run, seed=0)


def run(args: argparse.Namespace) -> int:
    samples = load_dataset(args.data)
    if not samples:
        raise DatasetError(f"{args.data}: no frames to train on")
    eval_samples = load_dataset(args.eval_data) if args.eval_data else samples
    schedule = validated(LRSchedule, lr=args.lr, lr2=args.lr2, decay_step=args.decay_step)

    rows: List[AblationRow] = []
    for volume, pointnet, fusion in args.modes:
        runs: List[AblationRow] = []
        for seed in range(args.seeds):
            config = model_config(args, seed=seed, volume=volume, pointnet=pointnet, fusion=fusion)
            run_cfg = validated(
                RunConfig,
                subcommand="ablate",
                data=args.data,
                model=config,
                steps=args.steps,
                batch=args.batch,
                schedule=schedule,
                seed=seed,
                points_train=args.points_train,
            )
            logger.info("Ablation %s, seed %d", config.mode_label, seed)
            model = fit(run_cfg, samples)
            _, summary = evaluate_dataset(
                model, eval_samples, args.points, seed=seed, threads=max(1, args.threads)
            )
            if summary is None:
                logger.error("No evaluable frame in the evaluation set")
                return EXIT_DATA
            runs.append(
                AblationRow(
                    volume=volume, pointnet=pointnet, fusion=fusion, seed=str(seed),
                    **{m: getattr(summary, m) for m in METRICS},
                )
            )
        rows.extend(runs)
        if runs:
            rows.append(
                AblationRow(
                    volume=volume, pointnet=pointnet, fusion=fusion, seed="mean",
                    **{m: float(np.nanmean([getattr(r, m) for r in runs])) for m in METRICS},
                )
            )
    write_csv(args.report, AblationRow.CSV_COLUMNS, rows)
    return EXIT_OK
