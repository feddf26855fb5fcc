"""``eval``: metrics of a trained model on a dataset directory."""

from __future__ import annotations

import argparse
import logging
from pathlib import Path

from cli.constants import EXIT_OK, VPNET_THREADS
from cli.options import add_mode_flags, check_modes, int_list, validated
from dto.config import RunConfig
from dto.reports import MetricsRow
from errors import ConfigError
from network.evaluation import AGGREGATE, evaluate_dataset
from network.model import VolumetricPropagationNetwork, load_model_config
from scenes.dataset import load_dataset
from utils.reports import write_csv

logger = logging.getLogger(__name__)


def register(sub) -> None:
    p = sub.add_parser("eval", help="per-sample metrics CSV")
    p.add_argument("--data", type=Path, required=True)
    p.add_argument("--model", type=Path, required=True, help="VPN1 checkpoint")
    p.add_argument("--points", type=int, default=None,
                   help="resample this many ground-truth points per frame (default: stored cloud)")
    p.add_argument("--dropout", type=float, default=0.0)
    p.add_argument("--points-ladder", type=int_list, default=None,
                   help="comma-separated point counts, one aggregate row each")
    p.add_argument("--report", type=Path, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=VPNET_THREADS)
    add_mode_flags(p, defaults=False)
    p.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    config = load_model_config(args.model)
    check_modes(args, config)
    run_cfg = validated(
        RunConfig,
        subcommand="eval",
        data=args.data,
        model_path=args.model,
        report=args.report,
        model=config,
        seed=args.seed,
        points=args.points,
        dropout=args.dropout,
        threads=args.threads,
    )
    if args.points_ladder and any(c < 0 for c in args.points_ladder):
        raise ConfigError("--points-ladder counts must be >= 0")

    model = VolumetricPropagationNetwork.load(run_cfg.model_path)
    samples = load_dataset(run_cfg.data)
    rows = []
    if args.points_ladder:
        for count in args.points_ladder:
            _, summary = evaluate_dataset(
                model, samples, count, run_cfg.dropout, run_cfg.seed, run_cfg.threads,
                label=f"{AGGREGATE}@{count}",
            )
            if summary is not None:
                rows.append(summary)
    else:
        per_sample, summary = evaluate_dataset(
            model, samples, run_cfg.points, run_cfg.dropout, run_cfg.seed, run_cfg.threads
        )
        rows.extend(per_sample)
        if summary is not None:
            rows.append(summary)
    write_csv(run_cfg.report, MetricsRow.CSV_COLUMNS, rows)
    return EXIT_OK
