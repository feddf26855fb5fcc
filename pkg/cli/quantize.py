"""``quantize``: how far do the dataset's points move when embedded?"""

from __future__ import annotations

import argparse
import logging
from pathlib import Path

import numpy as np

from cli.constants import EXIT_OK
from cli.options import bands, names
from dto.point_cloud import PointCloud
from dto.reports import QuantizationRow
from errors import ConfigError
from scenes.dataset import load_dataset, load_rig
from utils.reports import write_csv
from volume.quantization import (
    DEFAULT_BANDS,
    SPEC_NAMES,
    plot_quantization,
    point_errors,
    quantization_report,
    quantization_specs,
)

logger = logging.getLogger(__name__)

POINT_COLUMNS = ["spec", "z", "z_hat", "abs_err"]


def register(sub) -> None:
    p = sub.add_parser("quantize", help="embedding-error table per range band")
    p.add_argument("--data", type=Path, required=True)
    p.add_argument("--spec", action="append", choices=SPEC_NAMES, default=None,
                   help="volume grid to analyse (repeatable; default fusion and cost)")
    p.add_argument("--report", type=Path, required=True)
    p.add_argument("--plot", type=Path, default=None, help="PNG bar chart of the table")
    p.add_argument("--points-report", type=Path, default=None, help="per-point error CSV")
    p.add_argument("--bands", type=bands, default=list(DEFAULT_BANDS), help="e.g. 0-20,20-40,40-80")
    p.add_argument("--depth-bins", type=int, default=48)
    p.add_argument("--z-max", type=float, default=100.0)
    p.add_argument("--d-max", type=float, default=None)
    p.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    rig = load_rig(args.data)
    samples = load_dataset(args.data)
    clouds = [s.points.xyz for s in samples if s.points.count]
    cloud = PointCloud(xyz=np.concatenate(clouds)) if clouds else PointCloud.empty()
    logger.info("Quantizing %d point(s) from %d frame(s)", cloud.count, len(samples))
    try:
        specs = quantization_specs(
            rig, names(args.spec, ("fusion", "cost")), args.depth_bins, args.z_max, args.d_max
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    rows = quantization_report(cloud, rig, specs, args.bands)
    write_csv(args.report, QuantizationRow.CSV_COLUMNS, rows)
    if args.plot is not None:
        plot_quantization(rows, args.plot)
    if args.points_report is not None:
        per_point = []
        for label, spec in specs.items():
            errors = point_errors(cloud, rig, spec, label)
            per_point.extend(
                [label, float(z), float(z_hat), float(abs(z - z_hat))]
                for z, z_hat in zip(errors.z, errors.z_hat)
            )
        write_csv(args.points_report, POINT_COLUMNS, per_point)
    return EXIT_OK
