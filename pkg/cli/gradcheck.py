"""``gradcheck``: finite-difference check of every registered probe."""

from __future__ import annotations

import argparse
import logging
from pathlib import Path

# registration side effects
import core.probes  # noqa: F401
import network.probes  # noqa: F401
import pointnet.probes  # noqa: F401
import volume.probes  # noqa: F401
from cli.constants import EXIT_CHECK, EXIT_OK
from core.gradcheck import DEFAULT_STEP, run_suite
from utils.reports import write_csv

logger = logging.getLogger(__name__)

REPORT_COLUMNS = ["kind", "max_error", "tolerance", "probes", "status"]


def register(sub) -> None:
    p = sub.add_parser("gradcheck", help="finite-difference check of every backward")
    p.add_argument("--kinds", nargs="*", default=None, help="subset of probe kinds")
    p.add_argument("--probes", type=int, default=None, help="random instances per kind")
    p.add_argument("--step", type=float, default=DEFAULT_STEP)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--report", type=Path, default=None)
    p.set_defaults(handler=run)


def format_table(reports) -> str:
    width = max([len(r.kind) for r in reports] + [4])
    lines = [f"{'kind':<{width}}  {'max_error':>10}  {'tolerance':>9}  status"]
    for r in reports:
        lines.append(f"{r.kind:<{width}}  {r.max_error:>10.3e}  {r.tolerance:>9.1e}  {r.status}")
    return "\n".join(lines)


def run(args: argparse.Namespace) -> int:
    reports = run_suite(args.kinds, step=args.step, probes=args.probes, seed=args.seed)
    print(format_table(reports))
    if args.report is not None:
        rows = [[r.kind, r.max_error, r.tolerance, r.probes, r.status] for r in reports]
        write_csv(args.report, REPORT_COLUMNS, rows)
    failed = [r.kind for r in reports if not r.passed]
    if failed:
        logger.error("gradcheck failed for: %s", ", ".join(failed))
        return EXIT_CHECK
    return EXIT_OK
