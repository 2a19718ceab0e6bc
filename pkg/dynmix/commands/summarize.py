from __future__ import annotations

import argparse
import logging
from pathlib import Path

from dynmix.errors import UsageError
from dynmix.services import csv_store
from dynmix.services.diagnostics import DEFAULT_MASS, summary_table

logger = logging.getLogger(__name__)


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("summarize", help="recompute medians and HPD intervals from a saved chain")
    parser.add_argument("--chain", type=Path, required=True, help="chain CSV written by fit")
    parser.add_argument("--alpha", type=Path, help="full curve draws written by fit --full-draws")
    parser.add_argument("--mass", type=float, default=DEFAULT_MASS, help="HPD interval mass")
    parser.add_argument("--out", type=Path, default=Path("summary.csv"), help="summary CSV to write")
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    if not 0.0 < args.mass < 1.0:
        raise UsageError("--mass must lie in (0, 1)")
    scalars = csv_store.read_chain(args.chain)
    label, curve = "alpha", None
    if args.alpha is not None:
        label, curve = csv_store.read_curve_draws(args.alpha)
    table = summary_table(scalars, curve, label, args.mass)
    csv_store.write_summary(args.out, table)
    logger.info("summarized %d quantities into %s", len(table), args.out)
    return 0
