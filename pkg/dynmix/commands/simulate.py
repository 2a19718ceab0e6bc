from __future__ import annotations

import argparse
import logging
import time
from pathlib import Path

import numpy as np

from dynmix import __version__
from dynmix.errors import UsageError
from dynmix.models import RunManifest
from dynmix.services import csv_store
from dynmix.services.config_service import ConfigService
from dynmix.services.synthdata import CURVES, DESIGNS, generate

logger = logging.getLogger(__name__)


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("simulate", help="generate a synthetic series with a known weight curve")
    parser.add_argument(
        "--design",
        required=True,
        help=f"data design: {', '.join(DESIGNS)} (binomial takes binomial:<n>)",
    )
    parser.add_argument("--curve", required=True, choices=CURVES, help="true weight trajectory")
    parser.add_argument("--length", type=int, required=True, help="series length T")
    parser.add_argument("--seed", type=int, default=0, help="random seed")
    parser.add_argument("--out", type=Path, default=Path("."), help="output directory")
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    if args.length < 1:
        raise UsageError("--length must be >= 1")
    started = time.monotonic()
    data = generate(np.random.default_rng(args.seed), args.design, args.curve, args.length)
    data_path = csv_store.write_data(args.out / "data.csv", data.y)
    truth_path = csv_store.write_truth(args.out / "truth.csv", data)
    manifest = RunManifest(
        command="simulate",
        version=__version__,
        seed=args.seed,
        config={"design": args.design, "curve": args.curve, "length": args.length},
        data_checksum=csv_store.file_checksum(data_path),
        duration_seconds=time.monotonic() - started,
        outputs=[data_path.name, truth_path.name],
    )
    ConfigService(args.out).save_manifest(manifest)
    logger.info("wrote %d observations to %s", data.T, args.out)
    return 0
