from __future__ import annotations

import argparse
import logging
import time
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np

from dynmix import __version__
from dynmix.errors import ConfigurationError, UsageError
from dynmix.models import ChainStore, DlmPriors, FitConfig, MixturePriors, RunManifest
from dynmix.services import csv_store
from dynmix.services.config_service import ConfigService
from dynmix.services.diagnostics import MIN_DRAWS, acceptance_report, summarize_curve, summary_table
from dynmix.services.gibbs import run_chains

logger = logging.getLogger(__name__)


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("fit", help="run the Gibbs sampler on an observed series")
    parser.add_argument("--data", type=Path, required=True, help="CSV series (one column, or index,value)")
    parser.add_argument("--mode", help="mixture, bernoulli, binomial:<n> or gaussian")
    parser.add_argument("--link", choices=["logit", "probit"], help="link between states and weights")
    parser.add_argument("--iters", type=int, dest="iterations", help="total iterations")
    parser.add_argument("--burn", type=int, dest="burn_in", help="burn-in iterations")
    parser.add_argument("--thin", type=int, help="thinning lag")
    parser.add_argument("--p", type=int, help="polynomial order")
    parser.add_argument("--seed", type=int, help="random seed")
    parser.add_argument("--progress-every", type=int, dest="progress_every", help="iterations between progress lines")
    parser.add_argument("--priors", type=Path, help="JSON file of prior hyperparameters")
    parser.add_argument("--config", type=Path, help="JSON fit configuration or a previous run manifest")
    parser.add_argument("--mass", type=float, help="HPD interval mass (default 0.9)")
    parser.add_argument("--chains", type=int, help="independent chains run in parallel (default 1)")
    draws = parser.add_mutually_exclusive_group()
    draws.add_argument("--full-draws", action="store_true", help="write every kept curve draw to alpha.csv")
    draws.add_argument(
        "--summary-only",
        action="store_false",
        dest="full_draws",
        help="write the per-time curve summary to alpha.csv (default)",
    )
    parser.add_argument("--out", type=Path, default=Path("."), help="output directory")
    parser.set_defaults(handler=run, full_draws=None)


def resolved_config(config: FitConfig, y: np.ndarray, options: Dict[str, Any]) -> Dict[str, Any]:
    """Configuration echo with every prior hyperparameter and output option spelled out."""
    echo = config.to_dict()
    priors = DlmPriors.from_dict(config.priors, config.p).to_dict()
    if config.data_mode.kind == "mixture":
        priors.update(MixturePriors.from_dict(config.priors, y).to_dict())
    echo["priors"] = priors
    echo.update(options)
    return echo


def write_outputs(
    out_dir: Path,
    store: ChainStore,
    mass: float,
    full_draws: bool,
    chain: Optional[int] = None,
) -> List[Path]:
    paths = [csv_store.write_chain(out_dir / csv_store.output_name("chain", chain), store)]
    alpha_path = out_dir / csv_store.output_name("alpha", chain)
    if full_draws:
        paths.append(csv_store.write_curve_draws(alpha_path, store))
        table = summary_table(store.scalars, store.alpha, store.curve_label, mass)
    else:
        # Per-time rows live in alpha.csv; summary.csv keeps only what chain.csv can rebuild.
        paths.append(csv_store.write_frame(summarize_curve(store, mass), alpha_path))
        table = summary_table(store.scalars, mass=mass)
    paths.append(csv_store.write_summary(out_dir / csv_store.output_name("summary", chain), table))
    if store.acceptance is not None:
        report = acceptance_report(store)
        paths.append(csv_store.write_frame(report, out_dir / csv_store.output_name("acceptance", chain)))
        logger.info(
            "mean acceptance %.3f, %d non-finite proposals rejected",
            float(report["acceptance"].mean()),
            store.nonfinite_proposals,
        )
    return paths


def run(args: argparse.Namespace) -> int:
    service = ConfigService(args.out)
    options = service.load_run_options(
        args.config, {"mass": args.mass, "full_draws": args.full_draws, "chains": args.chains}
    )
    if options["chains"] < 1:
        raise UsageError("--chains must be >= 1")
    if not 0.0 < options["mass"] < 1.0:
        raise UsageError("--mass must lie in (0, 1)")
    overrides = {
        "iterations": args.iterations,
        "burn_in": args.burn_in,
        "thin": args.thin,
        "link": args.link,
        "p": args.p,
        "seed": args.seed,
        "mode": args.mode,
        "progress_every": args.progress_every,
    }
    config = service.load_fit_config(args.config, args.priors, overrides)
    if config.kept_draws < MIN_DRAWS:
        raise ConfigurationError(
            f"(iterations - burn_in) / thin keeps {config.kept_draws} draws; "
            f"HPD intervals need at least {MIN_DRAWS}"
        )
    y = csv_store.read_series(args.data)
    logger.info("fitting %d observations: mode=%s link=%s p=%d", y.size, config.mode, config.effective_link, config.p)

    started = time.monotonic()
    stores = run_chains(config, y, options["chains"])
    outputs: List[Path] = []
    for index, store in enumerate(stores, start=1):
        chain = index if len(stores) > 1 else None
        outputs.extend(write_outputs(args.out, store, options["mass"], options["full_draws"], chain))

    manifest = RunManifest(
        command="fit",
        version=__version__,
        seed=config.seed,
        config=resolved_config(config, y, options),
        data_checksum=csv_store.file_checksum(args.data),
        duration_seconds=time.monotonic() - started,
        outputs=[path.name for path in outputs],
    )
    service.save_manifest(manifest)
    logger.info("kept %d draws per chain, outputs in %s", stores[0].n_kept, args.out)
    return 0
