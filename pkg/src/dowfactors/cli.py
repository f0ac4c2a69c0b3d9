"""
Command-line entry point.

    dowfactors validate --data dow_jones_index.data
    dowfactors report --data dow_jones_index.data --out out/ --seed 42

Exit status: 0 success, 1 data or validation failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from typing import Optional, Sequence

from . import clustering, evaluation, ingest, report
from .config import Config, ConfigError, coerce, merge, read_config
from .errors import DowFactorsError, InvalidK, UnknownTicker
from .models import serialize

log = logging.getLogger("dowfactors")

COMMANDS = {
    "validate": "parse, deduplicate and validate the dataset",
    "eda": "price lines, histograms and log-price figures",
    "cluster": "k-means assignments, elbow curve and anchor cluster members",
    "fit": "train the three models and serialize them",
    "evaluate": "full model comparison report and accuracy figures",
    "report": "everything above in one run",
}

# flag name -> help; every Config field is exposed
FLAGS = {
    "data": "dataset file (UCI dow_jones_index.data layout)",
    "out": "output directory (default: out)",
    "target": "comma-separated target tickers (default: DIS)",
    "seed": "master random seed (default: 42)",
    "k": "number of clusters (default: 3)",
    "k_max": "largest k on the elbow curve (default: 10)",
    "restarts": "k-means restarts (default: 10)",
    "max_iter": "k-means iteration cap (default: 300)",
    "tol": "k-means improvement tolerance (default: 1e-6)",
    "trees": "random forest tree count (default: 100)",
    "depth": "random forest max depth (default: 6)",
    "min_leaf": "minimum rows per leaf (default: 2)",
    "mtry": "features tried per split, 0 = ceil(p/3) (default: 0)",
    "bootstrap": "bootstrap resampling for the forest, true/false (default: true)",
    "stages": "gradient boosting stage count (default: 100)",
    "learning_rate": "gradient boosting learning rate (default: 0.1)",
    "boost_depth": "gradient boosting tree depth (default: 3)",
    "split": "temporal | holdout:<fraction> (default: temporal)",
    "bins": "histogram bin count (default: 20)",
    "hml": "optional date,value file with the HML factor",
    "risk_free": "optional date,value file with the weekly risk-free rate",
    "index": "optional date,value file with the index return",
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="flat key=value configuration file")
    common.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    for key, help_ in FLAGS.items():
        common.add_argument("--" + key.replace("_", "-"), dest=key, metavar="VALUE",
                            default=None, help=help_)
    parser = argparse.ArgumentParser(
        prog="dowfactors",
        description="Factor engineering, clustering and model comparison on the weekly "
                    "Dow Jones Index dataset.")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True
    for name, help_ in COMMANDS.items():
        sub.add_parser(name, parents=[common], help=help_, description=help_)
    return parser


def resolve_config(args, parser) -> Config:
    file_values = {}
    try:
        if args.config:
            file_values = read_config(args.config)
        flag_values = {k: coerce(k, getattr(args, k)) for k in FLAGS
                       if getattr(args, k) is not None}
        cfg = merge(Config(), file_values, flag_values).check()
    except (ConfigError, OSError) as exc:
        parser.error(str(exc))
    if not cfg.data:
        parser.error("--data is required")
    return cfg


def _load(cfg: Config):
    d = ingest.dedup(ingest.parse_dataset(cfg.data))
    return d, ingest.validate(d)


def run(command: str, cfg: Config) -> int:
    d, vrep = _load(cfg)
    w = report.Writer(cfg.out)
    w.text("config.txt", cfg.to_text())
    w.text("validation.txt", vrep.to_text())
    w.text("validation.kv", vrep.to_kv())
    if command == "validate":
        sys.stdout.write(vrep.to_text())
        w.manifest()
        return 0

    missing = [t for t in cfg.target if t not in d.tickers]
    if missing:
        raise UnknownTicker(f"unknown target ticker(s): {', '.join(missing)}")
    n = len(d.tickers)
    if cfg.k > n or cfg.k_max > n:
        raise InvalidK(f"k and k_max must not exceed the ticker count ({n})")

    if command in ("eda", "report"):
        log.info("writing exploratory figures")
        report.emit_eda(d, w, cfg.bins)

    prep = None
    if command in ("cluster", "fit", "evaluate", "report"):
        log.info("building factors and clustering")
        prep = evaluation.prepare(d, cfg)
    if command in ("cluster", "report"):
        curve = clustering.elbow_curve(prep.returns, cfg.k_max, cfg.seed, cfg.restarts,
                                       cfg.max_iter, cfg.tol)
        report.emit_clusters(prep.clusters, curve, cfg.target, w)

    if command == "fit":
        spec = evaluation.parse_split(cfg.split, cfg.seed)
        for target in cfg.target:
            dm, train, _, _ = evaluation.design_for(prep, target, spec)
            fitted = evaluation.fit_all(dm.X[train], dm.y[train], cfg, cfg.seed)
            for name, (model, _) in fitted.items():
                w.text(f"models/{target}_{name}.json", serialize.dumps(model))

    if command in ("evaluate", "report"):
        log.info("fitting and scoring models")
        rep = evaluation.evaluate_all(d, cfg, prep)
        for s in rep.scores:
            w.text(f"models/{s.target}_{s.name}.json", serialize.dumps(s.model))
        report.emit_evaluation(rep, w)
        sys.stdout.write(rep.to_text())

    w.manifest()
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR,
                        format="%(levelname)s %(name)s: %(message)s")
    cfg = resolve_config(args, parser)
    try:
        return run(args.command, cfg)
    except (InvalidK, UnknownTicker) as exc:
        parser.print_usage(sys.stderr)
        print(f"dowfactors: error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"dowfactors: error: file not found: {exc.filename}", file=sys.stderr)
        return 1
    except (DowFactorsError, OSError) as exc:
        print(f"dowfactors: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
