"""
DwellRec command line.

Subcommands:
- gen: generate a synthetic catalog with train and test impression logs
- stats: dwell-time distribution of the click histories
- train: train one encoder variant (or every configured variant)
- eval: evaluate a checkpoint on Normal, Real or Robust sets, optionally
  with history dwell masked
- sweep: Real(theta) evaluation over a threshold range
- grad-check: finite-difference check of every layer and encoder

Every command writes one manifest.json into its output directory. Exit codes:
0 success, 1 usage error, 2 data or configuration error, 3 numeric failure.
"""

import argparse
import csv
import io
import json
import sys
import time
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import yaml
from pydantic import ValidationError

from dwellrec import __version__
from dwellrec.core.config import get_settings
from dwellrec.core.exceptions import ConfigError, DwellRecError, NumericError, UsageError, config_error_from
from dwellrec.core.experiment import PROFILES, AppConfig, EmbeddingConfig, EvaluationConfig, load_config
from dwellrec.core.logging import get_logger, setup_logging
from dwellrec.domain.datagen import build_eval_set, generate_corpus, history_dwell, split_by_user
from dwellrec.domain.dwell import dwell_stats
from dwellrec.domain.encoders.variants import available_variants
from dwellrec.domain.entities import DwellScheme, EvalMode
from dwellrec.infrastructure.caching import CacheBackend, configure_cache
from dwellrec.infrastructure.manifest import write_manifest
from dwellrec.services.embeddings import EmbeddingStore, build_synthetic_store, load_store
from dwellrec.services.evaluation import RandomScorer, evaluate, load_sweep_models, run_masked_eval, run_sweep
from dwellrec.services.gradcheck_suite import run_gradcheck_suite
from dwellrec.services.logs import NEWS_FILE, TEST_FILE, TRAIN_FILE, read_impressions, read_news, write_dataset
from dwellrec.services.remote import fetch_remote
from dwellrec.services.training import CONFIG_FILE, load_trained_model, run_training

logger = get_logger(__name__)

CLI_DEFAULT_PROFILE = "desk"


class ArgumentParser(argparse.ArgumentParser):
    """argparse parser that reports usage errors as UsageError."""

    def error(self, message: str) -> None:
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: {message}")


# =============================================================================
# Shared helpers
# =============================================================================


def _parse_overrides(pairs: Sequence[str]) -> Dict[str, Any]:
    overrides = {}
    for pair in pairs:
        key, sep, raw = pair.partition("=")
        if not sep or not key:
            raise UsageError(f"--override expects KEY=VALUE, got {pair!r}")
        overrides[key.strip()] = yaml.safe_load(raw)
    return overrides


def _config_path(args: argparse.Namespace) -> Optional[str]:
    return args.config or get_settings().config_path


def _load_app_config(args: argparse.Namespace) -> AppConfig:
    return load_config(_config_path(args), profile=args.profile, overrides=_parse_overrides(args.overrides))


def _out_dir(args: argparse.Namespace, command: str) -> Path:
    if args.out:
        return Path(args.out)
    return Path(get_settings().runs_dir) / command


def _data_dir(args: argparse.Namespace, cfg: AppConfig) -> Path:
    return Path(args.data or cfg.paths.data_dir)


def _seed(args: argparse.Namespace, cfg: AppConfig) -> int:
    return cfg.training.seed if args.seed is None else args.seed


def _write_json(path: Path, payload: Any) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    return path


def remote_cache(emb: EmbeddingConfig) -> CacheBackend:
    """
    Cache for remote lookups: the store file when one is configured
    (written as NREC when embeddings.binary is set), in memory otherwise.
    """
    if emb.store_path:
        return configure_cache("store", path=emb.store_path, binary=emb.binary)
    return configure_cache("memory")


def resolve_store(cfg: AppConfig, data_dir: Path, news_dim: int) -> Tuple[EmbeddingStore, List[Path]]:
    """
    Embedding store for a data directory.

    Source, in order of precedence: the remote service (cached in the store
    file when one is set), a store file, or vectors synthesized from the
    catalog's topic mixtures.

    Returns:
        Tuple of (store, input files read)

    Raises:
        ConfigError: The store dimension differs from encoder.news_dim
    """
    emb = cfg.embeddings
    if emb.store_path and not emb.remote_endpoint:
        path = Path(emb.store_path)
        store, inputs = load_store(path), [path]
    else:
        news_path = data_dir / NEWS_FILE
        news = read_news(news_path)
        inputs = [news_path]
        if emb.remote_endpoint:
            result = fetch_remote(
                emb.remote_endpoint,
                [item.news_id for item in news],
                cache=remote_cache(emb),
                batch_size=emb.remote_batch_size,
                max_concurrency=emb.remote_concurrency,
                attempts=emb.remote_attempts,
                backoff_seconds=emb.remote_backoff_seconds,
                timeout_seconds=emb.remote_timeout_seconds,
                expected_dim=news_dim,
            )
            store = EmbeddingStore(dim=news_dim)
            for news_id, vector in result.found().items():
                store.add(news_id, vector)
        else:
            store = build_synthetic_store(news, news_dim, emb.seed, emb.noise_scale)

    if store.dim != news_dim:
        raise ConfigError(
            f"embedding store has dimension {store.dim}, the encoder expects {news_dim}",
            key="encoder.news_dim",
        )
    return store, inputs


def _run_config(ckpt: Path, cfg: AppConfig) -> AppConfig:
    """Experiment config saved with a training run, falling back to cfg."""
    run_dir = ckpt if ckpt.is_dir() else ckpt.parent
    saved = run_dir / CONFIG_FILE
    if not saved.exists():
        return cfg
    return load_config(saved)


# =============================================================================
# Commands
# =============================================================================


def cmd_gen(args: argparse.Namespace, cfg: AppConfig) -> Tuple[Path, int, List[Path], List[Path]]:
    out = Path(args.out) if args.out else Path(cfg.paths.data_dir)
    seed = _seed(args, cfg)
    news, impressions = generate_corpus(cfg.generator, seed=seed)
    train, test = split_by_user(impressions, cfg.generator.test_impressions_per_user)
    outputs = write_dataset(out, news, train, test)
    return out, seed, [], outputs


def cmd_stats(args: argparse.Namespace, cfg: AppConfig) -> Tuple[Path, Optional[int], List[Path], List[Path]]:
    source = _data_dir(args, cfg)
    if source.is_dir():
        inputs = [p for p in (source / TRAIN_FILE, source / TEST_FILE) if p.exists()]
    else:
        inputs = [source]
    if not inputs:
        raise ConfigError(f"no impression log found in {source}", key="paths.data_dir")
    impressions = [imp for path in inputs for imp in read_impressions(path)]

    scheme = DwellScheme(args.scheme) if args.scheme else cfg.encoder.dwell_scheme
    dist = dwell_stats(history_dwell(impressions), scheme)
    logger.info(
        f"{dist.n_records} history clicks: unknown {dist.unknown_fraction:.4f}, "
        f"over 5s {dist.over_5s_fraction:.4f}, mean known {dist.mean_known_seconds:.1f}s"
    )

    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["bucket", "count", "fraction"])
    for bucket, count, fraction in dist.csv_rows():
        writer.writerow([bucket, count, repr(fraction)])
    table = buffer.getvalue()
    sys.stdout.write(table)

    out = _out_dir(args, "stats")
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / "dwell_buckets.csv"
    csv_path.write_text(table, encoding="utf-8")
    summary_path = _write_json(out / "dwell_summary.json", {**dist.summary(), "scheme": dist.scheme.value})
    return out, None, inputs, [csv_path, summary_path]


def cmd_train(args: argparse.Namespace, cfg: AppConfig) -> Tuple[Path, int, List[Path], List[Path]]:
    data_dir = _data_dir(args, cfg)
    seed = _seed(args, cfg)
    out = _out_dir(args, "train")
    train_path = data_dir / TRAIN_FILE
    train = read_impressions(train_path)

    if args.variant == "all":
        jobs = [(cfg.with_encoder(variant=v), out / v.value) for v in cfg.evaluation.variants]
    else:
        run_cfg = cfg.with_encoder(variant=args.variant) if args.variant else cfg
        jobs = [(run_cfg, out)]

    store, inputs = resolve_store(cfg, data_dir, cfg.encoder.news_dim)
    outputs: List[Path] = []
    summary = {}
    for run_cfg, run_dir in jobs:
        run = run_training(run_cfg, seed, train, store, run_dir)
        variant = run_cfg.encoder.variant.value
        summary[variant] = {"epoch_losses": run.epoch_losses, "checkpoint": run.checkpoint_path}
        outputs.extend(Path(p) for p in run.epoch_checkpoints)
        outputs.append(Path(run.checkpoint_path))

    sys.stdout.write(json.dumps(summary, sort_keys=True, indent=2) + "\n")
    return out, seed, [train_path, *inputs], outputs


def cmd_eval(args: argparse.Namespace, cfg: AppConfig) -> Tuple[Path, Optional[int], List[Path], List[Path]]:
    ckpt = Path(args.ckpt)
    model = load_trained_model(ckpt)
    run_cfg = _run_config(ckpt, cfg)
    data_dir = _data_dir(args, cfg)
    test_path = data_dir / TEST_FILE
    test = read_impressions(test_path)
    store, inputs = resolve_store(run_cfg, data_dir, model.cfg.news_dim)

    theta = cfg.evaluation.theta if args.theta is None else args.theta
    eval_set = build_eval_set(test, args.set, theta)
    evaluation = cfg.evaluation
    out = _out_dir(args, "eval")

    outputs = []
    if args.mask_dwell:
        gtb = run_masked_eval(model, store, eval_set, evaluation.max_skip_fraction)
        report = gtb.masked
        outputs.append(_write_json(out / "gtb.json", gtb.to_dict()))
        random_report = evaluate(RandomScorer(seed=evaluation.random_seed), None, eval_set, evaluation.max_skip_fraction)
        outputs.append(_write_json(out / "random.json", random_report.to_dict()))
        logger.info(
            f"Masked AUC {report.auc:.4f} against random {random_report.auc:.4f} (seed {evaluation.random_seed})"
        )
    else:
        report = evaluate(model, store, eval_set, evaluation.max_skip_fraction)
    if eval_set.flagged:
        logger.info(f"{len(eval_set.flagged)} impressions hold an Unknown-dwell positive")

    payload = report.to_dict()
    outputs.insert(0, _write_json(out / "report.json", payload))
    sys.stdout.write(json.dumps(payload, sort_keys=True) + "\n")
    return out, None, [ckpt, test_path, *inputs], outputs


def cmd_sweep(args: argparse.Namespace, cfg: AppConfig) -> Tuple[Path, Optional[int], List[Path], List[Path]]:
    bounds = {"sweep_min": args.min, "sweep_max": args.max, "sweep_step": args.step}
    try:
        evaluation = EvaluationConfig.model_validate(
            {**cfg.evaluation.model_dump(), **{k: v for k, v in bounds.items() if v is not None}}
        )
    except ValidationError as exc:
        raise config_error_from(exc, "evaluation") from None
    models = load_sweep_models(args.ckpt_dir, evaluation.variants)

    first = next(iter(models.values()))
    run_cfg = _run_config(Path(args.ckpt_dir) / first.variant, cfg)
    data_dir = _data_dir(args, cfg)
    test_path = data_dir / TEST_FILE
    test = read_impressions(test_path)
    store, inputs = resolve_store(run_cfg, data_dir, first.cfg.news_dim)

    result = run_sweep(models, store, test, evaluation.thresholds(), evaluation.max_skip_fraction)
    if result.empty_thresholds:
        logger.warning(f"empty Real sets at thresholds {result.empty_thresholds}")
    table = result.to_csv()
    sys.stdout.write(table)

    out = _out_dir(args, "sweep")
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / "sweep.csv"
    csv_path.write_text(table, encoding="utf-8")
    return out, None, [Path(args.ckpt_dir), test_path, *inputs], [csv_path]


def cmd_grad_check(args: argparse.Namespace, cfg: AppConfig) -> Tuple[Path, int, List[Path], List[Path]]:
    seed = 0 if args.seed is None else args.seed
    report = run_gradcheck_suite(trials=args.trials, seed=seed, max_coords=args.max_coords)
    out = _out_dir(args, "grad-check")
    path = _write_json(out / "gradcheck.json", report.to_dict())
    sys.stdout.write(json.dumps({"passed": report.passed, "max_rel_error": report.max_rel_error}) + "\n")
    if not report.passed:
        failed = [case.name for case in report.cases if not case.passed(report.tolerance)]
        raise NumericError(f"gradient check failed for {', '.join(failed)}")
    return out, seed, [], [path]


Command = Callable[[argparse.Namespace, AppConfig], Tuple[Path, Optional[int], List[Path], List[Path]]]

COMMANDS: Dict[str, Command] = {
    "gen": cmd_gen,
    "stats": cmd_stats,
    "train": cmd_train,
    "eval": cmd_eval,
    "sweep": cmd_sweep,
    "grad-check": cmd_grad_check,
}


# =============================================================================
# Parser and dispatch
# =============================================================================


def build_parser() -> ArgumentParser:
    shared = ArgumentParser(add_help=False)
    shared.add_argument("--config", help="experiment configuration (JSON or YAML)")
    shared.add_argument("--profile", choices=sorted(PROFILES), default=CLI_DEFAULT_PROFILE)
    shared.add_argument("--seed", type=int, default=None)
    shared.add_argument("--out", help="output directory")
    shared.add_argument(
        "--override", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
        help="override a configuration key, e.g. training.epochs=5",
    )

    parser = ArgumentParser(prog="dwellrec", description="Dwell-time aware news recommendation experiments")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--log-level", default=None)
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", required=True)

    sub.add_parser("gen", parents=[shared], help="generate synthetic logs")

    stats = sub.add_parser("stats", parents=[shared], help="dwell-time distribution")
    stats.add_argument("--data", help="impression log file or data directory")
    stats.add_argument("--scheme", choices=[s.value for s in DwellScheme])

    train = sub.add_parser("train", parents=[shared], help="train an encoder")
    train.add_argument("--data", help="data directory")
    train.add_argument("--variant", choices=[*available_variants(), "all"])

    ev = sub.add_parser("eval", parents=[shared], help="evaluate a checkpoint")
    ev.add_argument("--ckpt", required=True, help="checkpoint file or training run directory")
    ev.add_argument("--data", help="data directory")
    ev.add_argument("--set", dest="set", choices=[m.value for m in EvalMode], default=EvalMode.NORMAL.value)
    ev.add_argument("--theta", type=float, default=None)
    ev.add_argument("--mask-dwell", action="store_true")

    sweep = sub.add_parser("sweep", parents=[shared], help="Real(theta) threshold sweep")
    sweep.add_argument("--ckpt-dir", required=True, help="directory holding one run directory per variant")
    sweep.add_argument("--data", help="data directory")
    sweep.add_argument("--min", type=float, default=None)
    sweep.add_argument("--max", type=float, default=None)
    sweep.add_argument("--step", type=float, default=None)

    grad = sub.add_parser("grad-check", parents=[shared], help="finite-difference gradient checks")
    grad.add_argument("--trials", type=int, default=100)
    grad.add_argument("--max-coords", type=int, default=6)

    return parser


def dispatch(argv: Optional[Sequence[str]] = None) -> int:
    """
    Run one subcommand.

    Returns:
        Process exit code
    """
    argv = list(sys.argv[1:] if argv is None else argv)
    started = time.perf_counter()
    try:
        args = build_parser().parse_args(argv)
        setup_logging(args.log_level)
        cfg = _load_app_config(args)
        out, seed, inputs, outputs = COMMANDS[args.command](args, cfg)
        config_path = _config_path(args)
        if config_path:
            inputs = [Path(config_path), *inputs]
        write_manifest(
            out,
            command=args.command,
            config=cfg.to_dict(),
            seed=seed,
            inputs=inputs,
            outputs=outputs,
            wall_clock_seconds=time.perf_counter() - started,
            version=__version__,
            argv=argv,
        )
    except SystemExit as exc:
        return int(exc.code or 0)
    except DwellRecError as exc:
        logger.debug(f"{type(exc).__name__}: {exc}")
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except Exception as exc:
        logger.exception(f"unexpected failure: {exc}")
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


def main() -> None:
    sys.exit(dispatch())
