"""
Evaluation Service - experiment runners over trained models.

Runners:
- evaluate: macro-averaged AUC, MRR, nDCG@5 and nDCG@10 over an evaluation set
- run_masked_eval: gap to baseline when every history dwell is hidden
- run_overall: Normal, Real(theta) and Robust(theta) reports per model
- run_sweep: Real(theta) reports over a range of thresholds

Scoring parallelizes over impressions with a thread pool sized by
DWELLREC_THREADS. Results are reduced in input order with exactly rounded
sums, so a report does not depend on the worker count or on the order of
the impressions.
"""

import csv
import hashlib
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Optional, Protocol, Sequence, Tuple, Union, runtime_checkable

import numpy as np

from dwellrec.core.config import get_settings
from dwellrec.core.exceptions import DataFormatError, EmptyInputError, InvalidInputError
from dwellrec.core.logging import get_logger
from dwellrec.domain.datagen.evalsets import build_eval_set, mask_eval_dwell
from dwellrec.domain.encoders.model import RecommenderModel
from dwellrec.domain.entities import EvalMode, EvalSet, GtbReport, Impression, MetricReport, SweepRow
from dwellrec.domain.entities.reports import METRIC_NAMES
from dwellrec.domain.metrics import impression_metrics
from dwellrec.services.embeddings import EmbeddingStore
from dwellrec.services.training import MODEL_FILE, load_trained_model

logger = get_logger(__name__)

SWEEP_COLUMNS = ("variant", "theta", *METRIC_NAMES)


# =============================================================================
# Scorers
# =============================================================================


@runtime_checkable
class Scorer(Protocol):
    """Anything that scores the candidates of an impression."""

    def score(self, impression: Impression) -> np.ndarray:
        ...


class ModelScorer:
    """Scores candidates with a trained model (evaluation mode)."""

    def __init__(self, model: RecommenderModel, store: EmbeddingStore) -> None:
        self.model = model
        self.store = store

    @property
    def name(self) -> str:
        return self.model.variant

    def score(self, impression: Impression) -> np.ndarray:
        ids = [c.news_id for c in impression.candidates]
        return self.model.score_impression(impression.history, ids, self.store)


class RandomScorer:
    """
    Seeded random scores.

    Each impression gets its own stream derived from (seed, impression id),
    so scores do not depend on evaluation order or worker count.
    """

    name = "random"

    def __init__(self, seed: int = 0) -> None:
        self.seed = seed

    def score(self, impression: Impression) -> np.ndarray:
        digest = hashlib.sha256(impression.impression_id.encode("utf-8")).digest()
        entropy = [self.seed, int.from_bytes(digest[:8], "little")]
        rng = np.random.default_rng(np.random.SeedSequence(entropy))
        return rng.random(len(impression.candidates))


ScorerLike = Union[Scorer, RecommenderModel]


def as_scorer(model: ScorerLike, store: Optional[EmbeddingStore] = None) -> Scorer:
    if isinstance(model, RecommenderModel):
        if store is None:
            raise InvalidInputError("an embedding store is required to score with a model")
        return ModelScorer(model, store)
    return model


# =============================================================================
# evaluate
# =============================================================================


def _impression_result(scorer: Scorer, impression: Impression) -> Optional[Tuple[float, float, float, float]]:
    if not impression.has_both_classes:
        return None
    return impression_metrics(impression.labels, scorer.score(impression))


def evaluate(
    model: ScorerLike,
    store: Optional[EmbeddingStore],
    eval_set: EvalSet,
    max_skip_fraction: float = 0.5,
    threads: Optional[int] = None,
) -> MetricReport:
    """
    Evaluate a model (or any scorer) on an evaluation set.

    Args:
        model: RecommenderModel or Scorer
        store: Embedding store (required for a RecommenderModel)
        eval_set: Impressions to rank
        max_skip_fraction: Largest tolerated share of impressions lacking a
            positive or a negative
        threads: Worker count (default DWELLREC_THREADS)

    Returns:
        MetricReport of per-impression means

    Raises:
        EmptyInputError: The set has no impression
        InvalidInputError: Too many impressions were skipped
        MissingNewsError: A news id is missing from the store
    """
    if len(eval_set) == 0:
        raise EmptyInputError(f"evaluation set {eval_set.label} is empty")
    scorer = as_scorer(model, store)
    workers = threads or get_settings().threads

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda imp: _impression_result(scorer, imp), eval_set.impressions))
    else:
        results = [_impression_result(scorer, imp) for imp in eval_set.impressions]

    kept = [r for r in results if r is not None]
    skipped = len(results) - len(kept)
    if skipped:
        logger.warning(f"{eval_set.label}: skipped {skipped}/{len(results)} impressions lacking both classes")
    if not kept or skipped / len(results) > max_skip_fraction:
        raise InvalidInputError(
            f"{eval_set.label}: {skipped} of {len(results)} impressions lack a positive or a negative",
            hint=f"at most {max_skip_fraction:.0%} may be skipped",
        )

    means = [math.fsum(column) / len(kept) for column in zip(*kept)]
    report = MetricReport(*means, n_impressions=len(kept), skipped=skipped, label=eval_set.label)
    logger.info(
        f"{getattr(scorer, 'name', 'scorer')} on {eval_set.label}: AUC {report.auc:.4f}, "
        f"MRR {report.mrr:.4f}, nDCG@5 {report.ndcg5:.4f}, nDCG@10 {report.ndcg10:.4f} "
        f"({report.n_impressions} impressions)"
    )
    return report


# =============================================================================
# Comparisons and masked-dwell gap
# =============================================================================


def metric_deltas(report: MetricReport, baseline: MetricReport) -> Dict[str, float]:
    return {name: report.metric(name) - baseline.metric(name) for name in METRIC_NAMES}


def compare_reports(report: MetricReport, baseline: MetricReport) -> Dict[str, Dict[str, Optional[float]]]:
    """
    Per-metric improvement of a report over a baseline.

    Returns:
        {metric: {"delta": absolute difference, "relative_pct": percentage of
        the baseline value, None when the baseline is 0}}
    """
    comparison = {}
    for name, delta in metric_deltas(report, baseline).items():
        base = baseline.metric(name)
        comparison[name] = {
            "delta": delta,
            "relative_pct": 100.0 * delta / base if base else None,
        }
    return comparison


def run_masked_eval(
    model: ScorerLike,
    store: Optional[EmbeddingStore],
    eval_set: EvalSet,
    max_skip_fraction: float = 0.5,
    threads: Optional[int] = None,
) -> GtbReport:
    """
    Gap to baseline: evaluate with and without history dwell.

    Deltas are masked minus unmasked, per metric.
    """
    unmasked = evaluate(model, store, eval_set, max_skip_fraction, threads)
    masked = evaluate(model, store, mask_eval_dwell(eval_set), max_skip_fraction, threads)
    report = GtbReport(deltas=metric_deltas(masked, unmasked), unmasked=unmasked, masked=masked)
    logger.info(f"Masked-dwell gap on {eval_set.label}: AUC {report.deltas['auc']:+.4f}")
    return report


def run_overall(
    models: Mapping[str, ScorerLike],
    store: Optional[EmbeddingStore],
    impressions: Sequence[Impression],
    theta: float = 5.0,
    max_skip_fraction: float = 0.5,
    threads: Optional[int] = None,
) -> Dict[str, Dict[str, MetricReport]]:
    """Normal, Real(theta) and Robust(theta) reports for every model."""
    sets = [build_eval_set(impressions, mode, theta) for mode in EvalMode]
    results: Dict[str, Dict[str, MetricReport]] = {}
    for name, model in models.items():
        results[name] = {
            eval_set.mode.value: evaluate(model, store, eval_set, max_skip_fraction, threads)
            for eval_set in sets
        }
    return results


# =============================================================================
# Threshold sweep
# =============================================================================


@dataclass
class SweepResult:
    rows: List[SweepRow]

    @property
    def empty_thresholds(self) -> List[float]:
        return sorted({row.theta for row in self.rows if row.empty})

    def to_csv(self) -> str:
        return sweep_csv(self.rows)


def sweep_csv(rows: Iterable[SweepRow]) -> str:
    """CSV text with header variant,theta,auc,mrr,ndcg5,ndcg10; empty sets give null metrics."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(SWEEP_COLUMNS)
    for row in rows:
        writer.writerow(row.csv_fields())
    return buffer.getvalue()


def log_sweep_trend(rows: Sequence[SweepRow]) -> None:
    """Log first-to-last threshold change of every metric per variant."""
    by_variant: Dict[str, List[SweepRow]] = {}
    for row in rows:
        if not row.empty:
            by_variant.setdefault(row.variant, []).append(row)
    for variant, kept in by_variant.items():
        if len(kept) < 2:
            continue
        first, last = kept[0], kept[-1]
        changes = ", ".join(
            f"{name} {last.report.metric(name) - first.report.metric(name):+.4f}" for name in METRIC_NAMES
        )
        logger.info(f"Sweep trend {variant} theta {first.theta:g}->{last.theta:g}: {changes}")


def run_sweep(
    models: Mapping[str, ScorerLike],
    store: Optional[EmbeddingStore],
    impressions: Sequence[Impression],
    thresholds: Sequence[float],
    max_skip_fraction: float = 0.5,
    threads: Optional[int] = None,
) -> SweepResult:
    """
    Evaluate every model on Real(theta) for each threshold.

    Rows are ordered by model (mapping order), then threshold. A threshold
    whose Real set is empty yields one row per model with no report.
    """
    if not thresholds:
        raise InvalidInputError("the sweep needs at least one threshold")
    sets = {theta: build_eval_set(impressions, EvalMode.REAL, theta) for theta in thresholds}
    for theta, eval_set in sets.items():
        if len(eval_set) == 0:
            logger.warning(f"Real({theta:g}) is empty; its sweep rows carry null metrics")

    rows = []
    for name, model in models.items():
        for theta in thresholds:
            eval_set = sets[theta]
            report = evaluate(model, store, eval_set, max_skip_fraction, threads) if len(eval_set) else None
            rows.append(SweepRow(variant=name, theta=float(theta), report=report))

    log_sweep_trend(rows)
    return SweepResult(rows)


def load_sweep_models(ckpt_dir: Union[str, Path], variants: Sequence[str]) -> Dict[str, RecommenderModel]:
    """
    Load one trained model per variant from ``<ckpt_dir>/<variant>/``.

    Raises:
        DataFormatError: A variant has no run directory
    """
    root = Path(ckpt_dir)
    models = {}
    for variant in variants:
        name = getattr(variant, "value", variant)
        run_dir = root / name
        if not (run_dir / MODEL_FILE).exists():
            raise DataFormatError(f"no trained {name} model found", path=str(run_dir / MODEL_FILE))
        model = load_trained_model(run_dir)
        if model.variant != name:
            raise DataFormatError(f"run directory holds a {model.variant} model, expected {name}", path=str(run_dir))
        models[name] = model
    return models
