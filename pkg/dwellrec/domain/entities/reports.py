"""
Report Entities.

Results produced by evaluation, training and the CLI: ranking metric
reports, masked-dwell gap reports, training run summaries, sweep rows and
run manifests. Each knows how to serialize itself to plain JSON types.
"""

from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional

METRIC_NAMES = ("auc", "mrr", "ndcg5", "ndcg10")


@dataclass
class MetricReport:
    """
    Macro-averaged ranking metrics over an evaluation set.

    Attributes:
        auc: Mean per-impression AUC
        mrr: Mean per-impression MRR
        ndcg5: Mean per-impression nDCG@5
        ndcg10: Mean per-impression nDCG@10
        n_impressions: Impressions that contributed
        skipped: Impressions lacking a positive or a negative
        label: Evaluation set label
    """

    auc: float
    mrr: float
    ndcg5: float
    ndcg10: float
    n_impressions: int
    skipped: int = 0
    label: str = ""

    def metric(self, name: str) -> float:
        return float(getattr(self, name))

    def to_dict(self) -> Dict[str, Any]:
        """JSON report form: {auc, mrr, ndcg5, ndcg10, n, skipped}."""
        return {
            "auc": self.auc,
            "mrr": self.mrr,
            "ndcg5": self.ndcg5,
            "ndcg10": self.ndcg10,
            "n": self.n_impressions,
            "skipped": self.skipped,
        }


@dataclass
class GtbReport:
    """Gap to baseline: per-metric masked minus unmasked."""

    deltas: Dict[str, float]
    unmasked: MetricReport
    masked: MetricReport

    def to_dict(self) -> Dict[str, Any]:
        return {
            "deltas": dict(self.deltas),
            "unmasked": self.unmasked.to_dict(),
            "masked": self.masked.to_dict(),
        }


@dataclass
class TrainRun:
    """
    Summary of one training run.

    Attributes:
        config: Snapshot of the experiment configuration
        epoch_losses: Mean loss per epoch
        checkpoint_path: Final checkpoint
        epoch_checkpoints: Checkpoint written after each epoch
        wall_clock_seconds: Training duration
        seed: Run seed
        n_samples: Training samples per epoch
        skipped: Impressions skipped while building samples, by reason
    """

    config: Dict[str, Any]
    epoch_losses: List[float]
    checkpoint_path: str
    seed: int
    wall_clock_seconds: float = 0.0
    epoch_checkpoints: List[str] = field(default_factory=list)
    n_samples: int = 0
    skipped: Dict[str, int] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class SweepRow:
    """One (variant, threshold) result of the threshold sweep."""

    variant: str
    theta: float
    report: Optional[MetricReport]

    @property
    def empty(self) -> bool:
        return self.report is None

    def csv_fields(self) -> List[str]:
        if self.report is None:
            metrics = ["null"] * len(METRIC_NAMES)
        else:
            metrics = [repr(self.report.metric(name)) for name in METRIC_NAMES]
        return [self.variant, f"{self.theta:g}", *metrics]


@dataclass
class RunManifest:
    """
    Provenance record written by every CLI command.

    Attributes:
        command: Subcommand name
        config: Full configuration snapshot
        seed: Seed used, if any
        input_digests: sha256 of every input file, by path
        output_paths: Files the command wrote
        wall_clock_seconds: Command duration
        version: Package version
        argv: Arguments the command ran with
    """

    command: str
    config: Dict[str, Any]
    seed: Optional[int]
    input_digests: Dict[str, str]
    output_paths: List[str]
    wall_clock_seconds: float
    version: str
    argv: List[str] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)
