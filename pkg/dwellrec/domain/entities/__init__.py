"""
Domain Entities - Core recommendation objects.

Plain dataclasses and value types shared across the dwell, datagen,
encoder and evaluation code.
"""

from dwellrec.domain.entities.dwell import (
    DwellBucket,
    DwellDistribution,
    DwellScheme,
    PADDING_BUCKET,
    RawDwell,
    UNKNOWN_BUCKET,
)
from dwellrec.domain.entities.impression import (
    Candidate,
    ClickRecord,
    EvalMode,
    EvalSet,
    Impression,
    NewsItem,
    TrainSample,
)
from dwellrec.domain.entities.reports import (
    GtbReport,
    MetricReport,
    RunManifest,
    SweepRow,
    TrainRun,
)

__all__ = [
    "DwellBucket",
    "DwellDistribution",
    "DwellScheme",
    "PADDING_BUCKET",
    "RawDwell",
    "UNKNOWN_BUCKET",
    "Candidate",
    "ClickRecord",
    "EvalMode",
    "EvalSet",
    "Impression",
    "NewsItem",
    "TrainSample",
    "GtbReport",
    "MetricReport",
    "RunManifest",
    "SweepRow",
    "TrainRun",
]
