"""Synthetic log generation and dataset construction."""

from dwellrec.domain.datagen.config import GeneratorConfig
from dwellrec.domain.datagen.evalsets import build_eval_set, mask_eval_dwell
from dwellrec.domain.datagen.generator import generate_corpus, history_dwell, split_by_user
from dwellrec.domain.datagen.samples import SampleBuild, build_train_samples

__all__ = [
    "GeneratorConfig",
    "SampleBuild",
    "build_eval_set",
    "build_train_samples",
    "generate_corpus",
    "history_dwell",
    "mask_eval_dwell",
    "split_by_user",
]
