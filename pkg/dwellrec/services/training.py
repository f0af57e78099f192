"""
Training service.

Mini-batch Adam over negative-sampling samples. One seed drives parameter
initialization, negative sampling, batch order and dropout, so a run is
reproducible from (config, seed, data).

A run directory holds:
- config.json: canonical experiment configuration
- encoder.json: encoder configuration needed to rebuild the model
- epoch-NNN.nrck: parameters after each epoch
- model.nrck: final parameters
- train_run.json: losses, sample counts and skip report
"""

import json
import time
from pathlib import Path
from typing import List, Optional, Sequence, Union

import numpy as np

from dwellrec.core.exceptions import DataFormatError, EmptyInputError, NumericError
from dwellrec.core.experiment import AppConfig, dumps_config
from dwellrec.core.logging import get_logger
from dwellrec.domain.datagen.samples import build_train_samples
from dwellrec.domain.encoders.config import EncoderConfig
from dwellrec.domain.encoders.model import RecommenderModel
from dwellrec.domain.entities import Impression, TrainRun
from dwellrec.nn.checkpoint import load_into, save_checkpoint
from dwellrec.nn.optim import AdamState, adam_step
from dwellrec.services.embeddings import EmbeddingStore

logger = get_logger(__name__)

CONFIG_FILE = "config.json"
ENCODER_FILE = "encoder.json"
MODEL_FILE = "model.nrck"
RUN_FILE = "train_run.json"

PathLike = Union[str, Path]


def epoch_checkpoint_name(epoch: int) -> str:
    return f"epoch-{epoch:03d}.nrck"


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8")


def run_training(
    cfg: AppConfig,
    seed: int,
    train: Sequence[Impression],
    store: EmbeddingStore,
    out_dir: PathLike,
) -> TrainRun:
    """
    Train the configured encoder variant.

    Args:
        cfg: Experiment configuration (encoder + training sections)
        seed: Run seed
        train: Training impressions
        store: Embedding store covering every referenced news id
        out_dir: Run directory (created if missing)

    Returns:
        TrainRun summary

    Raises:
        EmptyInputError: No training sample could be built
        NumericError: Non-finite loss (names epoch and batch index)
        MissingNewsError: A news id is missing from the store
    """
    started = time.perf_counter()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    tcfg = cfg.training

    build = build_train_samples(train, cfg.encoder.k_negatives, seed)
    samples = build.samples
    if not samples:
        raise EmptyInputError("no training samples could be built from the training log")

    model = RecommenderModel(cfg.encoder, seed=seed)
    shuffle_seq, dropout_seq = np.random.SeedSequence(seed).spawn(2)
    shuffle_rng = np.random.default_rng(shuffle_seq)
    dropout_rng = np.random.default_rng(dropout_seq)
    state = AdamState(lr=tcfg.learning_rate, beta1=tcfg.beta1, beta2=tcfg.beta2, eps=tcfg.eps)

    (out / CONFIG_FILE).write_text(dumps_config(cfg), encoding="utf-8")
    _write_json(out / ENCODER_FILE, cfg.encoder.to_dict())

    logger.info(
        f"Training {model.variant} on {len(samples)} samples: {tcfg.epochs} epochs, "
        f"batch {tcfg.batch_size}, lr {tcfg.learning_rate:g}, seed {seed}"
    )

    epoch_losses: List[float] = []
    epoch_paths: List[str] = []
    for epoch in range(1, tcfg.epochs + 1):
        order = shuffle_rng.permutation(len(samples))
        total = 0.0
        for batch_index, start in enumerate(range(0, len(order), tcfg.batch_size)):
            batch = [samples[i] for i in order[start:start + tcfg.batch_size]]
            model.params.zero_grad()
            loss = model.batch_loss(batch, store, rng=dropout_rng, training=True)
            if not np.isfinite(loss):
                raise NumericError(f"non-finite loss at epoch {epoch}, batch {batch_index}")
            adam_step(model.params, state)
            total += loss * len(batch)

        mean_loss = total / len(samples)
        epoch_losses.append(mean_loss)
        path = save_checkpoint(model.params, out / epoch_checkpoint_name(epoch))
        epoch_paths.append(str(path))
        logger.info(f"Epoch {epoch}/{tcfg.epochs}: mean loss {mean_loss:.6f}")

    final = save_checkpoint(model.params, out / MODEL_FILE)
    run = TrainRun(
        config=cfg.to_dict(),
        epoch_losses=epoch_losses,
        checkpoint_path=str(final),
        seed=seed,
        wall_clock_seconds=time.perf_counter() - started,
        epoch_checkpoints=epoch_paths,
        n_samples=len(samples),
        skipped=dict(build.skipped),
    )
    report = run.to_dict()
    # duration lives in the run manifest so this file stays reproducible
    report.pop("wall_clock_seconds")
    _write_json(out / RUN_FILE, report)
    return run


def load_trained_model(path: PathLike, checkpoint: Optional[str] = None) -> RecommenderModel:
    """
    Rebuild a trained model from a run directory or a checkpoint file.

    A checkpoint file is paired with the encoder.json next to it.

    Raises:
        DataFormatError: Missing encoder.json or checkpoint, or a checkpoint
            that does not match the encoder configuration
    """
    path = Path(path)
    if path.is_dir():
        run_dir, ckpt = path, path / (checkpoint or MODEL_FILE)
    else:
        run_dir, ckpt = path.parent, path

    encoder_path = run_dir / ENCODER_FILE
    if not encoder_path.exists():
        raise DataFormatError("encoder configuration not found next to the checkpoint", path=str(encoder_path))
    try:
        encoder_cfg = EncoderConfig.from_dict(json.loads(encoder_path.read_text(encoding="utf-8")))
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"invalid JSON: {exc}", path=str(encoder_path)) from None

    model = RecommenderModel(encoder_cfg)
    load_into(model.params, ckpt)
    logger.info(f"Loaded {model.variant} model from {ckpt}")
    return model
