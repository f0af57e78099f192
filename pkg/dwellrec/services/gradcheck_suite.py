"""
Gradient Check Suite.

Runs central-difference gradient checks over every layer and every complete
encoder variant at tiny dimensions (history 4, news 6, dwell 3, 2 heads of
dimension 3), each for a number of randomized trials. Layer inputs are
registered as parameters so input gradients are checked along with weight
gradients. Odd encoder trials run in training mode with a dropout mask that
is redrawn identically on every evaluation.
"""

from dataclasses import dataclass, field
from typing import Callable, Dict, List, Tuple

import numpy as np

from dwellrec.core.exceptions import InvalidInputError
from dwellrec.core.logging import get_logger
from dwellrec.domain.dwell import discretize
from dwellrec.domain.encoders.config import EncoderConfig, EncoderVariant
from dwellrec.domain.encoders.history import EncodedHistory
from dwellrec.domain.encoders.model import RecommenderModel
from dwellrec.nn.gradcheck import GradCheckResult, LossFn, grad_check
from dwellrec.nn.layers import AttentionPooling, DwellEmbedding, Linear, MultiHeadAttention, ReadingPreferenceGate
from dwellrec.nn.params import ParamSet

logger = get_logger(__name__)

TINY_HISTORY = 4
TINY_NEWS_DIM = 6
TINY_DWELL_DIM = 3
TINY_HEADS = 2
TINY_HEAD_DIM = 3

DEFAULT_TOLERANCE = 1e-4

CaseBuilder = Callable[[np.random.Generator, int], Tuple[ParamSet, LossFn]]


@dataclass
class CaseReport:
    """Worst result of one case over its trials."""

    name: str
    trials: int = 0
    max_rel_error: float = 0.0
    worst_param: str = ""
    worst_trial: int = -1
    n_coords: int = 0

    def update(self, trial: int, result: GradCheckResult) -> None:
        self.trials += 1
        self.n_coords += result.n_coords
        if result.max_rel_error > self.max_rel_error:
            self.max_rel_error = result.max_rel_error
            self.worst_param = result.worst_param
            self.worst_trial = trial

    def passed(self, tolerance: float = DEFAULT_TOLERANCE) -> bool:
        return self.max_rel_error < tolerance


@dataclass
class SuiteReport:
    tolerance: float
    cases: List[CaseReport] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(case.passed(self.tolerance) for case in self.cases)

    @property
    def max_rel_error(self) -> float:
        return max((case.max_rel_error for case in self.cases), default=0.0)

    def to_dict(self) -> Dict:
        return {
            "passed": self.passed,
            "tolerance": self.tolerance,
            "max_rel_error": self.max_rel_error,
            "cases": [
                {
                    "name": case.name,
                    "trials": case.trials,
                    "coords": case.n_coords,
                    "max_rel_error": case.max_rel_error,
                    "worst_param": case.worst_param,
                    "worst_trial": case.worst_trial,
                    "passed": case.passed(self.tolerance),
                }
                for case in self.cases
            ],
        }


# =============================================================================
# Layer cases
# =============================================================================


def _row_mask(rng: np.random.Generator, rows: int) -> np.ndarray:
    mask = rng.random(rows) < 0.7
    mask[rng.integers(rows)] = True
    return mask


def linear_case(rng: np.random.Generator, trial: int) -> Tuple[ParamSet, LossFn]:
    params = ParamSet()
    in_dim, out_dim, rows = (int(v) for v in rng.integers(2, 7, size=3))
    layer = Linear(params, "linear", in_dim, out_dim, rng)
    x = params.add("input.x", rng.normal(size=(rows, in_dim)))
    r = rng.normal(size=(rows, out_dim))

    def f(compute_grads: bool) -> float:
        y, cache = layer.forward(x.value)
        if compute_grads:
            x.grad += layer.backward(r, cache)
        return float(np.sum(y * r))

    return params, f


def attention_case(rng: np.random.Generator, trial: int) -> Tuple[ParamSet, LossFn]:
    params = ParamSet()
    qk_dim = TINY_NEWS_DIM + TINY_DWELL_DIM * (trial % 2)
    layer = MultiHeadAttention(params, "mha", qk_dim, TINY_NEWS_DIM, TINY_HEADS, TINY_HEAD_DIM, rng)
    x = params.add("input.qk", rng.normal(size=(TINY_HISTORY, qk_dim)))
    v = params.add("input.v", rng.normal(size=(TINY_HISTORY, TINY_NEWS_DIM)))
    mask = _row_mask(rng, TINY_HISTORY)
    r = rng.normal(size=(TINY_HISTORY, layer.out_dim))

    def f(compute_grads: bool) -> float:
        out, cache = layer.forward(x.value, x.value, v.value, mask)
        if compute_grads:
            dq, dk, dv = layer.backward(r, cache)
            x.grad += dq + dk
            v.grad += dv
        return float(np.sum(out * r))

    return params, f


def pooling_case(rng: np.random.Generator, trial: int) -> Tuple[ParamSet, LossFn]:
    params = ParamSet()
    rows, in_dim = 5, 8
    layer = AttentionPooling(params, "pool", in_dim, 3, rng)
    x = params.add("input.x", rng.normal(size=(rows, in_dim)))
    mask = _row_mask(rng, rows)
    r = rng.normal(size=in_dim)

    def f(compute_grads: bool) -> float:
        u, cache = layer.forward(x.value, mask)
        if compute_grads:
            x.grad += layer.backward(r, cache)
        return float(u @ r)

    return params, f


def dwell_embedding_case(rng: np.random.Generator, trial: int) -> Tuple[ParamSet, LossFn]:
    params = ParamSet()
    vocab = 15
    layer = DwellEmbedding(params, "dwell", vocab, TINY_DWELL_DIM, rng)
    ids = rng.integers(1, vocab, size=TINY_HISTORY)
    mask = _row_mask(rng, TINY_HISTORY)
    ids[~mask] = 0
    # padding rows are never read downstream
    r = rng.normal(size=(TINY_HISTORY, TINY_DWELL_DIM)) * mask[:, None]

    def f(compute_grads: bool) -> float:
        rows, cache = layer.forward(ids)
        if compute_grads:
            layer.backward(r, cache)
        return float(np.sum(rows * r))

    return params, f


def gate_case(rng: np.random.Generator, trial: int) -> Tuple[ParamSet, LossFn]:
    params = ParamSet()
    layer = ReadingPreferenceGate(params, "gate", TINY_DWELL_DIM, TINY_DWELL_DIM, rng)
    d = params.add("input.dwell", rng.normal(size=(TINY_HISTORY, TINY_DWELL_DIM)))
    mask = _row_mask(rng, TINY_HISTORY)
    r = rng.normal(size=2)

    def f(compute_grads: bool) -> float:
        gate, cache = layer.forward(d.value, mask)
        if compute_grads:
            d.grad += layer.backward(r, cache)
        return float(gate @ r)

    return params, f


# =============================================================================
# Encoder cases
# =============================================================================


def tiny_encoder_config(variant: EncoderVariant, **overrides) -> EncoderConfig:
    values = dict(
        variant=variant,
        news_dim=TINY_NEWS_DIM,
        dwell_dim=TINY_DWELL_DIM,
        heads=TINY_HEADS,
        head_dim=TINY_HEAD_DIM,
        max_history=TINY_HISTORY,
        k_negatives=2,
    )
    values.update(overrides)
    return EncoderConfig(**values)


def random_history(rng: np.random.Generator, cfg: EncoderConfig) -> EncodedHistory:
    """A padded history mixing Unknown, short and effective clicks."""
    n = int(rng.integers(1, cfg.max_history + 1))
    rows = rng.normal(size=(n, cfg.news_dim))
    choices = [None, 0.0, 3.0, 7.5, 42.0, 180.0, 900.0]
    dwell = [choices[i] for i in rng.integers(len(choices), size=n)]
    dwell[-1] = 42.0
    buckets = [int(discretize(s, cfg.dwell_scheme)) for s in dwell]
    seconds = [np.nan if s is None else s for s in dwell]
    return EncodedHistory.padded(rows, buckets, seconds, cfg.max_history)


def encoder_case(variant: EncoderVariant) -> CaseBuilder:
    def build(rng: np.random.Generator, trial: int) -> Tuple[ParamSet, LossFn]:
        cfg = tiny_encoder_config(variant)
        model = RecommenderModel(cfg, seed=int(rng.integers(2**31)))
        eh = random_history(rng, cfg)
        candidates = rng.normal(size=(cfg.k_negatives + 1, cfg.news_dim))
        training = trial % 2 == 1
        dropout_seed = int(rng.integers(2**31))

        def f(compute_grads: bool) -> float:
            dropout_rng = np.random.default_rng(dropout_seed)
            return model.loss_and_grad(
                eh, candidates, training=training, rng=dropout_rng, compute_grads=compute_grads
            )

        return model.params, f

    return build


def default_cases() -> Dict[str, CaseBuilder]:
    cases: Dict[str, CaseBuilder] = {
        "linear": linear_case,
        "multi_head_attention": attention_case,
        "attention_pooling": pooling_case,
        "dwell_embedding": dwell_embedding_case,
        "reading_preference_gate": gate_case,
    }
    for variant in EncoderVariant:
        cases[f"encoder.{variant.value}"] = encoder_case(variant)
    return cases


def run_gradcheck_suite(
    trials: int = 100,
    seed: int = 0,
    eps: float = 1e-5,
    max_coords: int = 6,
    tolerance: float = DEFAULT_TOLERANCE,
) -> SuiteReport:
    """
    Run every gradient-check case.

    Args:
        trials: Randomized trials per case
        seed: Suite seed
        eps: Finite-difference step
        max_coords: Coordinates sampled per parameter tensor per trial
        tolerance: Largest accepted relative error

    Returns:
        SuiteReport; ``passed`` is True when every case stays below tolerance
    """
    if trials < 1:
        raise InvalidInputError(f"trials must be >= 1, got {trials}")
    report = SuiteReport(tolerance=tolerance)
    root = np.random.SeedSequence(seed)
    builders = default_cases()
    for (name, build), case_seq in zip(builders.items(), root.spawn(len(builders))):
        rng = np.random.default_rng(case_seq)
        case = CaseReport(name=name)
        for trial in range(trials):
            params, f = build(rng, trial)
            case.update(trial, grad_check(f, params, eps=eps, max_coords=max_coords, rng=rng))
        status = "ok" if case.passed(tolerance) else "FAILED"
        logger.info(
            f"grad-check {name}: max rel err {case.max_rel_error:.2e} over {case.trials} trials "
            f"({case.n_coords} coords) {status}"
        )
        report.cases.append(case)
    return report
