"""
Evaluation set construction.

- Normal: every test impression as logged
- Real(theta): only effective clicks stay positive (known dwell > theta);
  impressions left without a positive are dropped
- Robust(theta): Real(theta) plus positives whose dwell is Unknown, which stay
  positive; impressions holding such a positive are flagged

Filtering touches evaluation data only; training samples are built from the
raw log.
"""

from typing import Optional, Sequence, Union

from dwellrec.core.exceptions import InvalidInputError
from dwellrec.domain.dwell import is_effective
from dwellrec.domain.entities import Candidate, ClickRecord, EvalMode, EvalSet, Impression

DEFAULT_THETA = 5.0


def _relabel(imp: Impression, theta: float, keep_unknown: bool) -> Impression:
    candidates = []
    for cand in imp.candidates:
        keep = cand.label == 1 and (
            is_effective(cand.dwell, theta) or (keep_unknown and cand.dwell is None)
        )
        if cand.label == 1 and not keep:
            cand = Candidate(news_id=cand.news_id, label=0)
        candidates.append(cand)
    return imp.with_candidates(candidates)


def build_eval_set(
    impressions: Sequence[Impression],
    mode: Union[EvalMode, str] = EvalMode.NORMAL,
    theta: Optional[float] = None,
) -> EvalSet:
    """
    Build an evaluation set.

    Args:
        impressions: Test impressions
        mode: normal, real or robust
        theta: Effective-click threshold in seconds (default 5 for real/robust)

    Returns:
        EvalSet for the mode

    Raises:
        InvalidInputError: Unknown mode or theta <= 0
    """
    try:
        mode = EvalMode(mode)
    except ValueError:
        raise InvalidInputError(f"unknown evaluation mode: {mode!r}") from None

    if mode is EvalMode.NORMAL:
        return EvalSet(mode=mode, impressions=list(impressions))

    theta = DEFAULT_THETA if theta is None else float(theta)
    if theta <= 0:
        raise InvalidInputError(f"theta must be positive, got {theta}")

    keep_unknown = mode is EvalMode.ROBUST
    kept = []
    flagged = set()
    for imp in impressions:
        relabeled = _relabel(imp, theta, keep_unknown)
        if not relabeled.positives:
            continue
        if keep_unknown and any(c.dwell is None for c in relabeled.positives):
            flagged.add(imp.impression_id)
        kept.append(relabeled)

    return EvalSet(mode=mode, impressions=kept, theta=theta, flagged=flagged)


def mask_eval_dwell(eval_set: EvalSet) -> EvalSet:
    """Replace every history dwell with Unknown; labels and candidates stay."""
    masked = [
        imp.with_history([ClickRecord(news_id=r.news_id) for r in imp.history])
        for imp in eval_set.impressions
    ]
    return EvalSet(
        mode=eval_set.mode,
        impressions=masked,
        theta=eval_set.theta,
        flagged=set(eval_set.flagged),
        dwell_masked=True,
    )
