"""Censoring-aware ranking metrics: concordance index and fixed-horizon ROC/AUC.

Pair conventions (recorded here because the usual formula ignores censoring):

* A pair is usable when the subject with the strictly smaller observed time
  had the event. When the two observed times are tied, the pair is usable
  only if exactly one of the two had the event; that subject counts as the
  shorter-lived one (a censoring at the same recorded time outlives a death).
  Tied-time event-event pairs carry no ordering information and are excluded.
* Risk ties among usable pairs receive half credit.
"""

from __future__ import annotations

from dataclasses import dataclass
import numpy as np

from .errors import DataError

__all__ = [
    "ConcordanceResult",
    "RocResult",
    "ModelEvaluation",
    "EvaluationReport",
    "concordance_index",
    "roc_at_horizon",
]


@dataclass(frozen=True)
class ConcordanceResult:
    """Concordance index with the pair tallies behind it."""

    c_index: float
    concordant: int
    discordant: int
    tied_risk: int
    usable_pairs: int

    def to_dict(self) -> dict:
        return {
            "c_index": self.c_index,
            "concordant": self.concordant,
            "discordant": self.discordant,
            "tied_risk": self.tied_risk,
            "usable_pairs": self.usable_pairs,
        }


@dataclass(frozen=True)
class RocResult:
    """ROC curve and AUC for the binary outcome "event by the horizon"."""

    horizon: float
    thresholds: np.ndarray  # descending; +inf for the (0, 0) corner
    fpr: np.ndarray
    tpr: np.ndarray
    auc: float
    n_positive: int
    n_negative: int
    n_excluded: int

    @property
    def points(self) -> list[tuple[float, float]]:
        return [(float(f), float(t)) for f, t in zip(self.fpr, self.tpr)]

    def to_dict(self) -> dict:
        return {
            "horizon": self.horizon,
            "auc": self.auc,
            "n_positive": self.n_positive,
            "n_negative": self.n_negative,
            "n_excluded": self.n_excluded,
            "points": self.points,
        }


def _validate_triplet(times, events, risks):
    t = np.asarray(times, dtype=float)
    e = np.asarray(events, dtype=bool)
    r = np.asarray(risks, dtype=float)
    if not (t.shape == e.shape == r.shape) or t.ndim != 1:
        raise DataError("times, events, and risks must be 1-D arrays of equal length")
    if t.size < 2:
        raise DataError("need at least two subjects")
    return t, e, r


def concordance_index(times, events, risks) -> ConcordanceResult:
    """Harrell's concordance index for right-censored data.

    Higher risk must predict shorter survival for a pair to count as
    concordant. See the module docstring for the pair conventions.
    """
    t, e, r = _validate_triplet(times, events, risks)
    n = t.size
    concordant = discordant = tied = 0
    for i in range(n - 1):
        tj = t[i + 1 :]
        ej = e[i + 1 :]
        rj = r[i + 1 :]
        tied_time = tj == t[i]
        i_shorter = ((t[i] < tj) & e[i]) | (tied_time & e[i] & ~ej)
        j_shorter = ((tj < t[i]) & ej) | (tied_time & ej & ~e[i])
        # risk of the shorter-lived subject vs the longer-lived one
        short_risk = np.where(i_shorter, r[i], rj)
        long_risk = np.where(i_shorter, rj, r[i])
        usable = i_shorter | j_shorter
        concordant += int(np.count_nonzero(usable & (short_risk > long_risk)))
        discordant += int(np.count_nonzero(usable & (short_risk < long_risk)))
        tied += int(np.count_nonzero(usable & (short_risk == long_risk)))
    usable_pairs = concordant + discordant + tied
    if usable_pairs == 0:
        raise DataError("no usable pairs: every comparison is censored or tied")
    c = (concordant + 0.5 * tied) / usable_pairs
    return ConcordanceResult(c, concordant, discordant, tied, usable_pairs)


def roc_at_horizon(times, events, risks, horizon: float) -> RocResult:
    """ROC and trapezoidal AUC for the outcome "event occurred by ``horizon``".

    Subjects censored at or before the horizon carry no label and are
    excluded (counted in ``n_excluded``). Sweeping every distinct risk value
    as a threshold, with ties entering together, makes the trapezoidal AUC
    equal to the tie-corrected rank statistic.
    """
    t, e, r = _validate_triplet(times, events, risks)
    if not horizon > 0:
        raise DataError(f"horizon must be positive, got {horizon}")
    positive = e & (t <= horizon)
    negative = t > horizon
    excluded = ~positive & ~negative
    n_pos = int(np.count_nonzero(positive))
    n_neg = int(np.count_nonzero(negative))
    if n_pos == 0 or n_neg == 0:
        raise DataError(
            f"horizon {horizon} leaves {n_pos} positives and {n_neg} negatives; "
            "both classes are required"
        )

    keep = ~excluded
    labels = positive[keep]
    scores = r[keep]
    order = np.argsort(-scores, kind="stable")
    scores = scores[order]
    labels = labels[order]
    # group subjects sharing a risk value so ties enter the curve together
    boundary = np.flatnonzero(np.diff(scores)) + 1
    group_ends = np.append(boundary, scores.size)
    cum_pos = np.cumsum(labels)
    cum_all = np.arange(1, scores.size + 1)
    tp = cum_pos[group_ends - 1]
    fp = (cum_all - cum_pos)[group_ends - 1]

    tpr = np.concatenate(([0.0], tp / n_pos))
    fpr = np.concatenate(([0.0], fp / n_neg))
    thresholds = np.concatenate(([np.inf], scores[group_ends - 1]))
    auc = float(np.sum((fpr[1:] - fpr[:-1]) * (tpr[1:] + tpr[:-1]) / 2.0))
    return RocResult(
        horizon=float(horizon),
        thresholds=thresholds,
        fpr=fpr,
        tpr=tpr,
        auc=auc,
        n_positive=n_pos,
        n_negative=n_neg,
        n_excluded=int(np.count_nonzero(excluded)),
    )


@dataclass(frozen=True)
class ModelEvaluation:
    """Test-set metrics for one fitted model."""

    model: str
    concordance: ConcordanceResult
    roc: RocResult

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "concordance": self.concordance.to_dict(),
            "roc": self.roc.to_dict(),
        }


@dataclass(frozen=True)
class EvaluationReport:
    """Side-by-side evaluation of several models on one test set."""

    horizon: float
    n_test: int
    models: tuple[ModelEvaluation, ...]

    def to_dict(self) -> dict:
        return {
            "horizon": self.horizon,
            "n_test": self.n_test,
            "models": [m.to_dict() for m in self.models],
        }
