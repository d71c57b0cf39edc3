"""Kaplan-Meier product-limit estimation with Greenwood confidence bands.

The survival product is accumulated in exact rational arithmetic and rounded
once per step, so with zero censoring the estimate is bit-identical to the
empirical survivor function.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np
from scipy.stats import norm

from .core import Dataset, SurvivalCurve
from .errors import DataError

__all__ = ["KmOptions", "km_fit", "km_stratified", "event_time_tallies", "write_curves_csv"]

CI_METHODS = ("log-log", "linear")


@dataclass(frozen=True)
class KmOptions:
    confidence_level: float = 0.95
    ci_method: str = "log-log"

    def __post_init__(self):
        if not 0.0 < self.confidence_level < 1.0:
            raise DataError(
                f"confidence_level must be in (0, 1), got {self.confidence_level}"
            )
        if self.ci_method not in CI_METHODS:
            raise DataError(f"ci_method must be one of {CI_METHODS}, got {self.ci_method!r}")


def event_time_tallies(times, events):
    """Per distinct event time: (time, events d_i, at-risk n_i).

    Subjects censored at an event time stay in that time's risk set
    (deaths precede censorings on ties). Censoring times that carry no
    event produce no entry.
    """
    t = np.asarray(times, dtype=float)
    e = np.asarray(events, dtype=bool)
    if t.ndim != 1 or t.shape != e.shape:
        raise DataError("times and events must be 1-D arrays of equal length")
    if t.size == 0:
        raise DataError("need at least one observation")
    if np.any(~np.isfinite(t)) or np.any(t < 0):
        raise DataError("times must be finite and non-negative")
    order = np.argsort(t, kind="stable")
    ts = t[order]
    es = e[order]
    distinct, start = np.unique(ts, return_index=True)
    d = np.add.reduceat(es.astype(np.int64), start)
    n_at_risk = ts.size - start  # everyone with time >= that distinct value
    keep = d > 0
    return distinct[keep], d[keep], n_at_risk[keep]


def km_fit(times, events, options: KmOptions = KmOptions()) -> SurvivalCurve:
    """Product-limit survival estimate with per-step confidence bounds.

    At each distinct event time the survival drops by the factor
    (1 - d_i / n_i); Greenwood's formula supplies the variance behind the
    confidence bounds. Steps where the estimate reaches zero get degenerate
    [0, 0] bounds and raise a RuntimeWarning.
    """
    step_times, d, n = event_time_tallies(times, events)
    k = step_times.size
    if k == 0:
        return SurvivalCurve(
            times=np.empty(0),
            survival=np.empty(0),
            ci_lower=np.empty(0),
            ci_upper=np.empty(0),
            at_risk=np.empty(0),
            events=np.empty(0),
        )

    survival = np.empty(k)
    running = Fraction(1)
    for i in range(k):
        running *= Fraction(int(n[i]) - int(d[i]), int(n[i]))
        survival[i] = float(running)

    # Greenwood: Var[S(t)] = S(t)^2 * sum d / (n (n - d)); undefined once S hits 0
    var_terms = np.zeros(k)
    exhausted = d >= n
    with np.errstate(divide="ignore", invalid="ignore"):
        var_terms = np.where(exhausted, np.inf, d / (n * (n - d).astype(float)))
    var_sum = np.cumsum(var_terms)
    degenerate = survival <= 0.0

    z = norm.ppf(0.5 + options.confidence_level / 2.0)
    lower = np.zeros(k)
    upper = np.zeros(k)
    ok = ~degenerate
    if options.ci_method == "linear":
        se = survival * np.sqrt(var_sum, where=ok, out=np.zeros(k))
        lower[ok] = np.clip(survival[ok] - z * se[ok], 0.0, 1.0)
        upper[ok] = np.clip(survival[ok] + z * se[ok], 0.0, 1.0)
    else:  # log-log transform keeps bounds inside [0, 1] without clamping
        with np.errstate(divide="ignore", invalid="ignore"):
            theta = np.where(ok, np.sqrt(var_sum) / np.abs(np.log(survival)), 0.0)
        lower[ok] = survival[ok] ** np.exp(z * theta[ok])
        upper[ok] = survival[ok] ** np.exp(-z * theta[ok])
    if np.any(degenerate):
        warnings.warn(
            "survival reached 0; degenerate [0, 0] confidence bounds at the final step(s)",
            RuntimeWarning,
            stacklevel=2,
        )

    return SurvivalCurve(
        times=step_times,
        survival=survival,
        ci_lower=lower,
        ci_upper=upper,
        at_risk=n.astype(float),
        events=d.astype(float),
    )


def km_stratified(
    dataset: Dataset, group_labels: Sequence, options: KmOptions = KmOptions()
) -> dict:
    """One independent product-limit fit per group label.

    ``group_labels`` must assign every sample a non-missing label.
    """
    if len(group_labels) != dataset.n:
        raise DataError(
            f"got {len(group_labels)} labels for {dataset.n} samples"
        )
    groups: dict = {}
    for idx, label in enumerate(group_labels):
        if label is None or (isinstance(label, float) and np.isnan(label)):
            raise DataError(f"sample {idx} has no group label")
        groups.setdefault(label, []).append(idx)
    curves = {}
    for label in sorted(groups, key=str):
        idx = groups[label]
        if not idx:
            raise DataError(f"group {label!r} is empty")
        curves[label] = km_fit(dataset.times[idx], dataset.events[idx], options)
    return curves


def write_curves_csv(
    path, curves: Mapping[str, SurvivalCurve], eval_times: Sequence[float] = ()
) -> None:
    """Export curves as CSV rows: time, at_risk, events, survival, ci_lower, ci_upper, group.

    Rows cover the union of each curve's step times and any requested
    ``eval_times``; inserted evaluation rows carry the step value in force
    at that time and leave the tally cells empty.
    """
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["time", "at_risk", "events", "survival", "ci_lower", "ci_upper", "group"])
        for group in curves:
            curve = curves[group]
            steps = {float(t): i for i, t in enumerate(curve.times)}
            grid = sorted(set(steps) | {float(t) for t in eval_times})
            for t in grid:
                i = steps.get(t)
                if i is None:
                    k = int(np.searchsorted(curve.times, t, side="right")) - 1
                    survival = 1.0 if k < 0 else float(curve.survival[k])
                    lo = "" if k < 0 or curve.ci_lower is None else repr(float(curve.ci_lower[k]))
                    hi = "" if k < 0 or curve.ci_upper is None else repr(float(curve.ci_upper[k]))
                    writer.writerow([repr(t), "", "", repr(survival), lo, hi, group])
                else:
                    writer.writerow(
                        [
                            repr(t),
                            "" if curve.at_risk is None else repr(float(curve.at_risk[i])),
                            "" if curve.events is None else repr(float(curve.events[i])),
                            repr(float(curve.survival[i])),
                            "" if curve.ci_lower is None else repr(float(curve.ci_lower[i])),
                            "" if curve.ci_upper is None else repr(float(curve.ci_upper[i])),
                            group,
                        ]
                    )
