"""Core domain types: subjects, datasets, and step-function estimates.

All types are immutable after construction (arrays are marked read-only),
so they can be shared freely across threads.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Optional, Sequence

import numpy as np

from .errors import DataError

__all__ = [
    "SurvivalSample",
    "Dataset",
    "SurvivalCurve",
    "CumulativeHazard",
    "curve_eval",
    "chf_to_survival",
]


def _frozen_array(values, dtype=float) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class SurvivalSample:
    """One subject: follow-up time in days, event indicator, covariates.

    ``event`` is True when the endpoint (death) was observed and False for
    right-censored follow-up.
    """

    time: float
    event: bool
    covariates: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "time", float(self.time))
        object.__setattr__(self, "event", bool(self.event))
        object.__setattr__(self, "covariates", _frozen_array(np.atleast_1d(self.covariates)))
        if not np.isfinite(self.time) or self.time < 0:
            raise DataError(f"sample time must be finite and >= 0, got {self.time}")


@dataclass(frozen=True)
class Dataset:
    """Column-named collection of survival samples with equal-length covariates."""

    feature_names: tuple[str, ...]
    samples: tuple[SurvivalSample, ...]

    def __post_init__(self):
        object.__setattr__(self, "feature_names", tuple(self.feature_names))
        object.__setattr__(self, "samples", tuple(self.samples))
        p = len(self.feature_names)
        if len(set(self.feature_names)) != p:
            raise DataError("feature names must be unique")
        for i, s in enumerate(self.samples):
            if s.covariates.shape != (p,):
                raise DataError(
                    f"sample {i} has {s.covariates.shape[0]} covariates, expected {p}"
                )

    @classmethod
    def from_arrays(cls, times, events, covariates, feature_names) -> "Dataset":
        x = np.asarray(covariates, dtype=float)
        if x.ndim != 2:
            raise DataError("covariates must be a 2-D array")
        samples = tuple(
            SurvivalSample(t, e, row) for t, e, row in zip(times, events, x, strict=True)
        )
        return cls(tuple(feature_names), samples)

    @property
    def n(self) -> int:
        return len(self.samples)

    @property
    def p(self) -> int:
        return len(self.feature_names)

    @cached_property
    def times(self) -> np.ndarray:
        return _frozen_array([s.time for s in self.samples])

    @cached_property
    def events(self) -> np.ndarray:
        return _frozen_array([s.event for s in self.samples], dtype=bool)

    @cached_property
    def covariate_matrix(self) -> np.ndarray:
        if self.n == 0:
            return _frozen_array(np.empty((0, self.p)))
        return _frozen_array(np.vstack([s.covariates for s in self.samples]))

    def subset(self, indices) -> "Dataset":
        return Dataset(self.feature_names, tuple(self.samples[i] for i in indices))

    def select_features(self, names: Sequence[str]) -> "Dataset":
        """Project onto a subset of covariate columns, in the given order."""
        missing = [n for n in names if n not in self.feature_names]
        if missing:
            raise DataError(f"unknown feature(s): {', '.join(missing)}")
        cols = [self.feature_names.index(n) for n in names]
        x = self.covariate_matrix[:, cols]
        return Dataset.from_arrays(self.times, self.events, x, tuple(names))


@dataclass(frozen=True)
class SurvivalCurve:
    """Right-continuous survival step function with optional 95% bounds.

    ``times`` holds the step locations (distinct event times); the implied
    value before the first step is 1. ``at_risk``/``events`` carry the
    per-step tallies when the curve came from an estimator that has them.
    """

    times: np.ndarray
    survival: np.ndarray
    ci_lower: Optional[np.ndarray] = None
    ci_upper: Optional[np.ndarray] = None
    at_risk: Optional[np.ndarray] = None
    events: Optional[np.ndarray] = None

    def __post_init__(self):
        t = _frozen_array(self.times)
        s = _frozen_array(self.survival)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "survival", s)
        if t.ndim != 1 or s.shape != t.shape:
            raise DataError("times and survival must be 1-D arrays of equal length")
        if np.any(np.diff(t) <= 0):
            raise DataError("curve times must be strictly increasing")
        if s.size and (s.min() < 0 or s.max() > 1):
            raise DataError("survival probabilities must lie in [0, 1]")
        if np.any(np.diff(s) > 0):
            raise DataError("survival must be non-increasing")
        for name in ("ci_lower", "ci_upper"):
            v = getattr(self, name)
            if v is not None:
                object.__setattr__(self, name, _frozen_array(v))
        if self.ci_lower is not None and self.ci_upper is not None:
            if np.any(self.ci_lower > s) or np.any(self.ci_upper < s):
                raise DataError("confidence bounds must bracket the survival estimate")
        for name, dtype in (("at_risk", float), ("events", float)):
            v = getattr(self, name)
            if v is not None:
                object.__setattr__(self, name, _frozen_array(v, dtype=dtype))

    def __len__(self) -> int:
        return self.times.size


@dataclass(frozen=True)
class CumulativeHazard:
    """Non-decreasing cumulative hazard step function H(t); H = 0 before the first step."""

    times: np.ndarray
    hazard: np.ndarray

    def __post_init__(self):
        t = _frozen_array(self.times)
        h = _frozen_array(self.hazard)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "hazard", h)
        if t.ndim != 1 or h.shape != t.shape:
            raise DataError("times and hazard must be 1-D arrays of equal length")
        if np.any(np.diff(t) <= 0):
            raise DataError("hazard times must be strictly increasing")
        if h.size and h[0] < 0:
            raise DataError("cumulative hazard must be non-negative")
        if np.any(np.diff(h) < 0):
            raise DataError("cumulative hazard must be non-decreasing")

    def __len__(self) -> int:
        return self.times.size


def curve_eval(curve: SurvivalCurve, t: float) -> float:
    """Survival probability at time ``t``: the value at the largest step <= t.

    Returns 1.0 for any ``t`` before the first step.
    """
    idx = int(np.searchsorted(curve.times, t, side="right")) - 1
    if idx < 0:
        return 1.0
    return float(curve.survival[idx])


def chf_to_survival(chf: CumulativeHazard) -> SurvivalCurve:
    """Survival curve S(t) = exp(-H(t)) from a cumulative hazard."""
    return SurvivalCurve(times=chf.times, survival=np.exp(-np.asarray(chf.hazard)))
