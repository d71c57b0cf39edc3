"""Random survival forest: bagged trees split by the log-rank statistic.

Each tree grows on a bootstrap multiset (n draws with replacement) using a
per-tree RNG stream derived from the forest seed and the tree index, so a
forest is bit-identical for a fixed seed no matter how many workers build
it. Leaves hold Nelson-Aalen cumulative hazards evaluated on the forest's
shared event-time grid; the ensemble prediction is the mean leaf hazard and
the mortality risk score is its sum over the grid.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np
from joblib import Parallel, delayed

from .core import CumulativeHazard, Dataset
from .errors import DataError
from .metrics import concordance_index

__all__ = [
    "RsfOptions",
    "SurvivalTree",
    "SurvivalForest",
    "nelson_aalen",
    "logrank_split_statistic",
    "rsf_fit",
    "rsf_predict_chf",
    "rsf_risk_score",
    "rsf_risk_scores",
    "rsf_oob_cindex",
    "save_forest",
    "load_forest",
]


@dataclass(frozen=True)
class RsfOptions:
    n_trees: int = 500
    mtry: Optional[int] = None  # None = ceil(sqrt(p)), resolved at fit time
    min_samples_split: int = 10
    min_samples_leaf: int = 5
    min_events_leaf: int = 1
    max_depth: Optional[int] = None
    seed: int = 0
    n_jobs: int = 1

    def __post_init__(self):
        if self.n_trees < 1:
            raise DataError("n_trees must be >= 1")
        if self.mtry is not None and self.mtry < 1:
            raise DataError("mtry must be >= 1")
        if self.min_samples_split < 2:
            raise DataError("min_samples_split must be >= 2")
        if self.min_samples_leaf < 1 or self.min_events_leaf < 1:
            raise DataError("leaf minima must be >= 1")
        if self.max_depth is not None and self.max_depth < 1:
            raise DataError("max_depth must be >= 1 or None")
        if self.seed < 0:
            raise DataError("seed must be non-negative")

    def to_dict(self) -> dict:
        # n_jobs is execution context, not model identity; it stays out so
        # persisted forests are bit-identical regardless of worker count
        return {
            "n_trees": self.n_trees,
            "mtry": self.mtry,
            "min_samples_split": self.min_samples_split,
            "min_samples_leaf": self.min_samples_leaf,
            "min_events_leaf": self.min_events_leaf,
            "max_depth": self.max_depth,
            "seed": self.seed,
        }


@dataclass(frozen=True)
class SurvivalTree:
    """Flattened node table; ``feature`` is -1 at leaves and ``leaf_id``
    indexes the per-leaf hazard/tally rows on the shared grid."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    leaf_id: np.ndarray
    chf: np.ndarray  # (n_leaves, n_grid)
    at_risk: np.ndarray
    events: np.ndarray
    in_bag: np.ndarray  # bootstrap multiplicity per training sample

    @property
    def n_nodes(self) -> int:
        return self.feature.size


@dataclass(frozen=True)
class SurvivalForest:
    trees: tuple[SurvivalTree, ...]
    time_grid: np.ndarray
    options: RsfOptions
    feature_names: tuple[str, ...]

    @property
    def p(self) -> int:
        return len(self.feature_names)


def _event_tallies(times: np.ndarray, events: np.ndarray):
    """Distinct event times with event counts and at-risk counts."""
    order = np.argsort(times, kind="stable")
    ts = times[order]
    es = events[order]
    distinct, start = np.unique(ts, return_index=True)
    d = np.add.reduceat(es.astype(np.int64), start) if ts.size else np.empty(0, np.int64)
    n = ts.size - start
    keep = d > 0
    return distinct[keep], d[keep], n[keep]


def nelson_aalen(times, events) -> CumulativeHazard:
    """Cumulative hazard H(t) = sum of d_i / n_i over distinct event times <= t."""
    t = np.asarray(times, dtype=float)
    e = np.asarray(events, dtype=bool)
    if t.ndim != 1 or t.shape != e.shape:
        raise DataError("times and events must be 1-D arrays of equal length")
    if t.size == 0:
        raise DataError("need at least one observation")
    dt, d, n = _event_tallies(t, e)
    return CumulativeHazard(times=dt, hazard=np.cumsum(d / n))


def logrank_split_statistic(left, right) -> float:
    """Absolute standardized log-rank statistic between two member groups.

    Observed-minus-expected left-group events are summed over the pooled
    distinct event times against their hypergeometric means and variances;
    zero total variance (for example, no events) yields 0.
    """
    lt = np.asarray(left[0], dtype=float)
    le = np.asarray(left[1], dtype=bool)
    rt = np.asarray(right[0], dtype=float)
    re = np.asarray(right[1], dtype=bool)
    if lt.size == 0 or rt.size == 0:
        raise DataError("both sides of a split must be non-empty")
    t = np.concatenate([lt, rt])
    e = np.concatenate([le, re])
    o_minus_e = 0.0
    variance = 0.0
    for tau in np.unique(t[e]):
        n = int(np.count_nonzero(t >= tau))
        nl = int(np.count_nonzero(lt >= tau))
        d = int(np.count_nonzero(e & (t == tau)))
        dl = int(np.count_nonzero(le & (lt == tau)))
        o_minus_e += dl - nl * d / n
        if n > 1:
            variance += d * (nl / n) * (1.0 - nl / n) * (n - d) / (n - 1)
    if variance <= 0.0:
        return 0.0
    return abs(o_minus_e) / math.sqrt(variance)


def _na_on_grid(times: np.ndarray, events: np.ndarray, grid: np.ndarray):
    """Nelson-Aalen hazard plus at-risk/event tallies evaluated on ``grid``."""
    dt, d, n = _event_tallies(times, events)
    cum = np.cumsum(d / n) if dt.size else np.empty(0)
    pos = np.searchsorted(dt, grid, side="right") - 1
    chf = np.where(pos >= 0, cum[np.maximum(pos, 0)], 0.0) if dt.size else np.zeros(grid.size)
    sorted_times = np.sort(times)
    at_risk = times.size - np.searchsorted(sorted_times, grid, side="left")
    ev = np.zeros(grid.size)
    if dt.size:
        hit = np.searchsorted(grid, dt)
        on_grid = (hit < grid.size) & (grid[np.minimum(hit, grid.size - 1)] == dt)
        ev[hit[on_grid]] = d[on_grid]
    return chf, at_risk.astype(float), ev


def _best_split(values, times, events, min_leaf, min_events):
    """Best (statistic, threshold) over midpoints of consecutive distinct values.

    Per-candidate at-risk/event tallies come from integer (event-time row,
    value-segment) histograms cumulated across segments, which evaluates
    the log-rank statistic for every candidate at once in O(members +
    event_times * candidates). Returns None when no candidate satisfies
    the leaf minima with a positive statistic.
    """
    m = values.size
    order = np.argsort(values, kind="stable")
    v = values[order]
    t = times[order]
    ev = events[order]
    cut = np.flatnonzero(v[:-1] < v[1:])  # left = first j+1 members
    if cut.size == 0:
        return None
    ut = np.unique(t[ev])
    if ut.size == 0:
        return None
    cum_events = np.cumsum(ev)
    total_events = cum_events[-1]
    left_n = cut + 1
    valid = (left_n >= min_leaf) & (m - left_n >= min_leaf)
    valid &= (cum_events[cut] >= min_events) & (total_events - cum_events[cut] >= min_events)
    if not valid.any():
        return None
    cut = cut[valid]

    u = ut.size
    n_seg = cut.size + 1  # candidate prefixes plus the remainder segment
    segment = np.searchsorted(cut, np.arange(m), side="left")
    rank = np.searchsorted(ut, t, side="right")  # member is at risk for rows < rank
    at_risk_rows = rank - 1
    in_risk = rank >= 1
    counts = np.bincount(
        at_risk_rows[in_risk] * n_seg + segment[in_risk], minlength=u * n_seg
    ).reshape(u, n_seg)
    risk_by_seg = np.cumsum(counts[::-1], axis=0)[::-1]  # suffix over event times
    risk_cum = np.cumsum(risk_by_seg, axis=1, dtype=float)
    nl, n_tot = risk_cum[:, :-1], risk_cum[:, -1]
    ev_rows = np.flatnonzero(ev)
    death_row = np.searchsorted(ut, t[ev_rows])  # event times all lie on ut
    dcounts = np.bincount(
        death_row * n_seg + segment[ev_rows], minlength=u * n_seg
    ).reshape(u, n_seg)
    death_cum = np.cumsum(dcounts, axis=1, dtype=float)
    dl, d_tot = death_cum[:, :-1], death_cum[:, -1]

    numer = (dl - nl * (d_tot / n_tot)[:, None]).sum(axis=0)
    share = nl / n_tot[:, None]
    vfac = np.where(n_tot > 1, (n_tot - d_tot) / np.maximum(n_tot - 1.0, 1.0), 0.0)
    var = (d_tot[:, None] * share * (1.0 - share) * vfac[:, None]).sum(axis=0)
    stat = np.where(var > 0, np.abs(numer) / np.sqrt(np.where(var > 0, var, 1.0)), 0.0)
    best = int(np.argmax(stat))  # first max: smallest threshold wins ties
    if stat[best] <= 0.0:
        return None
    j = cut[best]
    return float(stat[best]), float((v[j] + v[j + 1]) / 2.0)


def _grow_tree(tree_index, seed, x, times, events, grid, mtry, opts_tuple) -> SurvivalTree:
    min_split, min_leaf, min_events, max_depth = opts_tuple
    n, p = x.shape
    rng = np.random.default_rng([seed, tree_index])
    in_bag = np.bincount(rng.integers(0, n, size=n), minlength=n)
    root_members = np.repeat(np.arange(n), in_bag)

    feature, threshold, left, right, leaf_id = [], [], [], [], []
    leaf_chf, leaf_at_risk, leaf_events = [], [], []
    stack = [(root_members, 0, -1, False)]
    while stack:
        members, depth, parent, is_left = stack.pop()
        node = len(feature)
        if parent >= 0:
            (left if is_left else right)[parent] = node
        mt = times[members]
        me = events[members]
        split = None
        depth_ok = max_depth is None or depth < max_depth
        if members.size >= min_split and depth_ok and me.any():
            feats = np.sort(rng.choice(p, size=mtry, replace=False))
            for f in feats:  # ascending order: strict > keeps lowest index on ties
                cand = _best_split(x[members, f], mt, me, min_leaf, min_events)
                if cand is not None and (split is None or cand[0] > split[0]):
                    split = (cand[0], int(f), cand[1])
        if split is None:
            feature.append(-1)
            threshold.append(math.nan)
            left.append(-1)
            right.append(-1)
            leaf_id.append(len(leaf_chf))
            chf, at_risk, d = _na_on_grid(mt, me, grid)
            leaf_chf.append(chf)
            leaf_at_risk.append(at_risk)
            leaf_events.append(d)
        else:
            _, f, thr = split
            feature.append(f)
            threshold.append(thr)
            left.append(-1)
            right.append(-1)
            leaf_id.append(-1)
            go_left = x[members, f] <= thr
            stack.append((members[~go_left], depth + 1, node, False))
            stack.append((members[go_left], depth + 1, node, True))
    return SurvivalTree(
        feature=np.asarray(feature, dtype=np.int64),
        threshold=np.asarray(threshold, dtype=float),
        left=np.asarray(left, dtype=np.int64),
        right=np.asarray(right, dtype=np.int64),
        leaf_id=np.asarray(leaf_id, dtype=np.int64),
        chf=np.vstack(leaf_chf),
        at_risk=np.vstack(leaf_at_risk),
        events=np.vstack(leaf_events),
        in_bag=in_bag,
    )


def rsf_fit(dataset: Dataset, options: RsfOptions = RsfOptions()) -> SurvivalForest:
    """Grow ``options.n_trees`` bootstrap survival trees.

    At each node ``mtry`` features are sampled without replacement and the
    (feature, threshold) pair with the largest log-rank statistic wins;
    statistic ties break to the lowest feature index, then the smallest
    threshold. Nodes become leaves when the size/depth minima or a positive
    split statistic cannot be met.
    """
    if dataset.p < 1:
        raise DataError("dataset has no covariates")
    events = dataset.events
    if not events.any():
        raise DataError("dataset has no events")
    grid = np.unique(dataset.times[events])
    if grid.size < 2:
        raise DataError("need at least two distinct event times")
    mtry = options.mtry if options.mtry is not None else math.ceil(math.sqrt(dataset.p))
    if not 1 <= mtry <= dataset.p:
        raise DataError(f"mtry must be in [1, {dataset.p}], got {mtry}")
    opts_tuple = (
        options.min_samples_split,
        options.min_samples_leaf,
        options.min_events_leaf,
        options.max_depth,
    )
    x = dataset.covariate_matrix
    times = dataset.times
    args = (options.seed, x, times, events, grid, mtry, opts_tuple)
    if options.n_jobs == 1:
        trees = [_grow_tree(i, *args) for i in range(options.n_trees)]
    else:
        trees = Parallel(n_jobs=options.n_jobs)(
            delayed(_grow_tree)(i, *args) for i in range(options.n_trees)
        )
    return SurvivalForest(
        trees=tuple(trees),
        time_grid=grid,
        options=options,
        feature_names=dataset.feature_names,
    )


def _tree_leaves(tree: SurvivalTree, x: np.ndarray) -> np.ndarray:
    """Leaf row index for every row of ``x`` (routing is total)."""
    n = x.shape[0]
    node = np.zeros(n, dtype=np.int64)
    while True:
        feat = tree.feature[node]
        active = feat >= 0
        if not active.any():
            break
        rows = np.flatnonzero(active)
        go_left = x[rows, feat[rows]] <= tree.threshold[node[rows]]
        node[rows] = np.where(go_left, tree.left[node[rows]], tree.right[node[rows]])
    return tree.leaf_id[node]


def _ensemble_chf_matrix(forest: SurvivalForest, x: np.ndarray) -> np.ndarray:
    total = np.zeros((x.shape[0], forest.time_grid.size))
    for tree in forest.trees:
        total += tree.chf[_tree_leaves(tree, x)]
    return total / len(forest.trees)


def _check_vector(forest: SurvivalForest, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (forest.p,):
        raise DataError(f"covariate vector has shape {x.shape}, expected ({forest.p},)")
    return x


def rsf_predict_chf(forest: SurvivalForest, x) -> CumulativeHazard:
    """Ensemble cumulative hazard: mean of the routed leaf hazards on the grid."""
    x = _check_vector(forest, x)
    values = _ensemble_chf_matrix(forest, x[None, :])[0]
    return CumulativeHazard(times=forest.time_grid, hazard=values)


def rsf_risk_score(forest: SurvivalForest, x) -> float:
    """Mortality score: ensemble cumulative hazard summed over the time grid."""
    x = _check_vector(forest, x)
    return float(_ensemble_chf_matrix(forest, x[None, :])[0].sum())


def rsf_risk_scores(forest: SurvivalForest, x_matrix) -> np.ndarray:
    """Mortality scores for a whole covariate matrix at once."""
    x = np.asarray(x_matrix, dtype=float)
    if x.ndim != 2 or x.shape[1] != forest.p:
        raise DataError(f"covariate matrix has shape {x.shape}, expected (n, {forest.p})")
    return _ensemble_chf_matrix(forest, x).sum(axis=1)


def rsf_oob_cindex(forest: SurvivalForest, dataset: Dataset) -> float:
    """Concordance of out-of-bag mortality scores against the training outcomes.

    Each sample's risk comes from the mean hazard of the trees whose
    bootstrap missed it; samples in every bootstrap are excluded with a
    warning.
    """
    n = dataset.n
    if any(tree.in_bag.size != n for tree in forest.trees):
        raise DataError("dataset size does not match the forest's training set")
    x = dataset.covariate_matrix
    risk_sum = np.zeros(n)
    oob_count = np.zeros(n, dtype=np.int64)
    for tree in forest.trees:
        oob = tree.in_bag == 0
        if not oob.any():
            continue
        leaves = _tree_leaves(tree, x[oob])
        risk_sum[oob] += tree.chf.sum(axis=1)[leaves]
        oob_count[oob] += 1
    included = oob_count > 0
    if not included.any():
        raise DataError("no sample is out-of-bag for any tree; cannot score")
    n_excluded = int(np.count_nonzero(~included))
    if n_excluded:
        warnings.warn(
            f"{n_excluded} sample(s) appear in every bootstrap and are excluded "
            "from the out-of-bag score",
            RuntimeWarning,
            stacklevel=2,
        )
    risks = risk_sum[included] / oob_count[included]
    return concordance_index(
        dataset.times[included], dataset.events[included], risks
    ).c_index


_RSF_FORMAT = "survkit-rsf"
_RSF_VERSION = 1


def save_forest(forest: SurvivalForest, path) -> None:
    """Persist the forest as versioned JSON; loading reproduces identical predictions."""
    payload = {
        "format": _RSF_FORMAT,
        "version": _RSF_VERSION,
        "options": forest.options.to_dict(),
        "feature_names": list(forest.feature_names),
        "time_grid": forest.time_grid.tolist(),
        "trees": [
            {
                "feature": tree.feature.tolist(),
                "threshold": [None if math.isnan(v) else v for v in tree.threshold],
                "left": tree.left.tolist(),
                "right": tree.right.tolist(),
                "leaf_id": tree.leaf_id.tolist(),
                "chf": tree.chf.tolist(),
                "at_risk": tree.at_risk.tolist(),
                "events": tree.events.tolist(),
                "in_bag": tree.in_bag.tolist(),
            }
            for tree in forest.trees
        ],
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, sort_keys=True, separators=(",", ":"))
        fh.write("\n")


def load_forest(path) -> SurvivalForest:
    with open(path) as fh:
        payload = json.load(fh)
    if payload.get("format") != _RSF_FORMAT or payload.get("version") != _RSF_VERSION:
        raise DataError(f"{path}: not a version-{_RSF_VERSION} {_RSF_FORMAT} file")
    trees = tuple(
        SurvivalTree(
            feature=np.asarray(t["feature"], dtype=np.int64),
            threshold=np.asarray(
                [math.nan if v is None else v for v in t["threshold"]], dtype=float
            ),
            left=np.asarray(t["left"], dtype=np.int64),
            right=np.asarray(t["right"], dtype=np.int64),
            leaf_id=np.asarray(t["leaf_id"], dtype=np.int64),
            chf=np.asarray(t["chf"], dtype=float),
            at_risk=np.asarray(t["at_risk"], dtype=float),
            events=np.asarray(t["events"], dtype=float),
            in_bag=np.asarray(t["in_bag"], dtype=np.int64),
        )
        for t in payload["trees"]
    )
    return SurvivalForest(
        trees=trees,
        time_grid=np.asarray(payload["time_grid"], dtype=float),
        options=RsfOptions(**payload["options"]),
        feature_names=tuple(payload["feature_names"]),
    )
