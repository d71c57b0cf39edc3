"""Clinical-table ingestion: load, merge, clean, encode, and split.

Tables are kept column-named and cell-typed (string, number, or missing)
until the final conversion to a numeric :class:`~survkit.core.Dataset`.
The full pipeline runs in a fixed order: drop empty columns, drop rows
with missing labels, impute, encode, trim follow-up-time outliers, split.
Every stage's row/column movement lands in an audit report.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .core import Dataset
from .errors import DataError

__all__ = [
    "RawTable",
    "PreprocessSpec",
    "ImputeModel",
    "PipelineResult",
    "DEFAULT_MISSING_TOKENS",
    "load_table",
    "merge_on_key",
    "drop_missing_labels",
    "drop_empty_columns",
    "fit_impute",
    "apply_impute",
    "encode_categoricals",
    "remove_outliers_iqr",
    "iqr_fences",
    "stratified_split",
    "bin_age_groups",
    "resolve_features",
    "table_to_dataset",
    "write_dataset_tsv",
    "read_dataset_tsv",
    "run_pipeline",
]

DEFAULT_MISSING_TOKENS = ("", "NA", "[Not Available]")


@dataclass
class RawTable:
    """A header-named table of optional cells keyed by a sample-identifier column.

    Cells are strings, floats, or None (missing); treat instances as
    immutable and let the pipeline operations build new tables.
    """

    column_names: list[str]
    rows: list[list]
    key_column: str

    def __post_init__(self):
        if self.key_column not in self.column_names:
            raise DataError(f"key column {self.key_column!r} is not among the columns")
        ncol = len(self.column_names)
        for i, row in enumerate(self.rows):
            if len(row) != ncol:
                raise DataError(f"row {i + 1} has {len(row)} cells, expected {ncol}")

    @property
    def n(self) -> int:
        return len(self.rows)

    def col_index(self, name: str) -> int:
        try:
            return self.column_names.index(name)
        except ValueError:
            raise DataError(f"column {name!r} not found") from None

    def column(self, name: str) -> list:
        idx = self.col_index(name)
        return [row[idx] for row in self.rows]


def _maybe_float(cell) -> Optional[float]:
    """Numeric value of a cell, or None when missing/unparseable/non-finite."""
    if cell is None:
        return None
    if isinstance(cell, (int, float)):
        value = float(cell)
    else:
        try:
            value = float(cell)
        except ValueError:
            return None
    return value if math.isfinite(value) else None


def load_table(
    path,
    format: Optional[str] = None,
    key_column: Optional[str] = None,
    missing_tokens: Sequence[str] = DEFAULT_MISSING_TOKENS,
) -> RawTable:
    """Read a tab-separated table (header row required) or a JSON array of records.

    Empty cells and sentinel strings become missing. Tab-separated rows with
    the wrong cell count fail with their line number; duplicate header names
    fail outright.
    """
    path = str(path)
    if format is None:
        format = "json" if path.endswith(".json") else "tsv"
    aliases = {"tab-separated": "tsv", "json-records": "json"}
    format = aliases.get(format, format)
    if format not in ("tsv", "json"):
        raise DataError(f"unknown table format {format!r}; use 'tsv' or 'json'")
    tokens = set(missing_tokens)

    if format == "tsv":
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
        if not lines:
            raise DataError(f"{path}: empty file")
        columns = [c.strip() for c in lines[0].split("\t")]
        if len(set(columns)) != len(columns):
            dupes = sorted({c for c in columns if columns.count(c) > 1})
            raise DataError(f"{path}: duplicate header name(s): {', '.join(dupes)}")
        rows = []
        for lineno, line in enumerate(lines[1:], start=2):
            cells = [c.strip() for c in line.split("\t")]
            if len(cells) != len(columns):
                raise DataError(
                    f"{path}: line {lineno}: expected {len(columns)} cells, got {len(cells)}"
                )
            rows.append([None if c in tokens else c for c in cells])
    else:
        with open(path, encoding="utf-8") as fh:
            records = json.load(fh)
        if not isinstance(records, list) or any(not isinstance(r, dict) for r in records):
            raise DataError(f"{path}: expected a JSON array of records")
        columns = []
        for record in records:
            for key in record:
                if key not in columns:
                    columns.append(key)
        if not columns:
            raise DataError(f"{path}: no columns found")
        rows = []
        for i, record in enumerate(records):
            row = []
            for col in columns:
                value = record.get(col)
                if value is None:
                    row.append(None)
                elif isinstance(value, str):
                    value = value.strip()
                    row.append(None if value in tokens else value)
                elif isinstance(value, (int, float)):
                    value = float(value)
                    row.append(value if math.isfinite(value) else None)
                else:
                    raise DataError(
                        f"{path}: record {i}: unsupported value type for {col!r}"
                    )
            rows.append(row)

    key = key_column if key_column is not None else columns[0]
    return RawTable(column_names=columns, rows=rows, key_column=key)


def merge_on_key(a: RawTable, b: RawTable) -> RawTable:
    """Inner join on the two tables' key columns; row order follows ``a``.

    Keys must be unique within each input; rows with a missing key cannot
    join and are left out. Non-key column names may not collide between the
    inputs (the union would be ambiguous).
    """
    overlap = (set(a.column_names) & set(b.column_names)) - {a.key_column, b.key_column}
    if overlap:
        raise DataError(
            f"column name(s) present in both tables: {', '.join(sorted(overlap))}"
        )

    def keyed_rows(t: RawTable) -> dict:
        idx = t.col_index(t.key_column)
        seen: dict = {}
        dupes = set()
        for row in t.rows:
            key = row[idx]
            if key is None:
                continue
            if key in seen:
                dupes.add(key)
            seen[key] = row
        if dupes:
            raise DataError(f"duplicate key(s) within one input: {', '.join(sorted(dupes))}")
        return seen

    a_by_key = keyed_rows(a)
    b_by_key = keyed_rows(b)
    b_key_idx = b.col_index(b.key_column)
    b_cols = [c for c in b.column_names if c != b.key_column]
    b_take = [i for i, c in enumerate(b.column_names) if c != b.key_column]

    rows = []
    a_key_idx = a.col_index(a.key_column)
    for row in a.rows:
        key = row[a_key_idx]
        if key is None or key not in b_by_key:
            continue
        other = b_by_key[key]
        rows.append(list(row) + [other[i] for i in b_take])
    return RawTable(
        column_names=list(a.column_names) + b_cols,
        rows=rows,
        key_column=a.key_column,
    )


def drop_missing_labels(table: RawTable, time_col: str, event_col: str) -> RawTable:
    """Keep only rows with a finite non-negative time and an event flag in {0, 1}.

    Rows whose label cells are present but unparseable (for example an event
    coded "2") are dropped too, with a warning.
    """
    t_idx = table.col_index(time_col)
    e_idx = table.col_index(event_col)
    kept = []
    unparseable = 0
    for row in table.rows:
        time = _maybe_float(row[t_idx])
        event = _maybe_float(row[e_idx])
        ok = time is not None and time >= 0 and event in (0.0, 1.0)
        if ok:
            kept.append(row)
        elif row[t_idx] is not None or row[e_idx] is not None:
            unparseable += 1
    if unparseable:
        warnings.warn(
            f"dropped {unparseable} row(s) with unparseable or invalid label values",
            RuntimeWarning,
            stacklevel=2,
        )
    return RawTable(list(table.column_names), kept, table.key_column)


def drop_empty_columns(table: RawTable) -> RawTable:
    """Remove columns with no non-missing cell; the key column always stays."""
    keep = [
        i
        for i, name in enumerate(table.column_names)
        if name == table.key_column or any(row[i] is not None for row in table.rows)
    ]
    return RawTable(
        column_names=[table.column_names[i] for i in keep],
        rows=[[row[i] for i in keep] for row in table.rows],
        key_column=table.key_column,
    )


@dataclass(frozen=True)
class ImputeModel:
    """Per-column medians learned on a fit partition."""

    medians: dict

    def __post_init__(self):
        object.__setattr__(self, "medians", dict(self.medians))


def fit_impute(
    table: RawTable, columns: Sequence[str], fit_rows: Optional[Sequence[int]] = None
) -> ImputeModel:
    """Median per column over the fit rows (even counts average the middle two).

    Cells that are present but non-numeric count as missing. A column with
    no numeric value among the fit rows is an error.
    """
    row_ids = range(table.n) if fit_rows is None else fit_rows
    medians = {}
    for col in columns:
        idx = table.col_index(col)
        values = [
            v for i in row_ids if (v := _maybe_float(table.rows[i][idx])) is not None
        ]
        if not values:
            raise DataError(f"column {col!r} has no numeric values on the fit rows")
        medians[col] = float(np.median(values))
    return ImputeModel(medians)


def apply_impute(table: RawTable, model: ImputeModel) -> RawTable:
    """Fill missing (or unparseable) cells of the covered columns with their medians."""
    col_ids = {table.col_index(col): med for col, med in model.medians.items()}
    rows = []
    for row in table.rows:
        new = list(row)
        for idx, median in col_ids.items():
            value = _maybe_float(new[idx])
            new[idx] = median if value is None else value
        rows.append(new)
    return RawTable(list(table.column_names), rows, table.key_column)


@dataclass(frozen=True)
class PreprocessSpec:
    """Configuration of the preprocessing pipeline."""

    time_column: str
    event_column: str
    numeric_features: tuple = ()
    label_encode: tuple = ()  # ((column, {category: int}), ...)
    one_hot: tuple = ()  # ((column, reference_category), ...)
    outlier_column: str = ""
    iqr_multiplier: float = 1.5
    split_ratio: float = 0.8
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "numeric_features", tuple(self.numeric_features))
        object.__setattr__(
            self, "label_encode", tuple((c, dict(m)) for c, m in self.label_encode)
        )
        object.__setattr__(self, "one_hot", tuple((c, r) for c, r in self.one_hot))
        if not self.outlier_column:
            object.__setattr__(self, "outlier_column", self.time_column)
        if not 0.0 < self.split_ratio < 1.0:
            raise DataError(f"split_ratio must be in (0, 1), got {self.split_ratio}")
        if not self.iqr_multiplier > 0:
            raise DataError(f"iqr_multiplier must be positive, got {self.iqr_multiplier}")


def _cell_category(cell) -> str:
    return cell if isinstance(cell, str) else str(cell)


def observed_categories(table: RawTable, column: str) -> list[str]:
    """Sorted distinct non-missing values of a column, as strings."""
    return sorted({_cell_category(c) for c in table.column(column) if c is not None})


def encode_categoricals(table: RawTable, spec: PreprocessSpec) -> RawTable:
    """Label-encode and one-hot encode categorical columns.

    A label-encoded column ``c`` becomes the integer column ``c_encoded``;
    unmapped or missing values are errors. A one-hot column becomes one 0/1
    indicator per observed non-reference category, named ``c_<category>``
    in sorted order; the reference category (and any missing cell) maps to
    all zeros.
    """
    label_cols = {c for c, _ in spec.label_encode}
    onehot_cols = {c for c, _ in spec.one_hot}
    if label_cols & onehot_cols:
        raise DataError(
            "column(s) listed for both label and one-hot encoding: "
            + ", ".join(sorted(label_cols & onehot_cols))
        )
    label_maps = dict(spec.label_encode)
    onehot_refs = dict(spec.one_hot)

    out_columns: list[str] = []
    plan = []  # (kind, source_index, payload)
    for i, name in enumerate(table.column_names):
        if name in label_maps:
            out_columns.append(f"{name}_encoded")
            plan.append(("label", i, (name, label_maps[name])))
        elif name in onehot_refs:
            cats = [
                c for c in observed_categories(table, name) if c != onehot_refs[name]
            ]
            out_columns.extend(f"{name}_{c}" for c in cats)
            plan.append(("onehot", i, (name, cats)))
        else:
            out_columns.append(name)
            plan.append(("copy", i, None))

    rows = []
    for r, row in enumerate(table.rows, start=1):
        new = []
        for kind, i, payload in plan:
            if kind == "copy":
                new.append(row[i])
            elif kind == "label":
                name, mapping = payload
                cell = row[i]
                if cell is None:
                    raise DataError(
                        f"missing value in label-encoded column {name!r} at data row {r}"
                    )
                key = _cell_category(cell)
                if key not in mapping:
                    raise DataError(
                        f"unmapped category {key!r} in column {name!r} at data row {r}"
                    )
                new.append(float(mapping[key]))
            else:
                name, cats = payload
                cell = row[i]
                value = None if cell is None else _cell_category(cell)
                new.extend(1.0 if value == c else 0.0 for c in cats)
        rows.append(new)
    return RawTable(out_columns, rows, table.key_column)


def iqr_fences(values, multiplier: float) -> tuple[float, float, float, float]:
    """(q1, q3, lower fence, upper fence) with linearly interpolated quartiles."""
    arr = np.asarray(values, dtype=float)
    q1, q3 = np.percentile(arr, [25.0, 75.0])
    iqr = q3 - q1
    return float(q1), float(q3), float(q1 - multiplier * iqr), float(q3 + multiplier * iqr)


def remove_outliers_iqr(table: RawTable, column: str, multiplier: float = 1.5) -> RawTable:
    """Drop rows whose column value falls outside [Q1 - m*IQR, Q3 + m*IQR].

    The column must be numeric and complete (this runs after label drop and
    imputation in the pipeline).
    """
    if not multiplier > 0:
        raise DataError(f"multiplier must be positive, got {multiplier}")
    idx = table.col_index(column)
    values = []
    for r, row in enumerate(table.rows, start=1):
        v = _maybe_float(row[idx])
        if v is None:
            raise DataError(
                f"column {column!r} must be numeric with no missing cells "
                f"(bad cell at data row {r})"
            )
        values.append(v)
    if not values:
        return RawTable(list(table.column_names), [], table.key_column)
    _, _, lo, hi = iqr_fences(values, multiplier)
    rows = [row for row, v in zip(table.rows, values) if lo <= v <= hi]
    return RawTable(list(table.column_names), rows, table.key_column)


def _allocate_train_counts(sizes: Sequence[int], ratio: float) -> list[int]:
    """Largest-remainder apportionment of round(ratio * n) across strata.

    Each stratum keeps at least one sample on both sides.
    """
    total_target = int(math.floor(ratio * sum(sizes) + 0.5))
    quotas = [ratio * s for s in sizes]
    counts = [int(math.floor(q)) for q in quotas]
    remainder = total_target - sum(counts)
    by_fraction = sorted(
        range(len(sizes)), key=lambda i: (-(quotas[i] - counts[i]), i)
    )
    for i in by_fraction[:remainder]:
        counts[i] += 1
    return [min(max(c, 1), s - 1) for c, s in zip(counts, sizes)]


def _stratified_indices(events: np.ndarray, ratio: float, seed: int):
    if seed < 0:
        raise DataError("seed must be non-negative")
    strata = [np.flatnonzero(~events), np.flatnonzero(events)]
    for label, s in zip((0, 1), strata):
        if s.size < 2:
            raise DataError(f"event stratum {label} has {s.size} member(s); need >= 2")
    counts = _allocate_train_counts([s.size for s in strata], ratio)
    rng = np.random.default_rng(seed)
    picked = []
    for s, k in zip(strata, counts):
        perm = rng.permutation(s.size)
        picked.append(s[perm[:k]])
    train = np.sort(np.concatenate(picked))
    test = np.setdiff1d(np.arange(events.size), train)
    return train, test


def stratified_split(dataset: Dataset, ratio: float, seed: int):
    """Event-stratified train/test split, deterministic for a fixed seed.

    Train sizes per stratum follow largest-remainder rounding of the ratio,
    so the overall train size is round(ratio * n) up to the per-stratum
    clamping that keeps both sides of every stratum non-empty.
    """
    if not 0.0 < ratio < 1.0:
        raise DataError(f"split ratio must be in (0, 1), got {ratio}")
    train_idx, test_idx = _stratified_indices(dataset.events, ratio, seed)
    return dataset.subset(train_idx), dataset.subset(test_idx)


def bin_age_groups(values, edges: Sequence[float]) -> list[str]:
    """Label ages by bins such as [0, 60, 100] -> "0-60", "61-100".

    The first bin is closed on both sides; later bins cover
    (edges[k], edges[k+1]], so a 60-year-old falls in "0-60" and a
    61-year-old in "61-100". Ages outside the edges are errors.
    """
    edges = [float(e) for e in edges]
    if len(edges) < 2 or any(b <= a for a, b in zip(edges, edges[1:])):
        raise DataError("edges must be at least two strictly increasing values")

    def show(v: float) -> str:
        return f"{int(v)}" if v.is_integer() else f"{v:g}"

    labels = []
    for k in range(len(edges) - 1):
        lo = edges[k] if k == 0 else edges[k] + 1
        labels.append(f"{show(lo)}-{show(edges[k + 1])}")
    out = []
    for v in np.asarray(values, dtype=float):
        if v < edges[0] or v > edges[-1]:
            raise DataError(f"age {v:g} is outside the bin edges {edges[0]:g}..{edges[-1]:g}")
        k = int(np.searchsorted(edges[1:], v, side="left"))
        out.append(labels[k])
    return out


def resolve_features(patterns: Sequence[str], available: Sequence[str]) -> list[str]:
    """Expand feature names, where a trailing ``*`` matches by prefix (sorted)."""
    resolved = []
    for pat in patterns:
        if pat.endswith("*"):
            matches = sorted(c for c in available if c.startswith(pat[:-1]))
            if not matches:
                raise DataError(f"feature pattern {pat!r} matches no column")
            resolved.extend(m for m in matches if m not in resolved)
        else:
            if pat not in available:
                raise DataError(f"feature column {pat!r} not found")
            if pat not in resolved:
                resolved.append(pat)
    return resolved


def table_to_dataset(
    table: RawTable, time_col: str, event_col: str, feature_cols: Sequence[str]
):
    """Strictly numeric conversion to (sample_ids, Dataset)."""
    key_idx = table.col_index(table.key_column)
    t_idx = table.col_index(time_col)
    e_idx = table.col_index(event_col)
    f_idx = [table.col_index(c) for c in feature_cols]
    ids, times, events = [], [], []
    x = np.empty((table.n, len(f_idx)))
    for r, row in enumerate(table.rows):
        ids.append(_cell_category(row[key_idx]))
        time = _maybe_float(row[t_idx])
        event = _maybe_float(row[e_idx])
        if time is None or event not in (0.0, 1.0):
            raise DataError(f"bad label at data row {r + 1}")
        times.append(time)
        events.append(bool(event))
        for j, idx in enumerate(f_idx):
            v = _maybe_float(row[idx])
            if v is None:
                raise DataError(
                    f"non-numeric cell in feature {feature_cols[j]!r} at data row {r + 1}"
                )
            x[r, j] = v
    dataset = Dataset.from_arrays(times, events, x, tuple(feature_cols))
    return ids, dataset


def write_dataset_tsv(path, ids: Sequence[str], dataset: Dataset) -> None:
    """Canonical dataset file: sample_id, time, event, then feature columns."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\t".join(["sample_id", "time", "event", *dataset.feature_names]) + "\n")
        x = dataset.covariate_matrix
        for i, sid in enumerate(ids):
            cells = [
                sid,
                repr(float(dataset.times[i])),
                str(int(dataset.events[i])),
                *(repr(float(v)) for v in x[i]),
            ]
            fh.write("\t".join(cells) + "\n")


def read_dataset_tsv(path):
    """Read a canonical dataset file back into (sample_ids, Dataset)."""
    table = load_table(path, format="tsv", key_column="sample_id")
    expected = ["sample_id", "time", "event"]
    if table.column_names[:3] != expected:
        raise DataError(f"{path}: expected leading columns {expected}")
    features = table.column_names[3:]
    return table_to_dataset(table, "time", "event", features)


@dataclass
class PipelineResult:
    sample_ids: list
    table: RawTable  # canonical: key + labels + numeric feature columns
    dataset: Dataset
    train: Dataset
    test: Dataset
    audit: dict


def run_pipeline(
    survival: RawTable,
    clinical: RawTable,
    spec: PreprocessSpec,
    features: Sequence[str],
    compat_impute_full: bool = False,
) -> PipelineResult:
    """Run the fixed-order preprocessing pipeline and assemble the audit report.

    By default, imputation medians are fit on the rows that will land in the
    training partition (the outlier fences and the stratified membership
    depend only on the label columns, which are complete once missing labels
    are dropped, so that membership is known before imputation). With
    ``compat_impute_full`` the medians are fit on every row instead,
    mimicking an impute-before-split protocol.
    """
    stages = []

    merged = merge_on_key(survival, clinical)
    stages.append(
        {
            "stage": "merge_on_key",
            "rows_in": [survival.n, clinical.n],
            "rows_out": merged.n,
            "columns_out": len(merged.column_names),
        }
    )

    t1 = drop_empty_columns(merged)
    stages.append(
        {
            "stage": "drop_empty_columns",
            "rows_in": merged.n,
            "rows_out": t1.n,
            "columns_in": len(merged.column_names),
            "columns_out": len(t1.column_names),
            "dropped_columns": sorted(set(merged.column_names) - set(t1.column_names)),
        }
    )

    t2 = drop_missing_labels(t1, spec.time_column, spec.event_column)
    stages.append(
        {
            "stage": "drop_missing_labels",
            "rows_in": t1.n,
            "rows_out": t2.n,
            "columns_in": len(t1.column_names),
            "columns_out": len(t2.column_names),
        }
    )
    if t2.n == 0:
        raise DataError("no rows left after dropping missing labels")

    outlier_values = [_maybe_float(c) for c in t2.column(spec.outlier_column)]
    if any(v is None for v in outlier_values):
        raise DataError(
            f"outlier column {spec.outlier_column!r} has missing cells before "
            "imputation; use the time column or enable compat_impute_full"
        )
    q1, q3, lo, hi = iqr_fences(outlier_values, spec.iqr_multiplier)
    survivor_rows = [i for i, v in enumerate(outlier_values) if lo <= v <= hi]
    event_cells = t2.column(spec.event_column)
    survivor_events = np.array(
        [_maybe_float(event_cells[i]) == 1.0 for i in survivor_rows]
    )
    train_pos, _ = _stratified_indices(survivor_events, spec.split_ratio, spec.seed)

    if compat_impute_full:
        fit_rows = None
    else:
        fit_rows = [survivor_rows[i] for i in train_pos]
    impute_model = fit_impute(t2, spec.numeric_features, fit_rows)
    t3 = apply_impute(t2, impute_model)
    stages.append(
        {
            "stage": "impute",
            "rows_in": t2.n,
            "rows_out": t3.n,
            "fitted_on": "all_rows" if compat_impute_full else "training_rows",
            "fit_row_count": t2.n if compat_impute_full else len(fit_rows),
            "medians": impute_model.medians,
        }
    )

    onehot_detail = {}
    for col, ref in spec.one_hot:
        cats = observed_categories(t3, col)
        missing = sum(1 for c in t3.column(col) if c is None)
        onehot_detail[col] = {
            "reference": ref,
            "categories": [c for c in cats if c != ref],
            "missing_cells_as_reference": missing,
        }
    t4 = encode_categoricals(t3, spec)
    stages.append(
        {
            "stage": "encode_categoricals",
            "rows_in": t3.n,
            "rows_out": t4.n,
            "columns_in": len(t3.column_names),
            "columns_out": len(t4.column_names),
            "label_encode": {c: m for c, m in spec.label_encode},
            "one_hot": onehot_detail,
        }
    )

    t5 = remove_outliers_iqr(t4, spec.outlier_column, spec.iqr_multiplier)
    stages.append(
        {
            "stage": "iqr_outlier_removal",
            "rows_in": t4.n,
            "rows_out": t5.n,
            "column": spec.outlier_column,
            "multiplier": spec.iqr_multiplier,
            "q1": q1,
            "q3": q3,
            "lower_fence": lo,
            "upper_fence": hi,
            "quartile_method": "linear interpolation of order statistics",
        }
    )

    resolved = resolve_features(features, t5.column_names)
    ids, dataset = table_to_dataset(t5, spec.time_column, spec.event_column, resolved)
    train, test = stratified_split(dataset, spec.split_ratio, spec.seed)
    stages.append(
        {
            "stage": "stratified_split",
            "rows_in": t5.n,
            "ratio": spec.split_ratio,
            "seed": spec.seed,
            "train_rows": train.n,
            "test_rows": test.n,
            "train_events": int(train.events.sum()),
            "test_events": int(test.events.sum()),
        }
    )

    audit = {
        "stages": stages,
        "features": resolved,
        "feature_patterns": list(features),
        "time_column": spec.time_column,
        "event_column": spec.event_column,
        "compat_impute_full": compat_impute_full,
    }
    return PipelineResult(
        sample_ids=ids, table=t5, dataset=dataset, train=train, test=test, audit=audit
    )
