"""Table loading, cleaning, encoding, outlier trimming, and splitting."""

import json

import numpy as np
import pytest

from survkit import (
    DataError,
    PreprocessSpec,
    apply_impute,
    bin_age_groups,
    drop_empty_columns,
    drop_missing_labels,
    encode_categoricals,
    fit_impute,
    load_table,
    merge_on_key,
    remove_outliers_iqr,
    run_pipeline,
    stratified_split,
)
from survkit.ingest import (
    RawTable,
    iqr_fences,
    read_dataset_tsv,
    resolve_features,
    table_to_dataset,
    write_dataset_tsv,
)

from conftest import make_dataset


def table(cols, rows, key=None):
    return RawTable(list(cols), [list(r) for r in rows], key or cols[0])


# --- load_table ---


def test_load_tsv(tmp_path):
    path = tmp_path / "t.tsv"
    path.write_text("sample\tOS.time\tOS\ns1\t100\t1\ns2\t200\t0\n")
    t = load_table(path)
    assert t.n == 2
    assert t.column_names == ["sample", "OS.time", "OS"]
    assert t.rows[0] == ["s1", "100", "1"]


def test_load_tsv_sentinels_become_missing(tmp_path):
    path = tmp_path / "t.tsv"
    path.write_text("sample\tOS.time\tnote\ns1\t\tNA\ns2\t5\t[Not Available]\n")
    t = load_table(path)
    assert t.rows[0][1] is None and t.rows[0][2] is None
    assert t.rows[1][2] is None


def test_load_tsv_wrong_cell_count_names_line(tmp_path):
    path = tmp_path / "t.tsv"
    path.write_text("a\tb\tc\n1\t2\t3\n4\t5\n")
    with pytest.raises(DataError, match="line 3"):
        load_table(path)


def test_load_tsv_duplicate_header(tmp_path):
    path = tmp_path / "t.tsv"
    path.write_text("a\tb\ta\n1\t2\t3\n")
    with pytest.raises(DataError, match="duplicate"):
        load_table(path)


def test_load_json_records(tmp_path):
    path = tmp_path / "t.json"
    path.write_text(json.dumps([{"id": "s1", "v": 3}, {"id": "s2", "w": "NA"}]))
    t = load_table(path)
    assert t.column_names == ["id", "v", "w"]
    assert t.rows[0] == ["s1", 3.0, None]
    assert t.rows[1] == ["s2", None, None]


def test_load_missing_file():
    with pytest.raises(OSError):
        load_table("/nonexistent/file.tsv")


# --- merge_on_key ---


def test_merge_inner_join():
    a = table(["sample", "x"], [["s1", "1"], ["s2", "2"]])
    b = table(["sample", "y"], [["s2", "9"], ["s3", "8"]])
    m = merge_on_key(a, b)
    assert m.n == 1
    assert m.rows[0] == ["s2", "2", "9"]
    assert m.column_names == ["sample", "x", "y"]


def test_merge_identical_keys_unions_columns():
    rows = [[f"s{i}", str(i)] for i in range(4)]
    a = table(["k", "x"], rows)
    b = table(["k", "y"], [[f"s{i}", str(10 * i)] for i in range(4)])
    m = merge_on_key(a, b)
    assert m.n == 4
    assert m.column_names == ["k", "x", "y"]


def test_merge_duplicate_keys_rejected():
    a = table(["k", "x"], [["s1", "1"], ["s1", "2"]])
    b = table(["k", "y"], [["s1", "3"]])
    with pytest.raises(DataError, match="s1"):
        merge_on_key(a, b)


# --- label/column drops ---


def test_drop_missing_labels_counts():
    t = table(
        ["k", "OS.time", "OS"],
        [["a", "1", "1"], ["b", None, "0"], ["c", "3", "1"], ["d", None, "1"], ["e", "9", "0"]],
    )
    out = drop_missing_labels(t, "OS.time", "OS")
    assert out.n == 3


def test_drop_missing_labels_invalid_event_dropped_with_warning():
    t = table(["k", "t", "e"], [["a", "1", "2"], ["b", "2", "1"]])
    with pytest.warns(RuntimeWarning, match="unparseable"):
        out = drop_missing_labels(t, "t", "e")
    assert out.n == 1


def test_drop_missing_labels_identity_when_clean():
    t = table(["k", "t", "e"], [["a", "1", "1"], ["b", "2.5", "0"]])
    out = drop_missing_labels(t, "t", "e")
    assert out.rows == t.rows


def test_drop_missing_labels_missing_column():
    t = table(["k"], [["a"]])
    with pytest.raises(DataError):
        drop_missing_labels(t, "t", "e")


def test_drop_empty_columns():
    t = table(["k", "full", "empty"], [["a", "1", None], ["b", None, None]])
    out = drop_empty_columns(t)
    assert out.column_names == ["k", "full"]


def test_drop_empty_columns_identity():
    t = table(["k", "x"], [["a", "1"]])
    assert drop_empty_columns(t).column_names == ["k", "x"]


def test_drop_empty_columns_keeps_key():
    t = table(["k", "x"], [[None, None], [None, None]])
    out = drop_empty_columns(t)
    assert out.column_names == ["k"]


# --- imputation ---


def test_fit_impute_odd_and_even():
    t = table(["k", "a", "b"], [["r", "1", "1"], ["r2", "2", "2"], ["r3", None, "3"], ["r4", "10", "4"]])
    model = fit_impute(t, ["a", "b"])
    assert model.medians["a"] == 2.0  # median of {1, 2, 10}
    assert model.medians["b"] == 2.5  # even count averages middle two


def test_fit_impute_all_missing_column():
    t = table(["k", "a"], [["r", None], ["r2", None]])
    with pytest.raises(DataError, match="'a'"):
        fit_impute(t, ["a"])


def test_fit_impute_respects_fit_rows():
    t = table(["k", "a"], [["r", "1"], ["r2", "100"], ["r3", "3"]])
    model = fit_impute(t, ["a"], fit_rows=[0, 2])
    assert model.medians["a"] == 2.0


def test_apply_impute_fills_and_preserves():
    t = table(["k", "a"], [["r", "1"], ["r2", None], ["r3", "3"], ["r4", None]])
    model = fit_impute(t, ["a"])
    out = apply_impute(t, model)
    assert [r[1] for r in out.rows] == [1.0, 2.0, 3.0, 2.0]
    again = apply_impute(out, model)
    assert again.rows == out.rows  # idempotent on its own output


# --- encoding ---


def _encode_spec(**kwargs):
    defaults = dict(
        time_column="t",
        event_column="e",
        label_encode=(("gender", {"FEMALE": 0, "MALE": 1}),),
        one_hot=(("residual_tumor", "R0"),),
    )
    defaults.update(kwargs)
    return PreprocessSpec(**defaults)


def test_label_encoding_mapping():
    t = table(["k", "gender"], [["a", "MALE"], ["b", "FEMALE"]])
    out = encode_categoricals(t, _encode_spec(one_hot=()))
    assert out.column_names == ["k", "gender_encoded"]
    assert [r[1] for r in out.rows] == [1.0, 0.0]


def test_one_hot_reference_gets_no_column():
    t = table(
        ["k", "residual_tumor"],
        [["a", "R0"], ["b", "R1"], ["c", "R2"], ["d", "RX"]],
    )
    out = encode_categoricals(t, _encode_spec(label_encode=()))
    assert out.column_names == [
        "k",
        "residual_tumor_R1",
        "residual_tumor_R2",
        "residual_tumor_RX",
    ]
    assert out.rows[0][1:] == [0.0, 0.0, 0.0]  # reference row
    assert out.rows[1][1:] == [1.0, 0.0, 0.0]


def test_one_hot_all_reference_rows():
    t = table(["k", "residual_tumor"], [["a", "R0"], ["b", "R0"]])
    out = encode_categoricals(t, _encode_spec(label_encode=()))
    assert out.column_names == ["k"]  # no non-reference category observed


def test_unmapped_category_names_value_and_row():
    t = table(["k", "gender"], [["a", "MALE"], ["b", "OTHER"]])
    with pytest.raises(DataError, match="OTHER.*row 2"):
        encode_categoricals(t, _encode_spec(one_hot=()))


# --- IQR outlier removal ---


def test_iqr_hand_example():
    values = list(range(1, 10)) + [100]
    q1, q3, lo, hi = iqr_fences(values, 1.5)
    assert (q1, q3) == (3.25, 7.75)
    assert (lo, hi) == (-3.5, 14.5)
    t = table(["k", "v"], [[f"s{i}", str(v)] for i, v in enumerate(values)])
    out = remove_outliers_iqr(t, "v", 1.5)
    assert out.n == 9


def test_iqr_degenerate_identical_values():
    t = table(["k", "v"], [[f"s{i}", "7"] for i in range(5)])
    assert remove_outliers_iqr(t, "v", 1.5).n == 5


def test_iqr_identity_when_inside():
    t = table(["k", "v"], [["a", "1"], ["b", "2"], ["c", "3"]])
    assert remove_outliers_iqr(t, "v", 1.5).n == 3


def test_iqr_rejects_missing_cells():
    t = table(["k", "v"], [["a", "1"], ["b", None]])
    with pytest.raises(DataError):
        remove_outliers_iqr(t, "v", 1.5)


# --- stratified split ---


def test_split_sizes_and_event_balance():
    rng = np.random.default_rng(0)
    events = np.zeros(100, dtype=bool)
    events[:36] = True
    d = make_dataset(rng.exponential(10, 100), events, rng.normal(size=(100, 2)))
    train, test = stratified_split(d, 0.8, seed=7)
    assert (train.n, test.n) == (80, 20)
    assert int(train.events.sum()) == 29
    assert int(test.events.sum()) == 7


def test_split_half_on_ten():
    d = make_dataset(
        np.arange(1.0, 11.0), [1, 1, 1, 1, 1, 0, 0, 0, 0, 0], np.ones((10, 1))
    )
    train, test = stratified_split(d, 0.5, seed=1)
    assert train.n == 5 and test.n == 5
    assert abs(int(train.events.sum()) - int(test.events.sum())) <= 1


def test_split_deterministic_and_disjoint():
    rng = np.random.default_rng(1)
    d = make_dataset(rng.exponential(5, 40), rng.random(40) < 0.4, rng.normal(size=(40, 1)))
    t1, s1 = stratified_split(d, 0.8, seed=3)
    t2, s2 = stratified_split(d, 0.8, seed=3)
    assert [x.time for x in t1.samples] == [x.time for x in t2.samples]
    assert t1.n + s1.n == d.n
    times = sorted([x.time for x in t1.samples] + [x.time for x in s1.samples])
    assert times == sorted(d.times.tolist())


def test_split_rejects_tiny_stratum():
    d = make_dataset([1, 2, 3], [1, 0, 0], np.ones((3, 1)))
    with pytest.raises(DataError):
        stratified_split(d, 0.8, seed=0)


def test_split_event_rate_difference_bound():
    rng = np.random.default_rng(6)
    for _ in range(10):
        n = int(rng.integers(20, 120))
        n_events = int(rng.integers(3, n - 3))
        events = np.zeros(n, dtype=bool)
        events[:n_events] = True
        d = make_dataset(rng.exponential(10, n), events, rng.normal(size=(n, 1)))
        ratio = float(rng.uniform(0.3, 0.9))
        train, test = stratified_split(d, ratio, seed=int(rng.integers(0, 99)))
        # per-stratum rounding keeps each partition's event rate within
        # 1/partition-size of the pooled rate
        pooled = d.events.mean()
        assert abs(train.events.mean() - pooled) <= 1.0 / train.n + 1e-12
        assert abs(test.events.mean() - pooled) <= 1.0 / test.n + 1e-12


# --- age bins ---


def test_age_bin_boundaries():
    assert bin_age_groups([60.0], [0, 60, 100]) == ["0-60"]
    assert bin_age_groups([61.0], [0, 60, 100]) == ["61-100"]
    assert bin_age_groups([0.0], [0, 60, 100]) == ["0-60"]


def test_age_fine_bins():
    labels = bin_age_groups([20, 21, 40, 41, 60, 61, 80, 81, 100], [0, 20, 40, 60, 80, 100])
    assert labels == [
        "0-20",
        "21-40",
        "21-40",
        "41-60",
        "41-60",
        "61-80",
        "61-80",
        "81-100",
        "81-100",
    ]


def test_age_out_of_range():
    with pytest.raises(DataError):
        bin_age_groups([101.0], [0, 60, 100])


# --- feature resolution, dataset round trip ---


def test_resolve_features_glob():
    cols = ["a", "residual_tumor_R1", "residual_tumor_RX", "residual_tumor_R2"]
    out = resolve_features(["a", "residual_tumor_*"], cols)
    assert out == ["a", "residual_tumor_R1", "residual_tumor_R2", "residual_tumor_RX"]
    with pytest.raises(DataError):
        resolve_features(["nope_*"], cols)
    with pytest.raises(DataError):
        resolve_features(["missing"], cols)


def test_dataset_tsv_roundtrip(tmp_path):
    t = table(
        ["k", "t", "e", "f1"],
        [["a", "1.5", "1", "0.25"], ["b", "2", "0", "1.75"]],
    )
    ids, d = table_to_dataset(t, "t", "e", ["f1"])
    path = tmp_path / "dataset.tsv"
    write_dataset_tsv(path, ids, d)
    ids2, d2 = read_dataset_tsv(path)
    assert ids2 == ids
    np.testing.assert_array_equal(d2.times, d.times)
    np.testing.assert_array_equal(d2.events, d.events)
    np.testing.assert_array_equal(d2.covariate_matrix, d.covariate_matrix)


def test_table_to_dataset_rejects_non_numeric_feature():
    t = table(["k", "t", "e", "f1"], [["a", "1", "1", "oops"]])
    with pytest.raises(DataError, match="f1"):
        table_to_dataset(t, "t", "e", ["f1"])


# --- full pipeline ---


def _pipeline_inputs(tmp_path):
    from conftest import write_fixture_tables

    survival_path, clinical_path = write_fixture_tables(tmp_path)
    survival = load_table(survival_path, key_column="sample")
    clinical = load_table(clinical_path, key_column="sampleID")
    spec = PreprocessSpec(
        time_column="OS.time",
        event_column="OS",
        numeric_features=("PFI.time", "days_to_new_tumor_event", "age_at_diagnosis"),
        label_encode=(("gender", {"FEMALE": 0, "MALE": 1}),),
        one_hot=(("residual_tumor", "R0"),),
        outlier_column="OS.time",
        seed=17,
    )
    features = [
        "PFI.time",
        "days_to_new_tumor_event",
        "age_at_diagnosis",
        "gender_encoded",
        "residual_tumor_*",
    ]
    return survival, clinical, spec, features


def test_pipeline_no_missing_cells_and_consistent_audit(tmp_path):
    survival, clinical, spec, features = _pipeline_inputs(tmp_path)
    with pytest.warns(RuntimeWarning):
        result = run_pipeline(survival, clinical, spec, features)
    assert result.dataset.n == result.train.n + result.test.n
    assert np.isfinite(result.dataset.covariate_matrix).all()
    stages = result.audit["stages"]
    for before, after in zip(stages[1:], stages[2:]):
        assert before["rows_out"] == after["rows_in"]
    iqr_stage = next(s for s in stages if s["stage"] == "iqr_outlier_removal")
    assert iqr_stage["rows_out"] < iqr_stage["rows_in"]  # fixture has an outlier
    times = result.dataset.times
    assert times.max() <= iqr_stage["upper_fence"]
    assert "medians" in stages[3]
    # empty column dropped, one-hot encoded categories recorded
    assert "empty_notes" in stages[1]["dropped_columns"]
    one_hot = next(s for s in stages if s["stage"] == "encode_categoricals")["one_hot"]
    assert one_hot["residual_tumor"]["categories"] == ["R1", "R2", "RX"]


def test_pipeline_split_matches_membership_used_for_imputation(tmp_path):
    survival, clinical, spec, features = _pipeline_inputs(tmp_path)
    with pytest.warns(RuntimeWarning):
        result = run_pipeline(survival, clinical, spec, features)
    split_stage = result.audit["stages"][-1]
    impute_stage = next(s for s in result.audit["stages"] if s["stage"] == "impute")
    assert impute_stage["fitted_on"] == "training_rows"
    assert impute_stage["fit_row_count"] == split_stage["train_rows"]


def test_pipeline_compat_mode_fits_on_all_rows(tmp_path):
    survival, clinical, spec, features = _pipeline_inputs(tmp_path)
    with pytest.warns(RuntimeWarning):
        result = run_pipeline(survival, clinical, spec, features, compat_impute_full=True)
    impute_stage = next(s for s in result.audit["stages"] if s["stage"] == "impute")
    assert impute_stage["fitted_on"] == "all_rows"
    # medians generally differ between the two imputation scopes
    with pytest.warns(RuntimeWarning):
        default = run_pipeline(survival, clinical, spec, features)
    default_medians = next(
        s for s in default.audit["stages"] if s["stage"] == "impute"
    )["medians"]
    assert default_medians != impute_stage["medians"]
