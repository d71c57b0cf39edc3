"""Command-line driver chaining ingest, models, and metrics into one experiment.

Verbs: preprocess, km, fit-cox, fit-rsf, evaluate, report. Configuration is
a single JSON file plus flag overrides; every effective setting is echoed
into the audit trail so a run is self-describing. All tabular outputs are
CSV with headers, reports are JSON, and a fixed seed makes every emitted
file byte-identical across reruns.

Exit codes: 0 success, 2 usage, 3 data error, 4 numeric failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import ingest
from .cox import (
    CoxFitOptions,
    cox_fit,
    cox_summary,
    load_cox_model,
    save_cox_model,
)
from .errors import DataError, NumericError, UsageError
from .km import KmOptions, km_fit, km_stratified, write_curves_csv
from .metrics import (
    EvaluationReport,
    ModelEvaluation,
    concordance_index,
    roc_at_horizon,
)
from .rsf import RsfOptions, load_forest, rsf_fit, rsf_oob_cindex, rsf_risk_scores, save_forest
from .svg import write_curves_svg

DATASET_FILE = "dataset.tsv"
AUDIT_FILE = "audit.json"
COX_MODEL_FILE = "cox_model.json"
COX_SUMMARY_FILE = "cox_summary.csv"
RSF_MODEL_FILE = "rsf_model.json"
RSF_SUMMARY_FILE = "rsf_summary.json"
EVALUATION_FILE = "evaluation.json"
COMPARISON_FILE = "comparison.csv"
REPORT_FILE = "report.json"

DEFAULT_CONFIG = {
    "survival_path": "survival.txt",
    "clinical_path": "clinicalMatrix.tsv",
    "survival_key": "sample",
    "clinical_key": "sampleID",
    "out_dir": "out",
    "seed": 17,
    "horizon": 1000.0,
    "missing_tokens": list(ingest.DEFAULT_MISSING_TOKENS),
    "time_column": "OS.time",
    "event_column": "OS",
    "numeric_features": ["PFI.time", "days_to_new_tumor_event", "age_at_diagnosis"],
    "label_encode": {"gender": {"FEMALE": 0, "MALE": 1}},
    "one_hot": {"residual_tumor": "R0"},
    "outlier_column": "OS.time",
    "iqr_multiplier": 1.5,
    "split_ratio": 0.8,
    "features": [
        "PFI.time",
        "days_to_new_tumor_event",
        "age_at_diagnosis",
        "gender_encoded",
        "residual_tumor_*",
    ],
    "exclude": [],
    "compat_impute_full": False,
    "km": {
        "confidence_level": 0.95,
        "ci_method": "log-log",
        "gender_column": "gender_encoded",
        "age_column": "age_at_diagnosis",
        "age_edges": [0, 60, 100],
        "eval_times": [],
    },
    "cox": {
        "tie_method": "efron",
        "tolerance": 1e-9,
        "max_iterations": 100,
        "step_halving_max": 10,
    },
    "rsf": {
        "n_trees": 500,
        "mtry": None,
        "min_samples_split": 10,
        "min_samples_leaf": 5,
        "min_events_leaf": 1,
        "max_depth": None,
        "n_jobs": 1,
    },
}


# data mappings are replaced wholesale; option namespaces merge key-by-key
_WHOLESALE_KEYS = ("label_encode", "one_hot")


def _merge(base: dict, override: dict) -> dict:
    merged = dict(base)
    for key, value in override.items():
        if key not in base:
            raise UsageError(f"unknown config key {key!r}")
        if isinstance(base[key], dict) and key not in _WHOLESALE_KEYS:
            if not isinstance(value, dict):
                raise UsageError(f"config key {key!r} must be an object")
            unknown = sorted(set(value) - set(base[key]))
            if unknown:
                raise UsageError(
                    f"unknown config key(s) under {key!r}: {', '.join(unknown)}"
                )
            merged[key] = {**base[key], **value}
        else:
            merged[key] = value
    return merged


class RunConfig:
    """Merged configuration with typed option builders."""

    def __init__(self, raw: dict):
        self.raw = raw

    def __getattr__(self, name):
        try:
            return self.raw[name]
        except KeyError:
            raise AttributeError(name) from None

    @property
    def preprocess_spec(self) -> ingest.PreprocessSpec:
        return ingest.PreprocessSpec(
            time_column=self.raw["time_column"],
            event_column=self.raw["event_column"],
            numeric_features=tuple(self.raw["numeric_features"]),
            label_encode=tuple(
                (col, mapping) for col, mapping in self.raw["label_encode"].items()
            ),
            one_hot=tuple((col, ref) for col, ref in self.raw["one_hot"].items()),
            outlier_column=self.raw["outlier_column"],
            iqr_multiplier=self.raw["iqr_multiplier"],
            split_ratio=self.raw["split_ratio"],
            seed=self.raw["seed"],
        )

    @property
    def km_options(self) -> KmOptions:
        return KmOptions(
            confidence_level=self.raw["km"]["confidence_level"],
            ci_method=self.raw["km"]["ci_method"],
        )

    @property
    def cox_options(self) -> CoxFitOptions:
        return CoxFitOptions(**self.raw["cox"])

    @property
    def rsf_options(self) -> RsfOptions:
        return RsfOptions(seed=self.raw["seed"], **self.raw["rsf"])

    @property
    def out_path(self) -> Path:
        return Path(self.raw["out_dir"])


def load_config(args) -> RunConfig:
    raw = dict(DEFAULT_CONFIG)
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                user = json.load(fh)
        except OSError as exc:
            raise UsageError(f"cannot read config: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise UsageError(f"config is not valid JSON: {exc}") from exc
        if not isinstance(user, dict):
            raise UsageError("config must be a JSON object")
        raw = _merge(raw, user)
    if args.seed is not None:
        raw["seed"] = args.seed
    if args.horizon is not None:
        raw["horizon"] = args.horizon
    if args.out is not None:
        raw["out_dir"] = args.out
    if args.features is not None:
        raw["features"] = [f.strip() for f in args.features.split(",") if f.strip()]
    if args.exclude is not None:
        raw["exclude"] = [f.strip() for f in args.exclude.split(",") if f.strip()]
    if getattr(args, "compat_impute_full", False):
        raw["compat_impute_full"] = True
    return RunConfig(raw)


def _write_json(path: Path, payload: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _read_dataset(cfg: RunConfig):
    path = cfg.out_path / DATASET_FILE
    if not path.exists():
        raise DataError(f"canonical dataset {path} not found; run `preprocess` first")
    return ingest.read_dataset_tsv(path)


def _split(cfg: RunConfig, dataset):
    return ingest.stratified_split(dataset, cfg.raw["split_ratio"], cfg.raw["seed"])


def _selected_features(cfg: RunConfig, available) -> list[str]:
    resolved = ingest.resolve_features(cfg.raw["features"], available)
    exclude = set(cfg.raw["exclude"])
    selected = [f for f in resolved if f not in exclude]
    if not selected:
        raise DataError("feature selection/exclusion removed every feature")
    return selected


def cmd_preprocess(cfg: RunConfig, args) -> int:
    survival = ingest.load_table(
        cfg.raw["survival_path"],
        key_column=cfg.raw["survival_key"],
        missing_tokens=cfg.raw["missing_tokens"],
    )
    clinical = ingest.load_table(
        cfg.raw["clinical_path"],
        key_column=cfg.raw["clinical_key"],
        missing_tokens=cfg.raw["missing_tokens"],
    )
    result = ingest.run_pipeline(
        survival,
        clinical,
        cfg.preprocess_spec,
        cfg.raw["features"],
        compat_impute_full=cfg.raw["compat_impute_full"],
    )
    out = cfg.out_path
    out.mkdir(parents=True, exist_ok=True)
    ingest.write_dataset_tsv(out / DATASET_FILE, result.sample_ids, result.dataset)
    _write_json(out / AUDIT_FILE, {"config": cfg.raw, **result.audit})
    for stage in result.audit["stages"]:
        rows_in = stage["rows_in"]
        rows_out = stage.get("rows_out", stage.get("train_rows"))
        print(f"{stage['stage']}: rows {rows_in} -> {rows_out}")
    print(
        f"dataset: {result.dataset.n} samples, {result.dataset.p} features -> "
        f"{out / DATASET_FILE}"
    )
    print(
        f"split: train {result.train.n} ({int(result.train.events.sum())} events), "
        f"test {result.test.n} ({int(result.test.events.sum())} events)"
    )
    return 0


def _column_values(dataset, column: str) -> np.ndarray:
    if column not in dataset.feature_names:
        raise DataError(f"unknown stratification column {column!r}")
    return dataset.covariate_matrix[:, dataset.feature_names.index(column)]


def cmd_km(cfg: RunConfig, args) -> int:
    _, dataset = _read_dataset(cfg)
    options = cfg.km_options
    out = cfg.out_path
    out.mkdir(parents=True, exist_ok=True)
    km_cfg = cfg.raw["km"]

    curve_sets = {"km_overall": {"all": km_fit(dataset.times, dataset.events, options)}}

    gender_col = km_cfg["gender_column"]
    inverse = {
        float(code): name
        for col, mapping in cfg.raw["label_encode"].items()
        for name, code in mapping.items()
        if f"{col}_encoded" == gender_col
    }
    values = _column_values(dataset, gender_col)
    labels = [inverse.get(v, f"{gender_col}={v:g}") for v in values]
    curve_sets["km_by_gender"] = km_stratified(dataset, labels, options)

    ages = _column_values(dataset, km_cfg["age_column"])
    age_labels = ingest.bin_age_groups(ages, km_cfg["age_edges"])
    curve_sets["km_by_age_group"] = km_stratified(dataset, age_labels, options)

    counts = {}
    for name, curves in curve_sets.items():
        write_curves_csv(out / f"{name}.csv", curves, eval_times=km_cfg["eval_times"])
        if args.svg:
            write_curves_svg(out / f"{name}.svg", curves, title=name)
        if name == "km_by_gender":
            counts["gender"] = {str(g): labels.count(g) for g in curves}
        elif name == "km_by_age_group":
            counts["age_group"] = {str(g): age_labels.count(g) for g in curves}
    counts["overall"] = {"all": dataset.n}
    _write_json(out / "km_group_counts.json", counts)
    for strat, group in counts.items():
        for label, n in group.items():
            print(f"{strat}: {label}: {n}")
    return 0


def cmd_fit_cox(cfg: RunConfig, args) -> int:
    _, dataset = _read_dataset(cfg)
    train, _ = _split(cfg, dataset)
    train = train.select_features(_selected_features(cfg, train.feature_names))
    model = cox_fit(train, cfg.cox_options)
    out = cfg.out_path
    out.mkdir(parents=True, exist_ok=True)
    save_cox_model(model, out / COX_MODEL_FILE)
    rows = cox_summary(model)
    with open(out / COX_SUMMARY_FILE, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            [
                "feature",
                "coef",
                "exp(coef)",
                "se(coef)",
                "ci_low_coef",
                "ci_high_coef",
                "ci_low_hr",
                "ci_high_hr",
                "z",
                "p",
            ]
        )
        for row in rows:
            writer.writerow(
                [
                    row.feature,
                    repr(row.coef),
                    repr(row.hazard_ratio),
                    repr(row.se),
                    repr(row.ci_low_coef),
                    repr(row.ci_high_coef),
                    repr(row.ci_low_hr),
                    repr(row.ci_high_hr),
                    repr(row.z),
                    repr(row.p_value),
                ]
            )
    print(f"fit on {train.n} training samples; converged in {model.iterations} iterations")
    print(f"{'feature':<28} {'coef':>8} {'HR':>6} {'se':>7} {'z':>7} {'p':>7}")
    for row in rows:
        p = "<0.005" if row.p_value < 0.005 else f"{row.p_value:.2f}"
        print(
            f"{row.feature:<28} {row.coef:>8.2f} {row.hazard_ratio:>6.2f} "
            f"{row.se:>7.2f} {row.z:>7.2f} {p:>7}"
        )
    return 0


def cmd_fit_rsf(cfg: RunConfig, args) -> int:
    _, dataset = _read_dataset(cfg)
    train, _ = _split(cfg, dataset)
    train = train.select_features(_selected_features(cfg, train.feature_names))
    options = cfg.rsf_options
    forest = rsf_fit(train, options)
    out = cfg.out_path
    out.mkdir(parents=True, exist_ok=True)
    save_forest(forest, out / RSF_MODEL_FILE)
    oob = rsf_oob_cindex(forest, train)
    _write_json(
        out / RSF_SUMMARY_FILE,
        {
            "options": options.to_dict(),
            "features": list(train.feature_names),
            "n_train": train.n,
            "oob_c_index": oob,
        },
    )
    print(f"fit {options.n_trees} trees on {train.n} training samples")
    print(f"out-of-bag C-index: {oob:.3f}")
    return 0


def _write_roc_csv(path: Path, roc) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["threshold", "fpr", "tpr"])
        for thr, f, t in zip(roc.thresholds, roc.fpr, roc.tpr):
            writer.writerow([repr(float(thr)), repr(float(f)), repr(float(t))])


def cmd_evaluate(cfg: RunConfig, args) -> int:
    _, dataset = _read_dataset(cfg)
    _, test = _split(cfg, dataset)
    out = cfg.out_path
    horizon = float(cfg.raw["horizon"])

    evaluations = []
    for name, model_file in (("cox", COX_MODEL_FILE), ("rsf", RSF_MODEL_FILE)):
        path = out / model_file
        if not path.exists():
            raise DataError(f"missing model artifact {path}; run `fit-{name}` first")
        if name == "cox":
            model = load_cox_model(path)
            x = test.select_features(model.feature_names).covariate_matrix
            risks = x @ model.beta
        else:
            forest = load_forest(path)
            x = test.select_features(forest.feature_names).covariate_matrix
            risks = rsf_risk_scores(forest, x)
        evaluations.append(
            ModelEvaluation(
                model=name,
                concordance=concordance_index(test.times, test.events, risks),
                roc=roc_at_horizon(test.times, test.events, risks, horizon),
            )
        )
        _write_roc_csv(out / f"roc_{name}.csv", evaluations[-1].roc)

    report = EvaluationReport(horizon=horizon, n_test=test.n, models=tuple(evaluations))
    _write_json(out / EVALUATION_FILE, {"seed": cfg.raw["seed"], **report.to_dict()})
    with open(out / COMPARISON_FILE, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            [
                "model",
                "c_index",
                "auc_at_horizon",
                "concordant",
                "discordant",
                "tied_risk",
                "usable_pairs",
                "n_positive",
                "n_negative",
                "n_excluded",
            ]
        )
        for ev in evaluations:
            writer.writerow(
                [
                    ev.model,
                    repr(ev.concordance.c_index),
                    repr(ev.roc.auc),
                    ev.concordance.concordant,
                    ev.concordance.discordant,
                    ev.concordance.tied_risk,
                    ev.concordance.usable_pairs,
                    ev.roc.n_positive,
                    ev.roc.n_negative,
                    ev.roc.n_excluded,
                ]
            )
    print(f"horizon: {horizon:g} days, test samples: {test.n}")
    print(f"{'model':<6} {'C-index':>8} {'AUC':>8}")
    for ev in evaluations:
        print(f"{ev.model:<6} {ev.concordance.c_index:>8.3f} {ev.roc.auc:>8.3f}")
    return 0


def cmd_report(cfg: RunConfig, args) -> int:
    out = cfg.out_path
    eval_path = out / EVALUATION_FILE
    if not eval_path.exists():
        raise DataError(f"missing {eval_path}; run `evaluate` first")
    with open(eval_path, encoding="utf-8") as fh:
        evaluation = json.load(fh)
    combined = {"evaluation": evaluation}
    for key, filename in (("audit", AUDIT_FILE), ("rsf_summary", RSF_SUMMARY_FILE)):
        path = out / filename
        if path.exists():
            with open(path, encoding="utf-8") as fh:
                combined[key] = json.load(fh)
    summary_path = out / COX_SUMMARY_FILE
    if summary_path.exists():
        with open(summary_path, newline="", encoding="utf-8") as fh:
            combined["cox_summary"] = list(csv.DictReader(fh))
    _write_json(out / REPORT_FILE, combined)
    print(f"combined report -> {out / REPORT_FILE}")
    print(f"{'model':<6} {'C-index':>8} {'AUC':>8}")
    for ev in evaluation["models"]:
        print(
            f"{ev['model']:<6} {ev['concordance']['c_index']:>8.3f} "
            f"{ev['roc']['auc']:>8.3f}"
        )
    return 0


COMMANDS = {
    "preprocess": cmd_preprocess,
    "km": cmd_km,
    "fit-cox": cmd_fit_cox,
    "fit-rsf": cmd_fit_rsf,
    "evaluate": cmd_evaluate,
    "report": cmd_report,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file")
    common.add_argument("--seed", type=int, help="override the run seed")
    common.add_argument("--horizon", type=float, help="ROC evaluation horizon in days")
    common.add_argument("--out", help="output directory")
    common.add_argument("--features", help="comma-separated feature list override")
    common.add_argument("--exclude", help="comma-separated features to drop (ablation)")
    common.add_argument(
        "--compat-impute-full",
        action="store_true",
        help="fit imputation medians on the full table instead of the training rows",
    )
    parser = argparse.ArgumentParser(
        prog="survkit",
        description="Censoring-aware survival analysis: preprocessing, "
        "Kaplan-Meier, Cox PH, random survival forests, and evaluation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("preprocess", parents=[common], help="build the canonical dataset")
    km_parser = sub.add_parser("km", parents=[common], help="export survival curves")
    km_parser.add_argument("--svg", action="store_true", help="also write SVG step plots")
    sub.add_parser("fit-cox", parents=[common], help="fit the proportional hazards model")
    sub.add_parser("fit-rsf", parents=[common], help="fit the random survival forest")
    sub.add_parser("evaluate", parents=[common], help="score fitted models on the test split")
    sub.add_parser("report", parents=[common], help="combine artifacts into one report")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args)
        return COMMANDS[args.command](cfg, args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (DataError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
