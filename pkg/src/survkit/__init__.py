"""survkit: censoring-aware survival analysis for clinical time-to-event data.

Library surface: clinical-table ingestion and preprocessing, Kaplan-Meier
estimation with Greenwood bands, Cox proportional hazards fitting with
inference, random survival forests, and censoring-aware evaluation
(concordance index, fixed-horizon ROC/AUC). The ``survkit`` CLI chains
them into a reproducible end-to-end run.
"""

from .core import (
    CumulativeHazard,
    Dataset,
    SurvivalCurve,
    SurvivalSample,
    chf_to_survival,
    curve_eval,
)
from .cox import (
    CoxFitOptions,
    CoxModel,
    CoxSummaryRow,
    breslow_baseline,
    cox_fit,
    cox_predict_risk,
    cox_predict_survival,
    cox_summary,
    load_cox_model,
    log_partial_likelihood,
    save_cox_model,
    score_vector,
)
from .errors import (
    ConvergenceError,
    DataError,
    NumericError,
    SingularMatrixError,
    SurvkitError,
    UsageError,
)
from .ingest import (
    ImputeModel,
    PreprocessSpec,
    RawTable,
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
from .km import KmOptions, km_fit, km_stratified
from .metrics import (
    ConcordanceResult,
    EvaluationReport,
    ModelEvaluation,
    RocResult,
    concordance_index,
    roc_at_horizon,
)
from .rsf import (
    RsfOptions,
    SurvivalForest,
    SurvivalTree,
    load_forest,
    logrank_split_statistic,
    nelson_aalen,
    rsf_fit,
    rsf_oob_cindex,
    rsf_predict_chf,
    rsf_risk_score,
    rsf_risk_scores,
    save_forest,
)

__version__ = "0.1.0"
