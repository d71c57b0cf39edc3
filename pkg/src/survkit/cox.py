"""Cox proportional hazards fitting by Newton-Raphson on the partial likelihood.

The hazard for a subject with covariates x is h0(t) * exp(beta . x). The
partial likelihood eliminates h0, leaving sums over the risk set at each
event time; ties are handled by Efron's adjustment (default) or Breslow's.
Linear predictors are centered by their maximum before exponentiating
(the partial likelihood is invariant to that shift), which guards the
log-sum-exp against overflow.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from .core import CumulativeHazard, Dataset, SurvivalCurve
from .errors import ConvergenceError, DataError, SingularMatrixError

__all__ = [
    "CoxFitOptions",
    "CoxModel",
    "CoxSummaryRow",
    "log_partial_likelihood",
    "score_vector",
    "cox_fit",
    "cox_summary",
    "breslow_baseline",
    "cox_predict_risk",
    "cox_predict_survival",
    "save_cox_model",
    "load_cox_model",
]

TIE_METHODS = ("efron", "breslow")
_GRAD_TOL = 1e-6  # infinity-norm threshold, scaled by max(1, |loglik|)


@dataclass(frozen=True)
class CoxFitOptions:
    tie_method: str = "efron"
    tolerance: float = 1e-9
    max_iterations: int = 100
    step_halving_max: int = 10

    def __post_init__(self):
        if self.tie_method not in TIE_METHODS:
            raise DataError(f"tie_method must be one of {TIE_METHODS}, got {self.tie_method!r}")
        if not self.tolerance > 0:
            raise DataError("tolerance must be positive")
        if self.max_iterations < 1:
            raise DataError("max_iterations must be >= 1")


@dataclass(frozen=True)
class CoxModel:
    """Fitted coefficients with inference pieces and the Breslow baseline."""

    feature_names: tuple[str, ...]
    beta: np.ndarray
    covariance: np.ndarray
    log_likelihood: float
    iterations: int
    baseline: CumulativeHazard

    def __post_init__(self):
        beta = np.array(self.beta, dtype=float)
        cov = np.array(self.covariance, dtype=float)
        beta.setflags(write=False)
        cov.setflags(write=False)
        object.__setattr__(self, "feature_names", tuple(self.feature_names))
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "covariance", cov)
        p = len(self.feature_names)
        if beta.shape != (p,) or cov.shape != (p, p):
            raise DataError("beta/covariance shapes do not match feature_names")

    @property
    def p(self) -> int:
        return len(self.feature_names)


@dataclass(frozen=True)
class CoxSummaryRow:
    feature: str
    coef: float
    hazard_ratio: float
    se: float
    ci_low_coef: float
    ci_high_coef: float
    ci_low_hr: float
    ci_high_hr: float
    z: float
    p_value: float


class _FitData:
    """Dataset sorted by time with per-event-time tallies, reused across iterations."""

    def __init__(self, dataset: Dataset):
        order = np.argsort(dataset.times, kind="stable")
        self.t = dataset.times[order]
        self.e = dataset.events[order]
        self.x = dataset.covariate_matrix[order]
        self.n, self.p = self.x.shape
        _, starts = np.unique(self.t, return_index=True)
        ends = np.append(starts[1:], self.n)
        self.groups = []  # (risk_start, event_row_indices, d, sum_x_events)
        for s, eidx in zip(starts, ends):
            rows = np.flatnonzero(self.e[s:eidx]) + s
            if rows.size:
                self.groups.append((s, rows, rows.size, self.x[rows].sum(axis=0)))
        self.n_events = int(self.e.sum())


def _ll_grad_hess(fd: _FitData, beta: np.ndarray, tie_method: str):
    """Log partial likelihood with its gradient and Hessian at ``beta``."""
    eta = fd.x @ beta
    shift = eta.max()
    w = np.exp(eta - shift)
    wx = w[:, None] * fd.x
    wxx = np.einsum("ni,nj->nij", fd.x, wx)
    s0 = np.cumsum(w[::-1])[::-1]
    s1 = np.cumsum(wx[::-1], axis=0)[::-1]
    s2 = np.cumsum(wxx[::-1], axis=0)[::-1]

    ll = 0.0
    grad = np.zeros(fd.p)
    hess = np.zeros((fd.p, fd.p))
    for start, rows, d, sx in fd.groups:
        eta_sum = float(eta[rows].sum()) - d * shift
        r0, r1, r2 = s0[start], s1[start], s2[start]
        if tie_method == "breslow" or d == 1:
            ll += eta_sum - d * np.log(r0)
            mean = r1 / r0
            grad += sx - d * mean
            hess -= d * (r2 / r0 - np.outer(mean, mean))
        else:
            frac = np.arange(d) / d
            tw = w[rows].sum()
            twx = wx[rows].sum(axis=0)
            twxx = wxx[rows].sum(axis=0)
            denom = r0 - frac * tw  # (d,)
            num = r1[None, :] - frac[:, None] * twx[None, :]  # (d, p)
            ll += eta_sum - float(np.log(denom).sum())
            grad += sx - (num / denom[:, None]).sum(axis=0)
            a1 = (
                np.einsum("ij,l->ij", r2, 1.0 / denom)
                - np.einsum("ij,l->ij", twxx, frac / denom)
            )
            scaled = num / denom[:, None]
            hess -= a1 - scaled.T @ scaled
    return ll, grad, hess


def _check_covariates(dataset: Dataset) -> None:
    x = dataset.covariate_matrix
    spans = np.ptp(x, axis=0) if dataset.n else np.zeros(dataset.p)
    constant = [name for name, s in zip(dataset.feature_names, spans) if s == 0]
    if constant:
        raise DataError(f"constant covariate(s): {', '.join(constant)}")


def log_partial_likelihood(beta, dataset: Dataset, tie_method: str = "efron") -> float:
    """Log partial likelihood at ``beta``; Efron and Breslow agree when no event times tie."""
    if tie_method not in TIE_METHODS:
        raise DataError(f"tie_method must be one of {TIE_METHODS}, got {tie_method!r}")
    beta = np.asarray(beta, dtype=float)
    if beta.shape != (dataset.p,):
        raise DataError(f"beta has shape {beta.shape}, expected ({dataset.p},)")
    fd = _FitData(dataset)
    if fd.n_events == 0:
        raise DataError("dataset has no events")
    ll, _, _ = _ll_grad_hess(fd, beta, tie_method)
    return float(ll)


def score_vector(beta, dataset: Dataset, tie_method: str = "efron") -> np.ndarray:
    """Gradient of the log partial likelihood at ``beta``."""
    beta = np.asarray(beta, dtype=float)
    if beta.shape != (dataset.p,):
        raise DataError(f"beta has shape {beta.shape}, expected ({dataset.p},)")
    fd = _FitData(dataset)
    if fd.n_events == 0:
        raise DataError("dataset has no events")
    _, grad, _ = _ll_grad_hess(fd, beta, tie_method)
    return grad


def _raise_singular(info: np.ndarray, names) -> None:
    diag = np.abs(np.diag(info))
    weak = [n for n, v in zip(names, diag) if v <= 1e-12 * max(1.0, diag.max())]
    if not weak:
        _, _, vt = np.linalg.svd(info)
        v = np.abs(vt[-1])
        weak = [n for n, c in zip(names, v) if c >= 0.5 * v.max()]
    raise SingularMatrixError(
        "singular information matrix; collinear or uninformative feature(s): "
        + ", ".join(weak)
    )


def _grad_converged(grad: np.ndarray, ll: float) -> bool:
    return float(np.abs(grad).max(initial=0.0)) < _GRAD_TOL * max(1.0, abs(ll))


def cox_fit(dataset: Dataset, options: CoxFitOptions = CoxFitOptions()) -> CoxModel:
    """Maximize the partial likelihood by Newton-Raphson with step halving.

    Convergence requires both the log-likelihood change to drop below
    ``options.tolerance`` and the gradient infinity-norm to fall under
    1e-6 scaled by max(1, |loglik|). The covariance is the inverse of the
    observed information at the optimum.
    """
    if dataset.p == 0:
        raise DataError("dataset has no covariates")
    _check_covariates(dataset)
    fd = _FitData(dataset)
    if fd.n_events == 0:
        raise DataError("dataset has no events")
    if dataset.p >= fd.n_events:
        warnings.warn(
            f"{dataset.p} covariates but only {fd.n_events} events; "
            "estimates may be unstable",
            RuntimeWarning,
            stacklevel=2,
        )

    beta = np.zeros(dataset.p)
    ll, grad, hess = _ll_grad_hess(fd, beta, options.tie_method)
    iterations = 0
    converged = False
    for it in range(1, options.max_iterations + 1):
        info = -hess
        if not np.all(np.isfinite(info)):
            raise ConvergenceError(
                "information matrix is not finite", last_beta=beta, iterations=it
            )
        try:
            delta = np.linalg.solve(info, grad)
        except np.linalg.LinAlgError:
            _raise_singular(info, dataset.feature_names)

        step = 1.0
        accepted = False
        for _ in range(options.step_halving_max + 1):
            cand = beta + step * delta
            ll_c, grad_c, hess_c = _ll_grad_hess(fd, cand, options.tie_method)
            if np.isfinite(ll_c) and ll_c >= ll - 1e-13 * max(1.0, abs(ll)):
                accepted = True
                break
            step *= 0.5
        if not accepted:
            if _grad_converged(grad, ll):
                converged = True
                iterations = it - 1
                break
            raise ConvergenceError(
                "step halving could not improve the log partial likelihood",
                last_beta=beta,
                iterations=it,
            )
        change = ll_c - ll
        beta, ll, grad, hess = cand, ll_c, grad_c, hess_c
        iterations = it
        if abs(change) < options.tolerance and _grad_converged(grad, ll):
            converged = True
            break
    if not converged:
        raise ConvergenceError(
            f"no convergence after {options.max_iterations} iterations",
            last_beta=beta,
            iterations=iterations,
        )

    info = -hess
    try:
        covariance = np.linalg.inv(info)
    except np.linalg.LinAlgError:
        _raise_singular(info, dataset.feature_names)
    covariance = (covariance + covariance.T) / 2.0
    baseline = _breslow(fd, beta)
    return CoxModel(
        feature_names=dataset.feature_names,
        beta=beta,
        covariance=covariance,
        log_likelihood=float(ll),
        iterations=iterations,
        baseline=baseline,
    )


def _breslow(fd: _FitData, beta: np.ndarray) -> CumulativeHazard:
    eta = fd.x @ beta
    shift = eta.max()
    w = np.exp(eta - shift)
    s0 = np.cumsum(w[::-1])[::-1]
    times = np.empty(len(fd.groups))
    increments = np.empty(len(fd.groups))
    for i, (start, _, d, _) in enumerate(fd.groups):
        times[i] = fd.t[start]
        increments[i] = d * np.exp(-shift) / s0[start]
    return CumulativeHazard(times=times, hazard=np.cumsum(increments))


def breslow_baseline(model: CoxModel, dataset: Dataset) -> CumulativeHazard:
    """Breslow estimate of the cumulative baseline hazard on the training data:
    H0(t) = sum over event times <= t of d_k / sum_{risk set} exp(beta . x)."""
    if dataset.p != model.p:
        raise DataError("dataset feature count does not match the model")
    fd = _FitData(dataset)
    if fd.n_events == 0:
        raise DataError("dataset has no events")
    return _breslow(fd, model.beta)


def cox_summary(model: CoxModel, confidence: float = 0.95) -> list[CoxSummaryRow]:
    """Per-feature inference rows: coef, exp(coef), se, CIs, Wald z, and p."""
    if not 0.0 < confidence < 1.0:
        raise DataError(f"confidence must be in (0, 1), got {confidence}")
    q = norm.ppf(0.5 + confidence / 2.0)
    rows = []
    for j, name in enumerate(model.feature_names):
        coef = float(model.beta[j])
        se = float(np.sqrt(model.covariance[j, j]))
        z = coef / se
        lo, hi = coef - q * se, coef + q * se
        rows.append(
            CoxSummaryRow(
                feature=name,
                coef=coef,
                hazard_ratio=float(np.exp(coef)),
                se=se,
                ci_low_coef=lo,
                ci_high_coef=hi,
                ci_low_hr=float(np.exp(lo)),
                ci_high_hr=float(np.exp(hi)),
                z=z,
                p_value=float(2.0 * norm.sf(abs(z))),
            )
        )
    return rows


def cox_predict_risk(model: CoxModel, x) -> float:
    """Linear predictor beta . x; a monotone stand-in for exp(beta . x) in ranking."""
    x = np.asarray(x, dtype=float)
    if x.shape != (model.p,):
        raise DataError(f"covariate vector has shape {x.shape}, expected ({model.p},)")
    return float(model.beta @ x)


def cox_predict_survival(model: CoxModel, x) -> SurvivalCurve:
    """Subject-specific survival S(t|x) = exp(-H0(t) * exp(beta . x))."""
    lp = cox_predict_risk(model, x)
    hazard = np.asarray(model.baseline.hazard) * np.exp(lp)
    return SurvivalCurve(times=model.baseline.times, survival=np.exp(-hazard))


_COX_FORMAT = "survkit-cox"
_COX_VERSION = 1


def save_cox_model(model: CoxModel, path) -> None:
    payload = {
        "format": _COX_FORMAT,
        "version": _COX_VERSION,
        "feature_names": list(model.feature_names),
        "beta": model.beta.tolist(),
        "covariance": model.covariance.tolist(),
        "log_likelihood": model.log_likelihood,
        "iterations": model.iterations,
        "baseline": {
            "times": model.baseline.times.tolist(),
            "hazard": model.baseline.hazard.tolist(),
        },
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, sort_keys=True, separators=(",", ":"))
        fh.write("\n")


def load_cox_model(path) -> CoxModel:
    with open(path) as fh:
        payload = json.load(fh)
    if payload.get("format") != _COX_FORMAT or payload.get("version") != _COX_VERSION:
        raise DataError(f"{path}: not a version-{_COX_VERSION} {_COX_FORMAT} file")
    return CoxModel(
        feature_names=tuple(payload["feature_names"]),
        beta=np.asarray(payload["beta"], dtype=float),
        covariance=np.asarray(payload["covariance"], dtype=float),
        log_likelihood=float(payload["log_likelihood"]),
        iterations=int(payload["iterations"]),
        baseline=CumulativeHazard(
            times=np.asarray(payload["baseline"]["times"], dtype=float),
            hazard=np.asarray(payload["baseline"]["hazard"], dtype=float),
        ),
    )
