"""Maximum partial-likelihood estimation of the Cox model.

Fits are Newton-Raphson from beta = 0 with step-halving, using analytic
score and observed information. Ties are handled by the Breslow method by
default, with Efron selectable. Covariates are centered internally for
numerical stability; the partial likelihood, score, information, and the
estimates themselves are exactly invariant under that translation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .cohort import Cohort, TimeScale
from .errors import (
    CohortValidationError,
    DimensionMismatch,
    MonotoneLikelihood,
    ScaleMismatch,
    SingularInformation,
    ValidationIssue,
    ZeroVarianceCovariate,
)

TIES_BRESLOW = "breslow"
TIES_EFRON = "efron"


@dataclass(frozen=True)
class ModelSpec:
    """Time-scale choice plus covariate selection.

    ``include_entry_age`` appends entry age as a model covariate; it is only
    meaningful (and only allowed) on the time-on-study scale, where it is the
    classical baseline-age adjustment. The age-scale models never adjust for
    entry age as a covariate.
    """

    scale: TimeScale
    covariate_indices: tuple[int, ...]
    include_entry_age: bool = False

    def __post_init__(self):
        if not self.covariate_indices:
            raise ValueError("covariate_indices must be non-empty")
        if len(set(self.covariate_indices)) != len(self.covariate_indices):
            raise ValueError("covariate_indices must not repeat")
        if any(i < 0 for i in self.covariate_indices):
            raise ValueError("covariate_indices must be non-negative")
        if self.include_entry_age and self.scale is not TimeScale.TIME_ON_STUDY:
            raise ValueError("entry age enters as a covariate only on the time-on-study scale")

    @property
    def n_parameters(self) -> int:
        return len(self.covariate_indices) + (1 if self.include_entry_age else 0)

    def parameter_names(self, covariate_names) -> tuple[str, ...]:
        names = [covariate_names[i] for i in self.covariate_indices]
        if self.include_entry_age:
            names.append("entry_age")
        return tuple(names)


MODEL_PRESETS = ("m1", "m2", "m3")


def model_preset(label: str, n_covariates: int) -> ModelSpec:
    """The paper-style three-model family over all cohort covariates.

    m1: time-on-study scale, entry age appended as a covariate.
    m2: unadjusted age scale.
    m3: age scale with left truncation at the entry age.
    """
    indices = tuple(range(n_covariates))
    label = label.lower()
    if label == "m1":
        return ModelSpec(TimeScale.TIME_ON_STUDY, indices, include_entry_age=True)
    if label == "m2":
        return ModelSpec(TimeScale.AGE_UNADJUSTED, indices)
    if label == "m3":
        return ModelSpec(TimeScale.AGE_LEFT_TRUNCATED, indices)
    raise ValueError(f"unknown model label {label!r}; expected one of {MODEL_PRESETS}")


@dataclass(frozen=True)
class FitOptions:
    ties: str = TIES_BRESLOW
    tol: float = 1e-8
    max_iter: int = 100
    beta_bound: float = 50.0
    max_halvings: int = 10

    def __post_init__(self):
        if self.ties not in (TIES_BRESLOW, TIES_EFRON):
            raise ValueError(f"ties must be {TIES_BRESLOW!r} or {TIES_EFRON!r}")


@dataclass(frozen=True, eq=False)
class CoxFit:
    """Result of one maximum partial-likelihood fit.

    ``beta`` holds the coefficient per model covariate, with the entry-age
    coefficient last when the spec includes it. ``covariance`` is the inverse
    observed information at the solution; ``converged`` is true only if the
    max-norm of the score dropped below the tolerance.
    """

    spec: ModelSpec
    beta: np.ndarray
    covariance: np.ndarray
    standard_errors: np.ndarray
    log_likelihood: float
    iterations: int
    converged: bool


@dataclass(frozen=True)
class CohortArrays:
    """Column representation of a cohort in canonical (id-sorted) order."""

    name: str
    ids: tuple[str, ...]
    entry: np.ndarray
    exit: np.ndarray
    event: np.ndarray
    covariates: np.ndarray

    @classmethod
    def from_cohort(cls, cohort: Cohort) -> "CohortArrays":
        order = sorted(range(len(cohort)), key=lambda i: cohort.subjects[i].id)
        subs = [cohort.subjects[i] for i in order]
        return cls(
            name=cohort.name,
            ids=tuple(s.id for s in subs),
            entry=np.array([s.entry_age for s in subs], dtype=np.float64),
            exit=np.array([s.exit_age for s in subs], dtype=np.float64),
            event=np.array([s.event for s in subs], dtype=bool),
            covariates=np.array([s.covariates for s in subs], dtype=np.float64),
        )

    @property
    def n(self) -> int:
        return self.entry.shape[0]

    def take(self, indices: np.ndarray, name: str | None = None,
             keep_ids: bool = False) -> "CohortArrays":
        """Row subset/resample; indices must already be in a deterministic order.

        Resamples drop the id column by default: duplicated rows no longer
        correspond to distinct subjects and nothing downstream reads ids.
        """
        return CohortArrays(
            name=name or self.name,
            ids=tuple(self.ids[i] for i in indices) if keep_ids else (),
            entry=self.entry[indices],
            exit=self.exit[indices],
            event=self.event[indices],
            covariates=self.covariates[indices],
        )


def _interval_endpoints(arrays: CohortArrays, scale: TimeScale) -> tuple[np.ndarray, np.ndarray]:
    # At-risk interval (start, stop] on the chosen scale; mirrors cohort.scale_times.
    if scale is TimeScale.TIME_ON_STUDY:
        return np.zeros(arrays.n), arrays.exit - arrays.entry
    if scale is TimeScale.AGE_UNADJUSTED:
        return np.full(arrays.n, -np.inf), arrays.exit.copy()
    return arrays.entry.copy(), arrays.exit.copy()


def _design_matrix(arrays: CohortArrays, spec: ModelSpec) -> np.ndarray:
    width = arrays.covariates.shape[1]
    if any(i >= width for i in spec.covariate_indices):
        raise DimensionMismatch(
            f"covariate index out of range for cohort with {width} covariates"
        )
    cols = [arrays.covariates[:, i] for i in spec.covariate_indices]
    if spec.include_entry_age:
        cols.append(arrays.entry)
    return np.ascontiguousarray(np.column_stack(cols), dtype=np.float64)


class CoxWorkspace:
    """Preprocessed sort/group structure for repeated likelihood evaluations.

    Built once per (cohort, spec); every quantity that does not depend on
    beta is precomputed here. Evaluations dispatch to the active kernel
    backend.
    """

    def __init__(self, arrays: CohortArrays, spec: ModelSpec):
        self.spec = spec
        self.n = arrays.n
        x_raw = _design_matrix(arrays, spec)
        self.means = x_raw.mean(axis=0)
        self.x = np.ascontiguousarray(x_raw - self.means)
        self.x_raw = x_raw
        self.p = self.x.shape[1]

        start, stop = _interval_endpoints(arrays, spec.scale)
        event = arrays.event
        if not event.any():
            raise CohortValidationError([ValidationIssue("no_events")])

        event_subject_idx = np.flatnonzero(event)
        self.times, inverse = np.unique(stop[event_subject_idx], return_inverse=True)
        m = self.times.shape[0]
        counts = np.bincount(inverse, minlength=m)
        order_within = np.lexsort((event_subject_idx, inverse))
        self.event_idx = np.ascontiguousarray(event_subject_idx[order_within], dtype=np.intp)
        self.group_off = np.ascontiguousarray(
            np.concatenate(([0], np.cumsum(counts))), dtype=np.intp
        )
        self.d = counts.astype(np.float64)
        self.sum_z_events = np.ascontiguousarray(
            np.add.reduceat(self.x[self.event_idx], self.group_off[:-1], axis=0)
        )

        self.order_stop = np.ascontiguousarray(np.argsort(stop, kind="stable"), dtype=np.intp)
        self.pos_stop = np.ascontiguousarray(
            np.searchsorted(stop[self.order_stop], self.times, side="left"), dtype=np.intp
        )
        if start[0] == start[-1] and (start == start[0]).all():
            # Constant entry boundary (time-on-study or unadjusted age): every
            # subject satisfies start < tau at all event times, no sort needed.
            self.order_start = np.arange(self.n, dtype=np.intp)
            self.pos_start = np.where(self.times > start[0], self.n, 0).astype(np.intp)
        else:
            self.order_start = np.ascontiguousarray(np.argsort(start, kind="stable"), dtype=np.intp)
            self.pos_start = np.ascontiguousarray(
                np.searchsorted(start[self.order_start], self.times, side="left"), dtype=np.intp
            )

    def _eta_w(self, beta: np.ndarray, raw: bool = False) -> tuple[np.ndarray, np.ndarray]:
        x = self.x_raw if raw else self.x
        eta = np.ascontiguousarray(x @ beta)
        with np.errstate(over="ignore"):  # overflow -> inf -> NaN loglik -> step-halving
            return eta, np.exp(eta)

    def loglik(self, beta: np.ndarray, ties: str = TIES_BRESLOW) -> float:
        eta, w = self._eta_w(beta)
        return kernels.cox_loglik(eta, w, self.order_stop, self.pos_stop,
                                  self.order_start, self.pos_start, self.d,
                                  self.event_idx, self.group_off, ties == TIES_EFRON)

    def score_info(self, beta: np.ndarray, ties: str = TIES_BRESLOW):
        eta, w = self._eta_w(beta)
        return kernels.cox_score_info(eta, w, self.x, self.order_stop, self.pos_stop,
                                      self.order_start, self.pos_start, self.d,
                                      self.event_idx, self.group_off,
                                      self.sum_z_events, ties == TIES_EFRON)

    def breslow_denominators(self, beta: np.ndarray) -> np.ndarray:
        """At-risk sums of exp(beta'z) with z uncentered, per event time."""
        _, w = self._eta_w(beta, raw=True)
        return kernels.risk_denominators(w, self.order_stop, self.pos_stop,
                                         self.order_start, self.pos_start)


def _check_beta(beta, p: int) -> np.ndarray:
    b = np.asarray(beta, dtype=np.float64).reshape(-1)
    if b.shape[0] != p:
        raise DimensionMismatch(f"beta has length {b.shape[0]}, model expects {p}")
    return b


def partial_log_likelihood(cohort: Cohort, spec: ModelSpec, beta, ties: str = TIES_BRESLOW) -> float:
    """Partial log-likelihood at a fixed coefficient vector."""
    ws = CoxWorkspace(CohortArrays.from_cohort(cohort), spec)
    return ws.loglik(_check_beta(beta, ws.p), ties)


def score_and_information(cohort: Cohort, spec: ModelSpec, beta, ties: str = TIES_BRESLOW):
    """Analytic gradient and observed information (negative Hessian) at beta."""
    ws = CoxWorkspace(CohortArrays.from_cohort(cohort), spec)
    _, grad, info = ws.score_info(_check_beta(beta, ws.p), ties)
    return grad, info


def fit_cox(cohort: Cohort, spec: ModelSpec, options: FitOptions | None = None) -> CoxFit:
    """Newton-Raphson maximum partial-likelihood fit.

    Raises ZeroVarianceCovariate, SingularInformation, or MonotoneLikelihood
    for the corresponding pathologies; exceeding max_iter is not an error and
    returns converged=False.
    """
    ws = CoxWorkspace(CohortArrays.from_cohort(cohort), spec)
    return fit_workspace(ws, options or FitOptions())


def fit_workspace(ws: CoxWorkspace, options: FitOptions) -> CoxFit:
    p = ws.p
    spans = np.ptp(ws.x, axis=0)
    if np.any(spans == 0.0):
        raise ZeroVarianceCovariate(f"covariate column {int(np.argmin(spans))} is constant")

    beta = np.zeros(p)
    ll, grad, info = ws.score_info(beta, options.ties)
    scale = max(1.0, float(np.trace(info)) / p)
    if np.any(np.diag(info) <= 1e-12 * scale):
        raise ZeroVarianceCovariate(
            f"covariate column {int(np.argmin(np.diag(info)))} carries no variation "
            "within the event risk sets"
        )

    iterations = 0
    converged = False
    for _ in range(options.max_iter):
        if float(np.max(np.abs(grad))) < options.tol:
            converged = True
            break
        try:
            np.linalg.cholesky(info)
        except np.linalg.LinAlgError:
            raise SingularInformation("information matrix is not positive definite")
        delta = np.linalg.solve(info, grad)

        step = 1.0
        accepted = False
        floor = ll - 1e-13 * max(1.0, abs(ll))
        for _h in range(options.max_halvings + 1):
            cand = beta + step * delta
            ll_cand = ws.loglik(cand, options.ties)
            if np.isfinite(ll_cand) and ll_cand > floor:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            break

        beta = cand
        iterations += 1
        ll, grad, info = ws.score_info(beta, options.ties)

        diverged = np.abs(beta) > options.beta_bound
        if np.any(diverged) and float(np.max(np.abs(grad))) >= options.tol:
            idx = int(np.argmax(np.abs(beta)))
            raise MonotoneLikelihood(idx, float(beta[idx]))
    else:
        converged = float(np.max(np.abs(grad))) < options.tol

    try:
        covariance = np.linalg.inv(info)
        covariance = (covariance + covariance.T) / 2.0
    except np.linalg.LinAlgError:
        if converged:
            raise SingularInformation("information matrix singular at the solution")
        covariance = np.full((p, p), np.nan)

    se = np.sqrt(np.maximum(np.diag(covariance), 0.0))
    return CoxFit(
        spec=ws.spec,
        beta=beta,
        covariance=covariance,
        standard_errors=se,
        log_likelihood=float(ll),
        iterations=iterations,
        converged=bool(converged),
    )


def same_spec(fit: CoxFit, spec: ModelSpec) -> None:
    if fit.spec != spec:
        raise ScaleMismatch(f"fit was produced under {fit.spec}, not {spec}")
