"""Cohort data model, time-scale semantics, and risk-set construction.

The three supported time scales order events differently and therefore
produce different risk sets:

* ``TIME_ON_STUDY`` orders by follow-up time t = exit_age - entry_age;
  everyone is at risk from t = 0, so risk sets are nested.
* ``AGE_UNADJUSTED`` orders by age at exit and ignores delayed entry:
  a subject counts as at risk at every age up to their exit age, including
  ages before they actually entered the study.
* ``AGE_LEFT_TRUNCATED`` orders by age at exit with delayed entry: a subject
  is at risk only on the half-open interval (entry_age, exit_age].
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import CohortValidationError, DimensionMismatch, ValidationIssue, ZeroVariance


class TimeScale(enum.Enum):
    """Closed enumeration of supported event-ordering scales."""

    TIME_ON_STUDY = "time_on_study"
    AGE_UNADJUSTED = "age_unadjusted"
    AGE_LEFT_TRUNCATED = "age_left_truncated"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class SubjectRecord:
    """One person: entry age, exit age, event flag, covariate values.

    The first covariate is the risk factor of interest (e.g. systolic blood
    pressure in mmHg). Follow-up time is derived, never stored.
    """

    id: str
    entry_age: float
    exit_age: float
    event: bool
    covariates: tuple[float, ...]

    @property
    def follow_up(self) -> float:
        return self.exit_age - self.entry_age


@dataclass(frozen=True)
class Cohort:
    """Validated, immutable collection of subjects; the unit of analysis.

    Construct through :func:`validate_cohort` (or the CSV reader), which
    enforces all invariants. Instances are safe to share across threads
    and processes.
    """

    name: str
    subjects: tuple[SubjectRecord, ...]
    covariate_names: tuple[str, ...]

    def __len__(self) -> int:
        return len(self.subjects)

    @property
    def n_events(self) -> int:
        return sum(1 for s in self.subjects if s.event)

    def entry_ages(self) -> np.ndarray:
        return np.array([s.entry_age for s in self.subjects], dtype=np.float64)

    def exit_ages(self) -> np.ndarray:
        return np.array([s.exit_age for s in self.subjects], dtype=np.float64)

    def event_flags(self) -> np.ndarray:
        return np.array([s.event for s in self.subjects], dtype=bool)

    def covariate_matrix(self) -> np.ndarray:
        return np.array([s.covariates for s in self.subjects], dtype=np.float64)

    def covariate(self, index: int) -> np.ndarray:
        return np.array([s.covariates[index] for s in self.subjects], dtype=np.float64)


@dataclass(frozen=True)
class RiskSetEntry:
    event_time: float
    event_subject_ids: frozenset[str]
    at_risk_ids: frozenset[str]


@dataclass(frozen=True)
class RiskSetSequence:
    """Grouped event times with their event sets and at-risk sets.

    The ordering key is follow-up time under ``TIME_ON_STUDY`` and exit age
    otherwise; entries are strictly increasing in time, tied events grouped.
    """

    scale: TimeScale
    entries: tuple[RiskSetEntry, ...]

    def __len__(self) -> int:
        return len(self.entries)

    def event_times(self) -> tuple[float, ...]:
        return tuple(e.event_time for e in self.entries)


def validate_cohort(
    raw_records: Iterable[SubjectRecord],
    covariate_names: Sequence[str],
    name: str = "cohort",
) -> Cohort:
    """Check every invariant and return a Cohort, or raise naming all violations.

    Raises
    ------
    CohortValidationError
        With one :class:`ValidationIssue` per violating row. Kinds used here:
        ``non_positive_follow_up``, ``duplicate_id``, ``no_events``,
        ``ragged_covariates``, ``non_finite_value``.
    """
    records = tuple(raw_records)
    issues: list[ValidationIssue] = []
    if not records:
        raise CohortValidationError([ValidationIssue("no_events", detail="empty cohort")])

    width = len(covariate_names)
    seen: set[str] = set()
    any_event = False
    for rec in records:
        if rec.id in seen:
            issues.append(ValidationIssue("duplicate_id", subject_id=rec.id))
        seen.add(rec.id)
        for fname, value in (("entry_age", rec.entry_age), ("exit_age", rec.exit_age)):
            if not math.isfinite(value):
                issues.append(ValidationIssue("non_finite_value", subject_id=rec.id, field=fname))
        if len(rec.covariates) != width:
            issues.append(ValidationIssue("ragged_covariates", subject_id=rec.id))
        else:
            for j, value in enumerate(rec.covariates):
                if not math.isfinite(value):
                    issues.append(
                        ValidationIssue("non_finite_value", subject_id=rec.id, field=covariate_names[j])
                    )
        if math.isfinite(rec.entry_age) and math.isfinite(rec.exit_age):
            if rec.entry_age < 0:
                issues.append(ValidationIssue("negative_entry_age", subject_id=rec.id))
            if not rec.exit_age > rec.entry_age:
                issues.append(ValidationIssue("non_positive_follow_up", subject_id=rec.id))
        any_event = any_event or bool(rec.event)

    if not any_event:
        issues.append(ValidationIssue("no_events"))
    if issues:
        raise CohortValidationError(issues)
    return Cohort(name=name, subjects=records, covariate_names=tuple(covariate_names))


def scale_times(cohort: Cohort, scale: TimeScale) -> tuple[np.ndarray, np.ndarray]:
    """Return (start, stop) at-risk interval endpoints on the chosen scale.

    A subject is at risk at time tau iff start < tau <= stop. Under
    ``AGE_UNADJUSTED`` the start is -inf (delayed entry ignored entirely).
    """
    entry = cohort.entry_ages()
    exit_ = cohort.exit_ages()
    if scale is TimeScale.TIME_ON_STUDY:
        return np.zeros(len(cohort)), exit_ - entry
    if scale is TimeScale.AGE_UNADJUSTED:
        return np.full(len(cohort), -np.inf), exit_
    return entry, exit_


def build_risk_sets(cohort: Cohort, scale: TimeScale) -> RiskSetSequence:
    """Materialize the risk-set sequence for the cohort on one time scale.

    Subjects censored exactly at an event time remain in the at-risk set at
    that time (censoring is treated as occurring after events); a subject
    whose entry age equals an event age is not yet at risk there.
    """
    start, stop = scale_times(cohort, scale)
    events = cohort.event_flags()
    ids = [s.id for s in cohort.subjects]

    times = np.unique(stop[events])
    entries = []
    for tau in times:
        at_risk = (start < tau) & (tau <= stop)
        dead = events & (stop == tau)
        entries.append(
            RiskSetEntry(
                event_time=float(tau),
                event_subject_ids=frozenset(ids[i] for i in np.flatnonzero(dead)),
                at_risk_ids=frozenset(ids[i] for i in np.flatnonzero(at_risk)),
            )
        )
    return RiskSetSequence(scale=scale, entries=tuple(entries))


def pearson_correlation(x: Sequence[float] | np.ndarray, y: Sequence[float] | np.ndarray) -> float:
    """Pearson product-moment correlation of two equal-length vectors.

    Raises ZeroVariance if either input is constant, DimensionMismatch on
    unequal lengths or fewer than two observations.
    """
    xa = np.asarray(x, dtype=np.float64)
    ya = np.asarray(y, dtype=np.float64)
    if xa.ndim != 1 or ya.ndim != 1 or xa.shape != ya.shape:
        raise DimensionMismatch(f"shapes {xa.shape} and {ya.shape}")
    if xa.size < 2:
        raise DimensionMismatch("need at least two observations")
    xc = xa - xa.mean()
    yc = ya - ya.mean()
    sxx = float(xc @ xc)
    syy = float(yc @ yc)
    if sxx == 0.0 or syy == 0.0:
        raise ZeroVariance("constant input")
    r = float(xc @ yc) / math.sqrt(sxx * syy)
    return min(1.0, max(-1.0, r))
