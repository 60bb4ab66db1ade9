"""Exception types raised across the package."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class ValidationIssue:
    """One invariant violation found while validating cohort rows.

    kind is one of: non_positive_follow_up, duplicate_id, no_events,
    ragged_covariates, non_finite_value, negative_entry_age, format.
    """

    kind: str
    subject_id: str | None = None
    field: str | None = None
    detail: str | None = None

    def __str__(self) -> str:
        parts = [self.kind]
        if self.subject_id is not None:
            parts.append(f"id={self.subject_id}")
        if self.field is not None:
            parts.append(f"field={self.field}")
        if self.detail is not None:
            parts.append(self.detail)
        return " ".join(parts)


class CohortValidationError(ValueError):
    """Raised by cohort validation; carries every violating row, not just the first."""

    def __init__(self, issues):
        self.issues = tuple(issues)
        super().__init__("; ".join(str(i) for i in self.issues))

    def kinds(self) -> set[str]:
        return {i.kind for i in self.issues}


class DimensionMismatch(ValueError):
    """Vector/matrix arguments have incompatible lengths."""


class ZeroVariance(ValueError):
    """A correlation input is constant."""


class ZeroVarianceCovariate(ValueError):
    """A model covariate carries no variation within the event risk sets."""


class MonotoneLikelihood(RuntimeError):
    """The partial likelihood keeps improving as a coefficient diverges; no finite MLE."""

    def __init__(self, coefficient_index: int, beta_value: float):
        self.coefficient_index = coefficient_index
        self.beta_value = beta_value
        super().__init__(
            f"monotone likelihood: |beta[{coefficient_index}]| = {abs(beta_value):.3g} "
            "exceeded the divergence bound without gradient convergence"
        )


class SingularInformation(RuntimeError):
    """The observed information matrix is singular."""


class ScaleMismatch(ValueError):
    """A fit and a model specification disagree."""


class InsufficientPoints(ValueError):
    """Too few usable points for the requested diagnostic."""


class OriginalFitFailed(RuntimeError):
    """A model could not be fit on the original (un-resampled) cohort."""

    def __init__(self, label: str, cause: Exception | str):
        self.label = label
        self.cause = cause
        super().__init__(f"original fit failed for {label}: {cause}")


class TooManyFailedReplicates(RuntimeError):
    """Bootstrap could not collect enough successful replicates within the draw cap."""


class DegenerateCohort(RuntimeError):
    """A synthetic draw produced a cohort with zero events."""


class PipelineConfigError(ValueError):
    """The pipeline configuration is invalid."""
