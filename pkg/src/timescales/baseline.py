"""Breslow cumulative baseline hazard and the log-linearity diagnostic.

A Gompertz-form baseline hazard c*exp(psi*a) has cumulative hazard
(c/psi)*exp(psi*a), so its log is exactly linear in age with slope psi.
The diagnostic regresses the log of the Breslow estimate on time and
classifies the baseline as "exponential" when the fit's R-squared clears a
recorded threshold; this makes the paper-style visual call reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cohort import Cohort, TimeScale
from .coxfit import CohortArrays, CoxFit, CoxWorkspace, ModelSpec, same_spec
from .errors import InsufficientPoints


@dataclass(frozen=True)
class CumulativeHazard:
    """Step-function estimate of the cumulative baseline hazard.

    One point per distinct event time on the fit's scale; values are the
    running sums of d(t) / sum of exp(beta'z) over the at-risk set.
    """

    scale: TimeScale
    points: tuple[tuple[float, float], ...]

    def times(self) -> np.ndarray:
        return np.array([t for t, _ in self.points])

    def values(self) -> np.ndarray:
        return np.array([v for _, v in self.points])


@dataclass(frozen=True)
class ExponentialityReport:
    """OLS of log cumulative hazard on time: slope, intercept, fit quality.

    For a Gompertz baseline the slope estimates the age coefficient of the
    log hazard and the intercept estimates log(rate/slope).
    """

    slope: float
    intercept: float
    r_squared: float
    is_exponential: bool
    n_points: int
    threshold: float


def breslow_cumulative_hazard(cohort: Cohort, fit: CoxFit, spec: ModelSpec) -> CumulativeHazard:
    """Breslow estimator using the same risk sets as the fit.

    Raises ScaleMismatch if the fit was not produced under ``spec``.
    """
    same_spec(fit, spec)
    ws = CoxWorkspace(CohortArrays.from_cohort(cohort), spec)
    denom = ws.breslow_denominators(np.asarray(fit.beta, dtype=np.float64))
    jumps = ws.d / denom
    values = np.cumsum(jumps)
    points = tuple((float(t), float(v)) for t, v in zip(ws.times, values))
    return CumulativeHazard(scale=spec.scale, points=points)


def exponentiality_diagnostic(cumhaz: CumulativeHazard, threshold: float = 0.99) -> ExponentialityReport:
    """Classify the baseline as Gompertz-like from the log cumulative hazard.

    Ordinary least squares of log(value) on time over points with positive
    value; requires at least three such points.
    """
    times = cumhaz.times()
    values = cumhaz.values()
    keep = values > 0.0
    if int(keep.sum()) < 3:
        raise InsufficientPoints(
            f"need at least 3 positive cumulative-hazard points, have {int(keep.sum())}"
        )
    x = times[keep]
    y = np.log(values[keep])

    xc = x - x.mean()
    yc = y - y.mean()
    sxx = float(xc @ xc)
    slope = float(xc @ yc) / sxx
    intercept = float(y.mean() - slope * x.mean())
    ss_res = float(((yc - slope * xc) ** 2).sum())
    ss_tot = float(yc @ yc)
    r_squared = 1.0 - ss_res / ss_tot if ss_tot > 0.0 else 1.0
    r_squared = min(1.0, max(0.0, r_squared))
    return ExponentialityReport(
        slope=slope,
        intercept=intercept,
        r_squared=r_squared,
        is_exponential=bool(r_squared >= threshold),
        n_points=int(keep.sum()),
        threshold=float(threshold),
    )


def nelson_aalen(cohort: Cohort, spec: ModelSpec) -> CumulativeHazard:
    """The beta = 0 special case: jumps are d(t) / |risk set|."""
    ws = CoxWorkspace(CohortArrays.from_cohort(cohort), spec)
    denom = ws.breslow_denominators(np.zeros(ws.p))
    values = np.cumsum(ws.d / denom)
    points = tuple((float(t), float(v)) for t, v in zip(ws.times, values))
    return CumulativeHazard(scale=spec.scale, points=points)
