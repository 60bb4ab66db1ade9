"""Paired-bootstrap comparison of coefficients from two model specifications.

Each replicate draws n subjects with replacement and fits every involved
model on that same resample, so the spread of the per-replicate coefficient
differences estimates the standard error of the difference. The test
statistic is (beta_a - beta_b) from the original fits divided by that
bootstrap standard error, referred to a standard normal.

Determinism contract: the resample for replicate r is produced by
``numpy.random.default_rng(numpy.random.SeedSequence(entropy=(seed, r)))``
drawing ``integers(0, n, size=n)`` and sorting them, so results depend only
on (cohort, specs, seed, replicates), never on execution order. Replicates
where any involved fit fails (no events in the resample, zero-variance
covariate, non-convergence) are discarded and further indices are drawn, up
to a hard cap of twice the requested replicate count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .cohort import Cohort
from .coxfit import CohortArrays, CoxFit, CoxWorkspace, FitOptions, ModelSpec, fit_workspace
from .errors import (
    CohortValidationError,
    MonotoneLikelihood,
    OriginalFitFailed,
    SingularInformation,
    TooManyFailedReplicates,
    ZeroVarianceCovariate,
)

_REPLICATE_FAILURES = (
    CohortValidationError,
    ZeroVarianceCovariate,
    SingularInformation,
    MonotoneLikelihood,
)


@dataclass(frozen=True)
class ComparisonResult:
    """Paired-bootstrap difference test between two model specifications.

    ``beta_a``/``beta_b`` are the risk-factor coefficients (the first listed
    covariate, never entry age) from the original-cohort fits. The z statistic
    is their difference over the bootstrap standard error of the per-replicate
    differences; the p-value is the two-sided standard-normal tail.
    """

    beta_a: float
    beta_b: float
    difference: float
    bootstrap_se: float
    z_statistic: float
    p_value: float
    replicates_requested: int
    replicates_used: int
    seed: int

    def significant_at(self, alpha: float) -> bool:
        return self.p_value < alpha


def resample_indices(seed: int, r: int, n: int) -> np.ndarray:
    """The documented (seed, replicate) -> index derivation, sorted ascending."""
    rng = np.random.default_rng(np.random.SeedSequence(entropy=(seed, r)))
    return np.sort(rng.integers(0, n, size=n))


def _replicate_beta(sub: CohortArrays, spec: ModelSpec, fit_options: FitOptions) -> float | None:
    try:
        fit = fit_workspace(CoxWorkspace(sub, spec), fit_options)
    except _REPLICATE_FAILURES:
        return None
    return float(fit.beta[0]) if fit.converged else None


def paired_bootstrap(
    arrays: CohortArrays,
    specs: Mapping[str, ModelSpec],
    pairs: Sequence[tuple[str, str]],
    replicates: int = 1000,
    seed: int = 0,
    fit_options: FitOptions | None = None,
) -> tuple[dict[str, CoxFit], dict[tuple[str, str], ComparisonResult | Exception]]:
    """Run the shared-replicate engine for one or more model pairs.

    Every pair sees the identical resample sequence, so per-pair results are
    bit-identical to running :func:`compare_models` separately with the same
    seed. Returns the original fits per label and, per pair, either a
    ComparisonResult or the exception that aborted that pair.
    """
    if replicates < 2:
        raise ValueError("replicates must be at least 2")
    fit_options = fit_options or FitOptions()

    originals: dict[str, CoxFit] = {}
    failures: dict[str, Exception] = {}
    for label in sorted({lab for pair in pairs for lab in pair}):
        try:
            fit = fit_workspace(CoxWorkspace(arrays, specs[label]), fit_options)
            if not fit.converged:
                raise OriginalFitFailed(label, "did not converge")
            originals[label] = fit
        except OriginalFitFailed as exc:
            failures[label] = exc
        except _REPLICATE_FAILURES as exc:
            failures[label] = OriginalFitFailed(label, exc)

    results: dict[tuple[str, str], ComparisonResult | Exception] = {}
    deltas: dict[tuple[str, str], list[float]] = {}
    unfinished: list[tuple[str, str]] = []
    for pair in pairs:
        bad = next((lab for lab in pair if lab in failures), None)
        if bad is not None:
            results[pair] = failures[bad]
        else:
            deltas[pair] = []
            unfinished.append(pair)

    n = arrays.n
    cap = 2 * replicates
    cache: dict[str, float | None] = {}
    for r in range(cap):
        if not unfinished:
            break
        sub = arrays.take(resample_indices(seed, r, n))
        cache.clear()
        for label in sorted({lab for pair in unfinished for lab in pair}):
            cache[label] = _replicate_beta(sub, specs[label], fit_options)
        for pair in list(unfinished):
            ba, bb = cache[pair[0]], cache[pair[1]]
            if ba is None or bb is None:
                continue
            deltas[pair].append(ba - bb)
            if len(deltas[pair]) == replicates:
                unfinished.remove(pair)

    for pair in deltas:
        used = len(deltas[pair])
        if used < replicates:
            results[pair] = TooManyFailedReplicates(
                f"{used}/{replicates} successful replicates within the {cap}-draw cap"
            )
            continue
        beta_a = float(originals[pair[0]].beta[0])
        beta_b = float(originals[pair[1]].beta[0])
        difference = beta_a - beta_b
        se = float(np.std(np.array(deltas[pair]), ddof=1))
        if se > 0.0:
            z = difference / se
            p = math.erfc(abs(z) / math.sqrt(2.0))
        elif difference == 0.0:
            # Degenerate spread with a zero difference: no evidence at all.
            z = 0.0
            p = 1.0
        else:
            z = math.inf if difference > 0 else -math.inf
            p = 0.0
        results[pair] = ComparisonResult(
            beta_a=beta_a,
            beta_b=beta_b,
            difference=difference,
            bootstrap_se=se,
            z_statistic=z,
            p_value=p,
            replicates_requested=replicates,
            replicates_used=used,
            seed=seed,
        )
    return originals, results


def compare_models(
    cohort: Cohort,
    spec_a: ModelSpec,
    spec_b: ModelSpec,
    replicates: int = 1000,
    seed: int = 0,
    alpha: float = 0.05,
    fit_options: FitOptions | None = None,
) -> ComparisonResult:
    """Paired-bootstrap test of whether two specs give the same risk-factor coefficient.

    ``alpha`` is carried for callers that want the significance call; the
    result itself reports the two-sided p-value. Raises OriginalFitFailed or
    TooManyFailedReplicates when the contract cannot be met.
    """
    del alpha  # significance is a downstream call: ComparisonResult.significant_at
    arrays = CohortArrays.from_cohort(cohort)
    _, results = paired_bootstrap(
        arrays,
        {"a": spec_a, "b": spec_b},
        [("a", "b")],
        replicates=replicates,
        seed=seed,
        fit_options=fit_options,
    )
    outcome = results[("a", "b")]
    if isinstance(outcome, Exception):
        raise outcome
    return outcome
