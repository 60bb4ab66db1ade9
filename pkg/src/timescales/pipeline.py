"""Batch orchestration: ingest or generate cohorts, fit, compare, summarize.

For every cohort the pipeline fits the requested models, runs the requested
paired-bootstrap comparisons, computes the correlation between the risk
factor and entry age, estimates the Breslow baseline under one configured
model, and applies the exponentiality diagnostic. Outputs:

* ``cohorts.tsv``      one row per cohort with columns exactly
                       ``cohort beta1 se1 beta2 se2 beta3 se3 p12 p13 p23
                       corr exponential``
* ``summary_by_correlation.tsv``     significant / non-significant counts per
                                     correlation bracket per model pair
* ``summary_by_exponentiality.tsv``  the same split by the exponentiality flag
* ``hazards/<cohort>.tsv``           cumulative-hazard plot data per cohort
* ``failures.tsv``     per-cohort failure diagnostics (only when any occur)

Both summaries are recomputed from the written ``cohorts.tsv``, so they are
pure aggregations of it by construction. Per-cohort work is seeded from the
cohort name, so results do not depend on worker scheduling, and a rerun with
the same config is byte-identical.
"""

from __future__ import annotations

import concurrent.futures
import hashlib
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

from . import __version__
from .baseline import breslow_cumulative_hazard, exponentiality_diagnostic
from .bootstrap import paired_bootstrap
from .cohort import Cohort, pearson_correlation
from .coxfit import CohortArrays, CoxWorkspace, FitOptions, fit_workspace, model_preset
from .errors import InsufficientPoints, PipelineConfigError, ZeroVariance
from .io import read_cohort_csv, write_hazard_tsv
from .simulate import GeneratorParams, default_params, generate_cohort

ALL_MODELS = ("m1", "m2", "m3")
ALL_PAIRS = (("m1", "m2"), ("m1", "m3"), ("m2", "m3"))
TABLE3_COLUMNS = ("cohort", "beta1", "se1", "beta2", "se2", "beta3", "se3",
                  "p12", "p13", "p23", "corr", "exponential")
CORRELATION_BINS = ("0.5+", "0.4-0.5", "0.3-0.4", "0.2-0.3", "0.1-0.2", "0.0-0.1")


@dataclass(frozen=True)
class PipelineConfig:
    out_dir: str
    inputs: tuple[str, ...] = ()
    simulate: int = 0
    sim_params: GeneratorParams | None = None
    models: tuple[str, ...] = ALL_MODELS
    comparisons: tuple[tuple[str, str], ...] = ALL_PAIRS
    replicates: int = 1000
    seed: int = 0
    ties: str = "breslow"
    expo_threshold: float = 0.99
    alpha: float = 0.05
    hazard_model: str = "m3"
    workers: int = 1

    def validate(self) -> None:
        if bool(self.inputs) == bool(self.simulate):
            raise PipelineConfigError("provide input paths or a simulate count, not both/neither")
        if self.simulate < 0:
            raise PipelineConfigError("simulate count must be non-negative")
        unknown = [m for m in self.models if m not in ALL_MODELS]
        if unknown or not self.models:
            raise PipelineConfigError(f"models must be a non-empty subset of {ALL_MODELS}")
        for pair in self.comparisons:
            if pair[0] not in self.models or pair[1] not in self.models:
                raise PipelineConfigError(f"comparison {pair} references a model that is not requested")
        if self.replicates < 2:
            raise PipelineConfigError("replicates must be at least 2")
        if self.hazard_model not in self.models:
            raise PipelineConfigError("hazard_model must be one of the requested models")
        if not 0.0 < self.alpha < 1.0:
            raise PipelineConfigError("alpha must lie in (0, 1)")
        if self.workers < 1:
            raise PipelineConfigError("workers must be at least 1")

    def content_hash(self) -> str:
        payload = asdict(self)
        payload.pop("workers")  # scheduling must not change results
        payload.pop("out_dir")  # neither must the destination
        if self.sim_params is not None:
            payload["sim_params"]["baseline"]["family"] = type(self.sim_params.baseline).__name__
        return hashlib.sha256(
            json.dumps(payload, sort_keys=True, default=str).encode()
        ).hexdigest()[:16]


@dataclass(frozen=True)
class ModelResult:
    beta: float
    se: float
    log_likelihood: float
    converged: bool
    error: str | None = None


@dataclass(frozen=True)
class PairResult:
    difference: float
    bootstrap_se: float
    p_value: float
    significant: bool
    error: str | None = None


@dataclass(frozen=True)
class CohortReport:
    """Everything the per-cohort table row carries, in structured form."""

    name: str
    n_subjects: int
    n_events: int
    models: dict[str, ModelResult] = field(default_factory=dict)
    pairs: dict[tuple[str, str], PairResult] = field(default_factory=dict)
    correlation: float = math.nan
    exponential: bool | None = None
    expo_r_squared: float = math.nan
    error: str | None = None


@dataclass(frozen=True)
class PipelineResult:
    reports: list[CohortReport]
    table3_path: Path | None
    summary_correlation_path: Path | None
    summary_exponentiality_path: Path | None
    failures_path: Path | None
    exit_code: int
    diagnostic: str = ""


def derive_seed(seed: int, *context: str) -> int:
    """Stable per-cohort seed derivation (independent of processing order)."""
    digest = hashlib.sha256("|".join([str(seed), *context]).encode()).digest()
    return int.from_bytes(digest[:8], "big") >> 1


def _process_cohort(cohort: Cohort, config: PipelineConfig) -> CohortReport:
    arrays = CohortArrays.from_cohort(cohort)
    n_cov = arrays.covariates.shape[1]
    specs = {m: model_preset(m, n_cov) for m in config.models}
    fit_options = FitOptions(ties=config.ties)
    boot_seed = derive_seed(config.seed, cohort.name, "bootstrap")

    originals, outcomes = paired_bootstrap(
        arrays, specs, list(config.comparisons),
        replicates=config.replicates, seed=boot_seed, fit_options=fit_options,
    )
    # Models outside any comparison still need their original fit for the row.
    models: dict[str, ModelResult] = {}
    for label in config.models:
        fit = originals.get(label)
        if fit is None:
            try:
                fit = fit_workspace(CoxWorkspace(arrays, specs[label]), fit_options)
            except Exception as exc:  # noqa: BLE001 - reported in-row
                models[label] = ModelResult(math.nan, math.nan, math.nan, False, repr(exc))
                continue
        originals[label] = fit
        models[label] = ModelResult(
            beta=float(fit.beta[0]),
            se=float(fit.standard_errors[0]),
            log_likelihood=fit.log_likelihood,
            converged=fit.converged,
            error=None if fit.converged else "did not converge",
        )

    pairs: dict[tuple[str, str], PairResult] = {}
    for pair in config.comparisons:
        outcome = outcomes.get(pair)
        if isinstance(outcome, Exception) or outcome is None:
            pairs[pair] = PairResult(math.nan, math.nan, math.nan, False, repr(outcome))
        else:
            pairs[pair] = PairResult(
                difference=outcome.difference,
                bootstrap_se=outcome.bootstrap_se,
                p_value=outcome.p_value,
                significant=outcome.significant_at(config.alpha),
            )

    try:
        correlation = pearson_correlation(cohort.entry_ages(), cohort.covariate(0))
    except ZeroVariance:
        correlation = math.nan

    exponential: bool | None = None
    expo_r2 = math.nan
    hazard_fit = originals.get(config.hazard_model)
    if hazard_fit is not None and models[config.hazard_model].error is None:
        cumhaz = breslow_cumulative_hazard(cohort, hazard_fit, specs[config.hazard_model])
        hazards_dir = Path(config.out_dir) / "hazards"
        hazards_dir.mkdir(parents=True, exist_ok=True)
        write_hazard_tsv(cumhaz, cohort.name, hazard_fit.beta, hazards_dir / f"{cohort.name}.tsv")
        try:
            report = exponentiality_diagnostic(cumhaz, threshold=config.expo_threshold)
            exponential = report.is_exponential
            expo_r2 = report.r_squared
        except InsufficientPoints:
            pass

    return CohortReport(
        name=cohort.name,
        n_subjects=len(cohort),
        n_events=cohort.n_events,
        models=models,
        pairs=pairs,
        correlation=correlation,
        exponential=exponential,
        expo_r_squared=expo_r2,
    )


def _run_task(task: tuple) -> CohortReport:
    kind, name, payload, config = task
    try:
        if kind == "csv":
            cohort = read_cohort_csv(payload, name=name)
        else:
            cohort = generate_cohort(payload, derive_seed(config.seed, name, "generate"), name=name)
        return _process_cohort(cohort, config)
    except Exception as exc:  # noqa: BLE001 - per-cohort failures stay in-row
        return CohortReport(name=name, n_subjects=0, n_events=0, error=repr(exc))


def _build_tasks(config: PipelineConfig) -> list[tuple]:
    tasks: list[tuple] = []
    if config.inputs:
        files: list[Path] = []
        for item in config.inputs:
            path = Path(item)
            if path.is_dir():
                files.extend(sorted(path.glob("*.csv")))
            else:
                files.append(path)
        names = [f.stem for f in files]
        if len(set(names)) != len(names):
            raise PipelineConfigError("cohort file stems must be unique across inputs")
        tasks = [("csv", f.stem, str(f), config) for f in files]
    else:
        params = config.sim_params or default_params()
        width = len(str(max(config.simulate - 1, 0)))
        for i in range(config.simulate):
            name = f"sim{i:0{max(width, 3)}d}"
            tasks.append(("sim", name, params, config))
    return tasks


def _fmt(value) -> str:
    if value is None:
        return "nan"
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _report_row(report: CohortReport) -> list[str]:
    def model_cells(label: str) -> tuple[str, str]:
        res = report.models.get(label)
        if res is None or res.error is not None:
            return "nan", "nan"
        return _fmt(res.beta), _fmt(res.se)

    def pair_cell(pair: tuple[str, str]) -> str:
        res = report.pairs.get(pair)
        if res is None or res.error is not None:
            return "nan"
        return _fmt(res.p_value)

    cells = [report.name]
    for label in ALL_MODELS:
        cells.extend(model_cells(label))
    for pair in ALL_PAIRS:
        cells.append(pair_cell(pair))
    cells.append(_fmt(report.correlation))
    cells.append(_fmt(report.exponential) if report.exponential is not None else "nan")
    return cells


def read_table3(path: str | Path) -> tuple[dict[str, str], list[dict]]:
    """Parse a cohorts.tsv file back into metadata and typed rows."""
    meta: dict[str, str] = {}
    rows: list[dict] = []
    with Path(path).open(encoding="utf-8") as handle:
        for line in handle:
            line = line.rstrip("\n")
            if line.startswith("#"):
                for token in line[1:].strip().split("\t"):
                    if "=" in token:
                        key, _, val = token.partition("=")
                        meta[key] = val
                continue
            cells = line.split("\t")
            if cells[0] == "cohort":
                continue
            row: dict = {"cohort": cells[0]}
            for key, cell in zip(TABLE3_COLUMNS[1:], cells[1:]):
                row[key] = float(cell)
            rows.append(row)
    return meta, rows


def _correlation_bin(corr: float) -> str | None:
    if math.isnan(corr):
        return None
    if corr >= 0.5:
        return "0.5+"
    # Brackets are closed on the left; anything below 0.1 (including
    # negative sample correlations) lands in the lowest bracket.
    for low, label in ((0.4, "0.4-0.5"), (0.3, "0.3-0.4"), (0.2, "0.2-0.3"), (0.1, "0.1-0.2")):
        if corr >= low:
            return label
    return "0.0-0.1"


_PAIR_KEYS = {("m1", "m2"): "p12", ("m1", "m3"): "p13", ("m2", "m3"): "p23"}


def _significance_counts(group_rows: list[dict], alpha: float) -> list[str]:
    cells = []
    for pair in ALL_PAIRS:
        pkey = _PAIR_KEYS[pair]
        sig = sum(1 for r in group_rows if not math.isnan(r[pkey]) and r[pkey] < alpha)
        non = sum(1 for r in group_rows if not math.isnan(r[pkey]) and r[pkey] >= alpha)
        cells.extend([str(sig), str(non)])
    return cells


def _grouped_summary(rows: list[dict], selector, labels, alpha: float) -> list[list[str]]:
    groups: dict[str, list[dict]] = {}
    for row in rows:
        key = selector(row)
        if key is not None:
            groups.setdefault(key, []).append(row)
    table = [[label, *_significance_counts(groups.get(label, []), alpha)] for label in labels]
    covered = [r for label in labels for r in groups.get(label, [])]
    table.append(["Total", *_significance_counts(covered, alpha)])
    return table


def summarize_by_correlation(rows: list[dict], alpha: float) -> list[list[str]]:
    """Table-1 style: significance counts per correlation bracket, plus Total."""
    return _grouped_summary(rows, lambda r: _correlation_bin(r["corr"]),
                            CORRELATION_BINS, alpha)


def summarize_by_exponentiality(rows: list[dict], alpha: float) -> list[list[str]]:
    """Table-2 style: significance counts by exponentiality flag, plus Total."""

    def selector(row: dict) -> str | None:
        if math.isnan(row["exponential"]):
            return None
        return "yes" if row["exponential"] == 1.0 else "no"

    return _grouped_summary(rows, selector, ("yes", "no"), alpha)


_SUMMARY_HEADER = ["bracket"]
for _pair in ALL_PAIRS:
    _tag = f"{_pair[0]}_vs_{_pair[1]}"
    _SUMMARY_HEADER.extend([f"sig_{_tag}", f"nonsig_{_tag}"])


def _write_tsv(path: Path, meta_line: str, header: list[str], rows: list[list[str]]) -> None:
    with path.open("w", encoding="utf-8") as handle:
        handle.write(meta_line + "\n")
        handle.write("\t".join(header) + "\n")
        for row in rows:
            handle.write("\t".join(row) + "\n")


def run_pipeline(config: PipelineConfig) -> PipelineResult:
    """Run the full batch; per-cohort failures never abort the run.

    Exit code semantics: 0 when at least one cohort succeeded, 2 when none
    did (or no input cohorts were found); invalid configs raise
    PipelineConfigError before any work starts.
    """
    config.validate()
    tasks = _build_tasks(config)
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if not tasks:
        return PipelineResult([], None, None, None, None, 2, "no input cohorts found")

    if config.workers > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=config.workers) as pool:
            reports = list(pool.map(_run_task, tasks))
    else:
        reports = [_run_task(task) for task in tasks]

    meta_line = (
        f"# timescales={__version__}\tconfig_hash={config.content_hash()}\tseed={config.seed}"
        f"\talpha={config.alpha!r}\texpo_threshold={config.expo_threshold!r}"
        f"\tties={config.ties}\thazard_model={config.hazard_model}"
        f"\tmodels={','.join(config.models)}\treplicates={config.replicates}"
    )

    table3_path = out_dir / "cohorts.tsv"
    _write_tsv(table3_path, meta_line, list(TABLE3_COLUMNS), [_report_row(r) for r in reports])

    # Summaries are recomputed from the file just written, making them pure
    # aggregations of the per-cohort table.
    _, rows = read_table3(table3_path)
    corr_path = out_dir / "summary_by_correlation.tsv"
    _write_tsv(corr_path, meta_line, _SUMMARY_HEADER, summarize_by_correlation(rows, config.alpha))
    expo_path = out_dir / "summary_by_exponentiality.tsv"
    _write_tsv(expo_path, meta_line, _SUMMARY_HEADER, summarize_by_exponentiality(rows, config.alpha))

    failures = [r for r in reports if r.error is not None]
    failures_path = None
    if failures:
        failures_path = out_dir / "failures.tsv"
        _write_tsv(failures_path, meta_line, ["cohort", "error"],
                   [[r.name, r.error or ""] for r in failures])

    succeeded = sum(1 for r in reports if r.error is None)
    exit_code = 0 if succeeded else 2
    diagnostic = "" if succeeded else "every cohort failed"
    return PipelineResult(reports, table3_path, corr_path, expo_path, failures_path,
                          exit_code, diagnostic)
