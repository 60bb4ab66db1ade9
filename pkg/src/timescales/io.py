"""Cohort CSV ingestion/emission and hazard-curve TSV export.

Cohort CSV format: header ``id,entry_age,exit_age,event,<covariate names...>``,
event encoded as 0/1, UTF-8, comma-separated. A missing or extra field on any
row is a hard error; nothing is imputed or rounded.
"""

from __future__ import annotations

import csv
from pathlib import Path

from .cohort import Cohort, SubjectRecord, validate_cohort
from .errors import CohortValidationError, ValidationIssue

_FIXED_HEADER = ("id", "entry_age", "exit_age", "event")


def read_cohort_csv(path: str | Path, name: str | None = None) -> Cohort:
    """Parse and validate one cohort CSV. The cohort name defaults to the file stem."""
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise CohortValidationError([ValidationIssue("format", detail=f"{path}: empty file")])
        if len(header) < 5 or tuple(header[:4]) != _FIXED_HEADER:
            raise CohortValidationError(
                [ValidationIssue("format", detail=f"{path}: header must start with {','.join(_FIXED_HEADER)} "
                                                  "and name at least one covariate")]
            )
        covariate_names = tuple(header[4:])
        records: list[SubjectRecord] = []
        issues: list[ValidationIssue] = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header) or any(cell == "" for cell in row):
                issues.append(ValidationIssue("format", subject_id=row[0] if row else None,
                                              detail=f"line {lineno}: expected {len(header)} non-empty fields"))
                continue
            sid = row[0]
            if row[3] not in ("0", "1"):
                issues.append(ValidationIssue("format", subject_id=sid, field="event",
                                              detail=f"line {lineno}: event must be 0 or 1"))
                continue
            try:
                entry = float(row[1])
                exit_ = float(row[2])
                covs = tuple(float(cell) for cell in row[4:])
            except ValueError:
                issues.append(ValidationIssue("non_finite_value", subject_id=sid,
                                              detail=f"line {lineno}: unparseable number"))
                continue
            records.append(SubjectRecord(id=sid, entry_age=entry, exit_age=exit_,
                                         event=row[3] == "1", covariates=covs))
    if issues:
        raise CohortValidationError(issues)
    return validate_cohort(records, covariate_names, name=name or path.stem)


def write_cohort_csv(cohort: Cohort, path: str | Path) -> None:
    """Write a cohort in the standard CSV format; floats round-trip exactly."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(list(_FIXED_HEADER) + list(cohort.covariate_names))
        for s in cohort.subjects:
            writer.writerow([s.id, repr(float(s.entry_age)), repr(float(s.exit_age)),
                             "1" if s.event else "0", *[repr(float(v)) for v in s.covariates]])


def write_hazard_tsv(cumhaz, cohort_name: str, beta, path: str | Path) -> None:
    """Write a cumulative-hazard curve as two-column TSV with a comment header.

    The header line carries the scale, cohort name, and fitted coefficients so
    the file is a self-describing plot-data feed.
    """
    path = Path(path)
    beta_txt = ",".join(repr(float(b)) for b in beta)
    with path.open("w", encoding="utf-8") as handle:
        handle.write(f"# cohort={cohort_name}\tscale={cumhaz.scale.value}\tbeta={beta_txt}\n")
        handle.write("time\tcumulative_hazard\n")
        for t, v in cumhaz.points:
            handle.write(f"{t!r}\t{v!r}\n")
