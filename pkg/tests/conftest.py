import numpy as np
import pytest

from timescales import SubjectRecord, validate_cohort

DATA_DIR = __file__.rsplit("/", 1)[0] + "/data"

# (id, entry, exit, event, z) — mixed ties on both scales, varied entries.
FIX5_ROWS = (
    ("A", 50.0, 60.0, True, 1.0),
    ("B", 52.0, 58.0, True, 0.2),
    ("C", 55.0, 61.0, False, -0.3),
    ("D", 48.0, 58.0, True, 0.8),
    ("E", 51.0, 63.0, True, -1.1),
)


@pytest.fixture(scope="session")
def fix5():
    records = [SubjectRecord(i, a0, a, ev, (z,)) for i, a0, a, ev, z in FIX5_ROWS]
    return validate_cohort(records, ("z",), name="fix5")


def make_random_cohort(seed, n=20, tie_grid=None, event_rate=0.6, n_covariates=1):
    """Small random cohort; tie_grid rounds times onto a lattice to force ties."""
    rng = np.random.default_rng(seed)
    records = []
    for i in range(n):
        entry = rng.uniform(40.0, 65.0)
        dur = rng.uniform(0.5, 20.0)
        if tie_grid:
            entry = round(entry / tie_grid) * tie_grid
            dur = max(tie_grid, round(dur / tie_grid) * tie_grid)
        covs = tuple(float(v) for v in rng.normal(0.0, 1.0, n_covariates))
        records.append(
            SubjectRecord(f"r{i:03d}", float(entry), float(entry + dur),
                          bool(rng.random() < event_rate), covs)
        )
    if not any(r.event for r in records):
        first = records[0]
        records[0] = SubjectRecord(first.id, first.entry_age, first.exit_age, True,
                                   first.covariates)
    names = tuple(f"z{j}" for j in range(n_covariates))
    return validate_cohort(records, names, name=f"rand{seed}")


def subjects_as_tuples(cohort, include_entry_age=False):
    """Oracle-side view: (id, entry, exit, event, x-vector)."""
    rows = []
    for s in cohort.subjects:
        x = list(s.covariates)
        if include_entry_age:
            x.append(s.entry_age)
        rows.append((s.id, s.entry_age, s.exit_age, s.event, x))
    return rows


_ACCEPTANCE_PREFIX = "tests/test_acceptance.py::test_criterion_"


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One PASS/FAIL line per acceptance criterion at the end of the run."""
    lines = []
    for status, word in (("passed", "PASS"), ("failed", "FAIL"), ("error", "FAIL")):
        for rep in terminalreporter.stats.get(status, []):
            nodeid = getattr(rep, "nodeid", "")
            if "test_acceptance.py::test_criterion_" not in nodeid:
                continue
            name = nodeid.split("::", 1)[1]
            tag = name.removeprefix("test_criterion_")
            num, _, slug = tag.partition("_")
            lines.append((int(num), f"ACCEPTANCE {int(num):2d} {word}  {slug.replace('_', ' ')}"))
    if lines:
        terminalreporter.write_sep("=", "acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
