import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from timescales import (
    SubjectRecord,
    TimeScale,
    build_risk_sets,
    pearson_correlation,
    validate_cohort,
)
from timescales.errors import CohortValidationError, DimensionMismatch, ZeroVariance

from conftest import make_random_cohort, subjects_as_tuples
import oracles


def rec(i, entry, exit_, event, z=0.0):
    return SubjectRecord(i, entry, exit_, event, (z,))


class TestValidateCohort:
    def test_two_valid_rows(self):
        cohort = validate_cohort(
            [rec("a", 50.0, 60.0, True), rec("b", 55.0, 58.0, False)], ("z",)
        )
        assert len(cohort) == 2
        assert cohort.n_events == 1

    def test_zero_follow_up_rejected(self):
        with pytest.raises(CohortValidationError) as exc:
            validate_cohort([rec("a", 60.0, 60.0, True)], ("z",))
        assert "non_positive_follow_up" in exc.value.kinds()

    def test_no_events_rejected(self):
        with pytest.raises(CohortValidationError) as exc:
            validate_cohort([rec("a", 50.0, 60.0, False), rec("b", 51.0, 62.0, False)], ("z",))
        assert exc.value.kinds() == {"no_events"}

    def test_duplicate_ids(self):
        with pytest.raises(CohortValidationError) as exc:
            validate_cohort([rec("a", 50.0, 60.0, True), rec("a", 51.0, 62.0, False)], ("z",))
        assert "duplicate_id" in exc.value.kinds()

    def test_ragged_covariates(self):
        bad = SubjectRecord("b", 50.0, 60.0, False, (1.0, 2.0))
        with pytest.raises(CohortValidationError) as exc:
            validate_cohort([rec("a", 50.0, 60.0, True), bad], ("z",))
        assert "ragged_covariates" in exc.value.kinds()

    def test_non_finite_values(self):
        with pytest.raises(CohortValidationError) as exc:
            validate_cohort(
                [rec("a", 50.0, 60.0, True), rec("b", 50.0, math.inf, False),
                 rec("c", 50.0, 60.0, False, math.nan)],
                ("z",),
            )
        issues = exc.value.issues
        assert {(i.kind, i.subject_id) for i in issues} == {
            ("non_finite_value", "b"),
            ("non_finite_value", "c"),
        }

    def test_every_violation_reported(self):
        with pytest.raises(CohortValidationError) as exc:
            validate_cohort(
                [rec("a", 60.0, 60.0, False), rec("a", -1.0, 5.0, False)], ("z",)
            )
        kinds = exc.value.kinds()
        assert {"non_positive_follow_up", "duplicate_id", "negative_entry_age", "no_events"} <= kinds


class TestBuildRiskSets:
    def test_all_events_time_on_study_sizes(self):
        cohort = validate_cohort(
            [rec("a", 50.0, 52.0, True), rec("b", 50.0, 55.0, True), rec("c", 50.0, 57.0, True)],
            ("z",),
        )
        rs = build_risk_sets(cohort, TimeScale.TIME_ON_STUDY)
        assert rs.event_times() == (2.0, 5.0, 7.0)
        assert [len(e.at_risk_ids) for e in rs.entries] == [3, 2, 1]

    def test_left_truncation_delayed_entry(self):
        cohort = validate_cohort(
            [rec("a", 50.0, 60.0, True), rec("b", 58.0, 65.0, True)], ("z",)
        )
        rs = build_risk_sets(cohort, TimeScale.AGE_LEFT_TRUNCATED)
        by_time = {e.event_time: e.at_risk_ids for e in rs.entries}
        assert by_time[60.0] == {"a", "b"}
        assert by_time[65.0] == {"b"}

    def test_unadjusted_vs_left_truncated_contrast(self):
        base = [rec("a", 50.0, 60.0, True), rec("b", 58.0, 65.0, True)]
        with_late = base + [rec("c", 70.0, 75.0, False)]
        cohort = validate_cohort(with_late, ("z",))
        unadj = {e.event_time: e.at_risk_ids for e in build_risk_sets(cohort, TimeScale.AGE_UNADJUSTED).entries}
        trunc = {e.event_time: e.at_risk_ids for e in build_risk_sets(cohort, TimeScale.AGE_LEFT_TRUNCATED).entries}
        assert "c" in unadj[60.0]
        assert "c" not in trunc[60.0]

    def test_censoring_tie_stays_at_risk(self):
        # b is censored at the same point a dies (both scales agree here).
        cohort = validate_cohort(
            [rec("a", 50.0, 60.0, True), rec("b", 50.0, 60.0, False)], ("z",)
        )
        for scale in TimeScale:
            rs = build_risk_sets(cohort, scale)
            assert rs.entries[0].at_risk_ids == {"a", "b"}

    def test_entry_exactly_at_event_age_not_at_risk(self):
        cohort = validate_cohort(
            [rec("a", 50.0, 60.0, True), rec("b", 60.0, 70.0, False)], ("z",)
        )
        rs = build_risk_sets(cohort, TimeScale.AGE_LEFT_TRUNCATED)
        assert rs.entries[0].at_risk_ids == {"a"}

    def test_ties_grouped_single_entry(self):
        cohort = validate_cohort(
            [rec("a", 50.0, 60.0, True), rec("b", 52.0, 60.0, True), rec("c", 51.0, 62.0, True)],
            ("z",),
        )
        rs = build_risk_sets(cohort, TimeScale.AGE_UNADJUSTED)
        assert rs.event_times() == (60.0, 62.0)
        assert rs.entries[0].event_subject_ids == {"a", "b"}

    @pytest.mark.parametrize("scale", list(TimeScale))
    @pytest.mark.parametrize("seed", range(6))
    def test_matches_definitional_oracle(self, scale, seed):
        cohort = make_random_cohort(seed, n=17, tie_grid=0.5 if seed % 2 else None)
        rs = build_risk_sets(cohort, scale)
        expected = oracles.risk_sets(subjects_as_tuples(cohort), scale.value)
        assert len(rs) == len(expected)
        for entry, (tau, dead, risk) in zip(rs.entries, expected):
            assert entry.event_time == tau
            assert entry.event_subject_ids == dead
            assert entry.at_risk_ids == risk


def _cohort_strategy():
    subject = st.tuples(
        st.floats(min_value=0.0, max_value=80.0, allow_nan=False),
        st.floats(min_value=0.5, max_value=30.0, allow_nan=False),
        st.booleans(),
    )
    return st.lists(subject, min_size=2, max_size=14)


def _to_cohort(rows):
    records = [
        SubjectRecord(f"h{i:03d}", entry, entry + dur, event, (float(i % 3),))
        for i, (entry, dur, event) in enumerate(rows)
    ]
    if not any(r.event for r in records):
        records[0] = dataclasses.replace(records[0], event=True)
    return validate_cohort(records, ("z",), name="hyp")


class TestRiskSetProperties:
    @given(_cohort_strategy())
    @settings(max_examples=60, deadline=None)
    def test_nesting_under_time_on_study(self, rows):
        rs = build_risk_sets(_to_cohort(rows), TimeScale.TIME_ON_STUDY)
        for earlier, later in zip(rs.entries, rs.entries[1:]):
            assert later.at_risk_ids <= earlier.at_risk_ids

    @given(_cohort_strategy())
    @settings(max_examples=60, deadline=None)
    def test_left_truncated_subset_of_unadjusted(self, rows):
        cohort = _to_cohort(rows)
        unadj = build_risk_sets(cohort, TimeScale.AGE_UNADJUSTED)
        trunc = build_risk_sets(cohort, TimeScale.AGE_LEFT_TRUNCATED)
        assert unadj.event_times() == trunc.event_times()
        for u, t in zip(unadj.entries, trunc.entries):
            assert t.at_risk_ids <= u.at_risk_ids

    @given(_cohort_strategy(), st.randoms(use_true_random=False))
    @settings(max_examples=40, deadline=None)
    def test_permutation_invariance(self, rows, shuffler):
        cohort = _to_cohort(rows)
        shuffled = list(cohort.subjects)
        shuffler.shuffle(shuffled)
        permuted = validate_cohort(shuffled, cohort.covariate_names, name="perm")
        for scale in TimeScale:
            assert build_risk_sets(cohort, scale).entries == build_risk_sets(permuted, scale).entries

    def test_nesting_can_fail_under_left_truncation(self):
        # Late entrant joins the risk set after an earlier event age.
        cohort = validate_cohort(
            [rec("a", 40.0, 50.0, True), rec("b", 55.0, 60.0, True)], ("z",)
        )
        rs = build_risk_sets(cohort, TimeScale.AGE_LEFT_TRUNCATED)
        first, second = rs.entries
        assert not (second.at_risk_ids <= first.at_risk_ids)

    @given(_cohort_strategy(), st.floats(min_value=20.0, max_value=60.0, allow_nan=False))
    @settings(max_examples=40, deadline=None)
    def test_equal_entry_age_shift_property(self, rows, c):
        records = [
            SubjectRecord(f"h{i:03d}", c, c + dur, event, (0.0,))
            for i, (_, dur, event) in enumerate(rows)
        ]
        if not any(r.event for r in records):
            records[0] = dataclasses.replace(records[0], event=True)
        cohort = validate_cohort(records, ("z",), name="const-entry")
        trunc = build_risk_sets(cohort, TimeScale.AGE_LEFT_TRUNCATED)
        tos = build_risk_sets(cohort, TimeScale.TIME_ON_STUDY)
        assert len(trunc) == len(tos)
        for te, se in zip(trunc.entries, tos.entries):
            assert te.event_time == pytest.approx(se.event_time + c, abs=1e-9)
            assert te.event_subject_ids == se.event_subject_ids
            assert te.at_risk_ids == se.at_risk_ids


class TestPearsonCorrelation:
    def test_identity(self):
        x = np.array([1.0, 2.0, 5.0, 7.0])
        assert pearson_correlation(x, x) == pytest.approx(1.0, abs=1e-14)

    def test_exact_antisymmetry(self):
        assert pearson_correlation((1.0, 2.0, 3.0), (3.0, 2.0, 1.0)) == pytest.approx(-1.0, abs=1e-14)

    def test_matches_numpy(self):
        rng = np.random.default_rng(5)
        x = rng.normal(size=40)
        y = 0.3 * x + rng.normal(size=40)
        assert pearson_correlation(x, y) == pytest.approx(np.corrcoef(x, y)[0, 1], abs=1e-12)

    def test_zero_variance(self):
        with pytest.raises(ZeroVariance):
            pearson_correlation((1.0, 1.0, 1.0), (1.0, 2.0, 3.0))

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            pearson_correlation((1.0, 2.0), (1.0, 2.0, 3.0))
        with pytest.raises(DimensionMismatch):
            pearson_correlation((1.0,), (2.0,))

    def test_range_clamped(self):
        rng = np.random.default_rng(11)
        for _ in range(25):
            x = rng.normal(size=6)
            y = rng.normal(size=6)
            assert -1.0 <= pearson_correlation(x, y) <= 1.0
