import math
from pathlib import Path

import pytest

import timescales as ts
from timescales.errors import PipelineConfigError
from timescales.pipeline import (
    TABLE3_COLUMNS,
    PipelineConfig,
    derive_seed,
    read_table3,
    run_pipeline,
    summarize_by_correlation,
    summarize_by_exponentiality,
)


@pytest.fixture(scope="module")
def cohort_dir(tmp_path_factory):
    folder = tmp_path_factory.mktemp("cohorts")
    params = ts.default_params(n=120, rho=0.35)
    for i in range(3):
        cohort = ts.generate_cohort(params, seed=10 + i, name=f"c{i}")
        ts.write_cohort_csv(cohort, folder / f"c{i}.csv")
    return folder


def small_config(out, cohort_dir, **kw):
    defaults = dict(out_dir=str(out), inputs=(str(cohort_dir),), replicates=12,
                    seed=5, workers=1)
    defaults.update(kw)
    return PipelineConfig(**defaults)


class TestConfigValidation:
    def test_needs_exactly_one_source(self, tmp_path):
        with pytest.raises(PipelineConfigError):
            PipelineConfig(out_dir=str(tmp_path)).validate()
        with pytest.raises(PipelineConfigError):
            PipelineConfig(out_dir=str(tmp_path), inputs=("x",), simulate=3).validate()

    def test_comparisons_must_reference_models(self, tmp_path):
        cfg = PipelineConfig(out_dir=str(tmp_path), inputs=("x",), models=("m1", "m2"),
                             comparisons=(("m1", "m3"),), hazard_model="m1")
        with pytest.raises(PipelineConfigError):
            cfg.validate()

    def test_replicates_minimum(self, tmp_path):
        cfg = PipelineConfig(out_dir=str(tmp_path), inputs=("x",), replicates=1)
        with pytest.raises(PipelineConfigError):
            cfg.validate()

    def test_hazard_model_must_be_requested(self, tmp_path):
        cfg = PipelineConfig(out_dir=str(tmp_path), inputs=("x",), models=("m1",),
                             comparisons=(), hazard_model="m3")
        with pytest.raises(PipelineConfigError):
            cfg.validate()

    def test_content_hash_ignores_out_dir_and_workers(self, tmp_path):
        a = PipelineConfig(out_dir="one", inputs=("x",), workers=1)
        b = PipelineConfig(out_dir="two", inputs=("x",), workers=8)
        assert a.content_hash() == b.content_hash()
        c = PipelineConfig(out_dir="one", inputs=("x",), seed=9)
        assert a.content_hash() != c.content_hash()


def test_derive_seed_stable():
    assert derive_seed(3, "c0", "bootstrap") == derive_seed(3, "c0", "bootstrap")
    assert derive_seed(3, "c0", "bootstrap") != derive_seed(3, "c1", "bootstrap")
    assert derive_seed(3, "c0", "bootstrap") != derive_seed(4, "c0", "bootstrap")


class TestRunPipeline:
    def test_end_to_end_outputs(self, tmp_path, cohort_dir):
        result = run_pipeline(small_config(tmp_path / "out", cohort_dir))
        assert result.exit_code == 0
        assert result.failures_path is None
        meta, rows = read_table3(result.table3_path)
        assert meta["seed"] == "5"
        assert len(rows) == 3
        header = result.table3_path.read_text().splitlines()[1].split("\t")
        assert tuple(header) == TABLE3_COLUMNS
        for row in rows:
            assert row["beta2"] < row["beta3"]  # unadjusted age attenuates
            assert 0.0 <= row["p12"] <= 1.0
            assert row["exponential"] in (0.0, 1.0)
        hazards = sorted((tmp_path / "out" / "hazards").glob("*.tsv"))
        assert [h.stem for h in hazards] == ["c0", "c1", "c2"]

    def test_reruns_byte_identical(self, tmp_path, cohort_dir):
        out1, out2 = tmp_path / "o1", tmp_path / "o2"
        run_pipeline(small_config(out1, cohort_dir))
        run_pipeline(small_config(out2, cohort_dir))
        files1 = sorted(p.relative_to(out1) for p in out1.rglob("*.tsv"))
        files2 = sorted(p.relative_to(out2) for p in out2.rglob("*.tsv"))
        assert files1 == files2
        for rel in files1:
            assert (out1 / rel).read_bytes() == (out2 / rel).read_bytes()

    def test_worker_count_does_not_change_output(self, tmp_path, cohort_dir):
        out1, out2 = tmp_path / "w1", tmp_path / "w2"
        run_pipeline(small_config(out1, cohort_dir, workers=1))
        run_pipeline(small_config(out2, cohort_dir, workers=2))
        for rel in sorted(p.relative_to(out1) for p in out1.rglob("*.tsv")):
            assert (out1 / rel).read_bytes() == (out2 / rel).read_bytes()

    def test_summaries_recompute_from_table3(self, tmp_path, cohort_dir):
        out = tmp_path / "sum"
        result = run_pipeline(small_config(out, cohort_dir))
        _, rows = read_table3(result.table3_path)
        corr_lines = result.summary_correlation_path.read_text().splitlines()[2:]
        expected = ["\t".join(r) for r in summarize_by_correlation(rows, 0.05)]
        assert corr_lines == expected
        expo_lines = result.summary_exponentiality_path.read_text().splitlines()[2:]
        assert expo_lines == ["\t".join(r) for r in summarize_by_exponentiality(rows, 0.05)]
        # Total row counts every cohort exactly once per comparison
        total = corr_lines[-1].split("\t")
        assert total[0] == "Total"
        assert int(total[1]) + int(total[2]) == len(rows)

    def test_simulate_mode(self, tmp_path):
        cfg = PipelineConfig(out_dir=str(tmp_path / "sim"), simulate=2,
                             sim_params=ts.default_params(n=100), replicates=8, seed=1)
        result = run_pipeline(cfg)
        assert result.exit_code == 0
        _, rows = read_table3(result.table3_path)
        assert [r["cohort"] for r in rows] == ["sim000", "sim001"]

    def test_failed_cohort_reported_in_row(self, tmp_path, cohort_dir):
        bad_dir = tmp_path / "mixed"
        bad_dir.mkdir()
        for f in Path(cohort_dir).glob("*.csv"):
            (bad_dir / f.name).write_bytes(f.read_bytes())
        (bad_dir / "broken.csv").write_text(
            "id,entry_age,exit_age,event,sbp\nao,50,60,1,\n", encoding="utf-8"
        )
        out = tmp_path / "mix-out"
        result = run_pipeline(small_config(out, bad_dir))
        assert result.exit_code == 0
        _, rows = read_table3(result.table3_path)
        broken = next(r for r in rows if r["cohort"] == "broken")
        assert math.isnan(broken["beta1"]) and math.isnan(broken["corr"])
        assert result.failures_path is not None
        assert "broken" in result.failures_path.read_text()

    def test_all_failed_exit_2(self, tmp_path):
        bad_dir = tmp_path / "allbad"
        bad_dir.mkdir()
        (bad_dir / "b.csv").write_text("id,entry_age,exit_age,event,sbp\n", encoding="utf-8")
        result = run_pipeline(PipelineConfig(out_dir=str(tmp_path / "ab-out"),
                                             inputs=(str(bad_dir),), replicates=5))
        assert result.exit_code == 2

    def test_empty_input_exit_2(self, tmp_path):
        empty = tmp_path / "none"
        empty.mkdir()
        result = run_pipeline(PipelineConfig(out_dir=str(tmp_path / "e-out"),
                                             inputs=(str(empty),), replicates=5))
        assert result.exit_code == 2
        assert result.diagnostic

    def test_duplicate_stems_rejected(self, tmp_path, cohort_dir):
        cfg = small_config(tmp_path / "dup", cohort_dir,
                           inputs=(str(cohort_dir), str(cohort_dir)))
        with pytest.raises(PipelineConfigError):
            run_pipeline(cfg)

    def test_model_subset(self, tmp_path, cohort_dir):
        out = tmp_path / "subset"
        cfg = small_config(out, cohort_dir, models=("m2", "m3"),
                           comparisons=(("m2", "m3"),), hazard_model="m3")
        result = run_pipeline(cfg)
        assert result.exit_code == 0
        _, rows = read_table3(result.table3_path)
        for row in rows:
            assert math.isnan(row["beta1"]) and math.isnan(row["p12"]) and math.isnan(row["p13"])
            assert not math.isnan(row["p23"])
