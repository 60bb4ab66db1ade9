"""Command-line interface: fit, compare, hazard, simulate, pipeline."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .baseline import breslow_cumulative_hazard
from .bootstrap import compare_models
from .coxfit import FitOptions, fit_cox, model_preset
from .errors import PipelineConfigError
from .io import read_cohort_csv, write_cohort_csv, write_hazard_tsv
from .pipeline import ALL_MODELS, ALL_PAIRS, PipelineConfig, run_pipeline
from .simulate import Gompertz, Weibull, default_params, generate_cohort


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--ties", choices=("breslow", "efron"), default="breslow")
    parser.add_argument("--seed", type=int, default=0)


def _generator_params(args, n_subjects: int):
    if args.baseline == "gompertz":
        baseline = Gompertz(c=args.gompertz_c, psi=args.gompertz_psi)
    else:
        baseline = Weibull(scale_age=args.weibull_scale, shape=args.weibull_shape)
    return default_params(
        n=n_subjects,
        baseline=baseline,
        beta_true=args.beta_true,
        rho=args.rho,
        follow_up_max=args.follow_up,
    )


def _add_generator_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--n-subjects", type=int, default=1000)
    parser.add_argument("--baseline", choices=("gompertz", "weibull"), default="gompertz")
    parser.add_argument("--gompertz-c", type=float, default=2.5e-6)
    parser.add_argument("--gompertz-psi", type=float, default=0.085)
    parser.add_argument("--weibull-scale", type=float, default=80.0)
    parser.add_argument("--weibull-shape", type=float, default=3.0)
    parser.add_argument("--beta-true", type=float, default=0.02)
    parser.add_argument("--rho", type=float, default=0.3)
    parser.add_argument("--follow-up", type=float, default=20.0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="timescales",
        description="Cox proportional-hazards analysis under alternative time scales",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_fit = sub.add_parser("fit", help="fit one model on one cohort CSV")
    p_fit.add_argument("--input", required=True)
    p_fit.add_argument("--model", choices=ALL_MODELS, required=True)
    _add_common(p_fit)

    p_cmp = sub.add_parser("compare", help="paired-bootstrap comparison of two models")
    p_cmp.add_argument("--input", required=True)
    p_cmp.add_argument("--model-a", choices=ALL_MODELS, required=True)
    p_cmp.add_argument("--model-b", choices=ALL_MODELS, required=True)
    p_cmp.add_argument("--replicates", type=int, default=1000)
    _add_common(p_cmp)

    p_haz = sub.add_parser("hazard", help="emit the Breslow cumulative-hazard TSV")
    p_haz.add_argument("--input", required=True)
    p_haz.add_argument("--model", choices=ALL_MODELS, default="m3")
    p_haz.add_argument("--out", help="output file (default: stdout)")
    _add_common(p_haz)

    p_sim = sub.add_parser("simulate", help="write synthetic cohort CSVs")
    p_sim.add_argument("--out", required=True)
    p_sim.add_argument("--n-cohorts", type=int, default=1)
    _add_generator_flags(p_sim)
    _add_common(p_sim)

    p_pipe = sub.add_parser("pipeline", help="full batch: fit, compare, summarize")
    src = p_pipe.add_mutually_exclusive_group(required=True)
    src.add_argument("--input", action="append", help="cohort CSV file or directory (repeatable)")
    src.add_argument("--simulate", type=int, help="generate this many synthetic cohorts instead")
    p_pipe.add_argument("--out", required=True)
    p_pipe.add_argument("--models", default="m1,m2,m3")
    p_pipe.add_argument("--replicates", type=int, default=1000)
    p_pipe.add_argument("--expo-threshold", type=float, default=0.99)
    p_pipe.add_argument("--alpha", type=float, default=0.05)
    p_pipe.add_argument("--hazard-model", choices=ALL_MODELS, default="m3")
    p_pipe.add_argument("--workers", type=int, default=1)
    _add_generator_flags(p_pipe)
    _add_common(p_pipe)
    return parser


def _cmd_fit(args) -> int:
    cohort = read_cohort_csv(args.input)
    spec = model_preset(args.model, len(cohort.covariate_names))
    fit = fit_cox(cohort, spec, FitOptions(ties=args.ties))
    names = spec.parameter_names(cohort.covariate_names)
    print(f"cohort {cohort.name}: n={len(cohort)} events={cohort.n_events} "
          f"model={args.model} scale={spec.scale} ties={args.ties}")
    print(f"log_likelihood={fit.log_likelihood!r} iterations={fit.iterations} "
          f"converged={fit.converged}")
    for name, beta, se in zip(names, fit.beta, fit.standard_errors):
        print(f"{name}\tbeta={float(beta)!r}\tse={float(se)!r}")
    return 0


def _cmd_compare(args) -> int:
    cohort = read_cohort_csv(args.input)
    k = len(cohort.covariate_names)
    result = compare_models(
        cohort,
        model_preset(args.model_a, k),
        model_preset(args.model_b, k),
        replicates=args.replicates,
        seed=args.seed,
        fit_options=FitOptions(ties=args.ties),
    )
    print(f"cohort {cohort.name}: {args.model_a} vs {args.model_b} "
          f"(replicates={result.replicates_used}/{result.replicates_requested}, seed={result.seed})")
    print(f"beta_a={result.beta_a!r}\tbeta_b={result.beta_b!r}")
    print(f"difference={result.difference!r}\tbootstrap_se={result.bootstrap_se!r}")
    print(f"z={result.z_statistic!r}\tp_value={result.p_value!r}")
    return 0


def _cmd_hazard(args) -> int:
    cohort = read_cohort_csv(args.input)
    spec = model_preset(args.model, len(cohort.covariate_names))
    fit = fit_cox(cohort, spec, FitOptions(ties=args.ties))
    cumhaz = breslow_cumulative_hazard(cohort, fit, spec)
    if args.out:
        write_hazard_tsv(cumhaz, cohort.name, fit.beta, args.out)
    else:
        beta_txt = ",".join(repr(float(b)) for b in fit.beta)
        print(f"# cohort={cohort.name}\tscale={cumhaz.scale.value}\tbeta={beta_txt}")
        print("time\tcumulative_hazard")
        for t, v in cumhaz.points:
            print(f"{t!r}\t{v!r}")
    return 0


def _cmd_simulate(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    params = _generator_params(args, args.n_subjects)
    width = max(3, len(str(max(args.n_cohorts - 1, 0))))
    for i in range(args.n_cohorts):
        name = f"sim{i:0{width}d}"
        cohort = generate_cohort(params, seed=args.seed + i, name=name)
        write_cohort_csv(cohort, out / f"{name}.csv")
    print(f"wrote {args.n_cohorts} cohort(s) to {out}")
    return 0


def _cmd_pipeline(args) -> int:
    models = tuple(m.strip() for m in args.models.split(",") if m.strip())
    comparisons = tuple(pair for pair in ALL_PAIRS if pair[0] in models and pair[1] in models)
    config = PipelineConfig(
        out_dir=args.out,
        inputs=tuple(args.input) if args.input else (),
        simulate=args.simulate or 0,
        sim_params=_generator_params(args, args.n_subjects) if args.simulate else None,
        models=models,
        comparisons=comparisons,
        replicates=args.replicates,
        seed=args.seed,
        ties=args.ties,
        expo_threshold=args.expo_threshold,
        alpha=args.alpha,
        hazard_model=args.hazard_model,
        workers=args.workers,
    )
    result = run_pipeline(config)
    if result.diagnostic:
        print(result.diagnostic, file=sys.stderr)
    else:
        succeeded = sum(1 for r in result.reports if r.error is None)
        print(f"processed {len(result.reports)} cohort(s), {succeeded} succeeded; "
              f"reports in {args.out}")
    return result.exit_code


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "fit": _cmd_fit,
        "compare": _cmd_compare,
        "hazard": _cmd_hazard,
        "simulate": _cmd_simulate,
        "pipeline": _cmd_pipeline,
    }
    try:
        return handlers[args.command](args)
    except PipelineConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
