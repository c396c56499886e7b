"""Batch command-line front end.

Subcommands: ``synth`` (generate datasets), ``train``, ``evaluate``, ``cv``
(cross-validate the trade-off), ``compare`` (four-algorithm benchmark on a
shared split). Every command writes a run manifest (``<output>.manifest.json``)
holding the resolved parameters, dataset hashes and timing; model and report
files themselves contain nothing non-deterministic, so a re-run with the same
manifest reproduces them byte for byte.

Exit codes: 0 success, 2 usage error, 3 data error, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
import warnings
from contextlib import nullcontext

from . import __version__
from .data_io import (
    load_dataset,
    load_model,
    save_binary,
    save_model,
    save_text,
)
from .errors import (
    ConfigurationError,
    DataFormatError,
    DimensionMismatchError,
    DomainError,
    GcmError,
    NumericalError,
)
from .evaluation import (
    Algorithm,
    CvPlan,
    DEFAULT_LAMBDA_GRID,
    compare_algorithms,
    cross_validate,
    evaluate_model,
    score_groups,
    split_groups,
    write_groups_csv,
    write_report_csv,
)
from .expansion import AffineScaler, ExpansionSpec, expand
from .generator import GeneratorSpec, PRESETS, generate
from .model import DEFAULT_DELTA, DEFAULT_EPSILON, Hyperparams
from .solver import SolverConfig
from .baselines import MiSvmConfig, train_mi_svm
from .train import train_gcm, train_per_candidate

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_NUMERICAL = 4


def _lambda_arg(text: str) -> float:
    value = float(text)
    if not 0.0 <= value <= 1.0:
        raise argparse.ArgumentTypeError(f"lambda must be in [0, 1], got {text}")
    return value


def _positive_float(text: str) -> float:
    value = float(text)
    if not value > 0.0:
        raise argparse.ArgumentTypeError(f"must be > 0, got {text}")
    return value


def _nonneg_float(text: str) -> float:
    value = float(text)
    if value < 0.0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {text}")
    return value


def _folds_arg(text: str) -> int:
    value = int(text)
    if value < 2:
        raise argparse.ArgumentTypeError(f"folds must be >= 2, got {text}")
    return value


def _grid_arg(text: str) -> tuple[float, ...]:
    try:
        values = tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc))
    if not values:
        raise argparse.ArgumentTypeError("lambda grid must not be empty")
    for v in values:
        if not 0.0 < v < 1.0:
            raise argparse.ArgumentTypeError(
                f"grid values must be in (0, 1), got {v}"
            )
    return values


def _sha256(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _write_manifest(output_path, command: str, params: dict,
                    dataset_paths: list, started: float,
                    extra: dict | None = None, threads: int = 1):
    manifest = {
        "command": command,
        "package_version": __version__,
        "parameters": params,
        "threads": threads,
        "dataset_sha256": {str(p): _sha256(p) for p in dataset_paths},
        "wall_clock_seconds": time.perf_counter() - started,
    }
    if extra:
        manifest.update(extra)
    path = f"{output_path}.manifest.json"
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(manifest, fh, indent=1, default=str)
        fh.write("\n")


def _solver_config(args) -> SolverConfig:
    return SolverConfig(
        memory_pairs=args.memory_pairs,
        max_iterations=args.max_iterations,
        grad_inf_tolerance=args.grad_tol,
        rel_obj_tolerance=args.rel_obj_tol,
        armijo_c1=args.armijo_c1,
        backtrack_factor=args.backtrack_factor,
        max_backtracks=args.max_backtracks,
        initial_step=args.initial_step,
    )


def _add_solver_flags(parser):
    group = parser.add_argument_group("solver overrides")
    group.add_argument("--memory-pairs", type=int, default=10)
    group.add_argument("--max-iterations", type=int, default=1000)
    group.add_argument("--grad-tol", type=_positive_float, default=1e-6)
    group.add_argument("--rel-obj-tol", type=_nonneg_float, default=1e-10)
    group.add_argument("--armijo-c1", type=float, default=1e-4)
    group.add_argument("--backtrack-factor", type=float, default=0.5)
    group.add_argument("--max-backtracks", type=int, default=40)
    group.add_argument("--initial-step", type=_positive_float, default=1.0)


def _add_common_hyper_flags(parser):
    parser.add_argument("--lambda", dest="lam", type=_lambda_arg, required=True,
                        help="trade-off between regularization and loss, in [0, 1]")
    parser.add_argument("--epsilon", type=_positive_float, default=DEFAULT_EPSILON,
                        help="Huber width for the weight penalty")
    parser.add_argument("--delta", type=_nonneg_float, default=DEFAULT_DELTA,
                        help="smoothed-hinge width; 0 means the exact hinge")


def cmd_synth(args) -> int:
    started = time.perf_counter()
    if args.preset:
        spec = PRESETS[args.preset](seed=args.seed)
        overrides = {}
        for name in ("n_pos_groups", "n_neg_groups", "group_size_min",
                     "group_size_max", "d", "key_shift", "noise_scale",
                     "outlier_rate", "outlier_shift", "decoy_shift"):
            value = getattr(args, name)
            if value is not None:
                overrides[name] = value
        if overrides:
            from dataclasses import replace
            spec = replace(spec, **overrides)
    else:
        spec = GeneratorSpec(
            seed=args.seed,
            n_pos_groups=args.n_pos_groups if args.n_pos_groups is not None else 40,
            n_neg_groups=args.n_neg_groups if args.n_neg_groups is not None else 200,
            group_size_min=args.group_size_min or 150,
            group_size_max=args.group_size_max or 250,
            d=args.d or 13,
            key_shift=args.key_shift if args.key_shift is not None else 3.0,
            noise_scale=args.noise_scale if args.noise_scale is not None else 1.0,
            outlier_rate=args.outlier_rate or 0.0,
            outlier_shift=args.outlier_shift or 0.0,
            decoy_shift=args.decoy_shift or 0.0,
        )
    data = generate(spec)
    if args.format == "binary":
        save_binary(data, args.out)
    else:
        save_text(data, args.out)
    _write_manifest(
        args.out, "synth",
        {"spec": spec.__dict__, "format": args.format, "out": str(args.out)},
        [args.out], started,
        extra={"seed": spec.seed}, threads=args.threads,
    )
    print(f"wrote {data.n_rows} rows / {data.n_groups} groups to {args.out}")
    return EXIT_OK


def cmd_train(args) -> int:
    started = time.perf_counter()
    data = load_dataset(args.data)
    solver_cfg = _solver_config(args)
    hp = Hyperparams(args.lam, args.epsilon, args.delta)

    expansion = None
    input_d = data.d
    if args.expand_degree is not None:
        expansion = ExpansionSpec(degree=args.expand_degree)
        data = expand(data, expansion)
    scaler = None
    if args.standardize:
        scaler = AffineScaler.fit(data)
        data = scaler.transform(data)

    extra: dict = {}
    if args.algo == "misvm":
        c = args.misvm_c
        if c is None:
            if not 0.0 < args.lam < 1.0:
                raise ConfigurationError(
                    "misvm needs lambda in (0, 1) to derive C, or pass --misvm-c"
                )
            c = args.lam / (1.0 - args.lam)
        cfg = MiSvmConfig(c_tradeoff=c, inner_delta=args.misvm_delta,
                          max_outer_iterations=args.misvm_max_outer,
                          inner_solver=solver_cfg)
        model, selector, outer = train_mi_svm(data, cfg)
        extra = {"outer_iterations": outer, "c_tradeoff": c,
                 "termination_reason": "SelectorFixedPoint"
                 if outer < cfg.max_outer_iterations else "MaxOuterIterations"}
    elif args.algo == "gcm":
        model, trace = train_gcm(data, hp, solver_cfg)
        extra = {"iterations": trace.iterations,
                 "termination_reason": trace.termination_reason.value}
    else:  # gcm-nogroup and svm share the per-candidate objective
        model, trace = train_per_candidate(data, hp, solver_cfg)
        extra = {"iterations": trace.iterations,
                 "termination_reason": trace.termination_reason.value}

    provenance = {
        "algo": args.algo,
        "dataset": str(args.data),
        "dataset_sha256": _sha256(args.data),
        "solver": solver_cfg.__dict__,
        "standardize": bool(args.standardize),
        **extra,
    }
    save_model(args.model_out, model, hp, expansion=expansion, input_d=input_d,
               scaler=scaler, provenance=provenance)
    params = {
        "algo": args.algo, "lambda": args.lam, "epsilon": args.epsilon,
        "delta": args.delta, "expand_degree": args.expand_degree,
        "standardize": bool(args.standardize), "solver": solver_cfg.__dict__,
        "data": str(args.data), "model_out": str(args.model_out),
    }
    if args.algo == "misvm":
        params.update({"misvm_c": args.misvm_c, "misvm_delta": args.misvm_delta,
                       "misvm_max_outer": args.misvm_max_outer})
    _write_manifest(args.model_out, "train", params, [args.data], started,
                    extra=extra, threads=args.threads)
    print(f"trained {args.algo} model -> {args.model_out} "
          f"({extra.get('termination_reason')})")
    return EXIT_OK


def _apply_saved_pipeline(saved, data):
    if saved.expansion is not None:
        if data.d != saved.input_d:
            raise DimensionMismatchError(saved.input_d, data.d, "expansion input")
        data = expand(data, saved.expansion)
    if saved.scaler is not None:
        data = saved.scaler.transform(data)
    if data.d != saved.model.d:
        raise DimensionMismatchError(saved.model.d, data.d, "model input")
    return data


def cmd_evaluate(args) -> int:
    started = time.perf_counter()
    saved = load_model(args.model)
    data = _apply_saved_pipeline(saved, load_dataset(args.data))
    report = evaluate_model(saved.model, data)
    write_report_csv(report, args.report_out)
    groups_out = args.groups_out or f"{args.report_out}.groups.csv"
    write_groups_csv(score_groups(saved.model, data), groups_out)
    _write_manifest(
        args.report_out, "evaluate",
        {"model": str(args.model), "data": str(args.data),
         "report_out": str(args.report_out), "groups_out": str(groups_out)},
        [args.data, args.model], started,
        extra={"candidate_auc": report.candidate_auc,
               "group_auc": report.group_auc},
        threads=args.threads,
    )
    print(f"candidate_auc={report.candidate_auc!r} group_auc={report.group_auc!r}")
    return EXIT_OK


def cmd_cv(args) -> int:
    started = time.perf_counter()
    data = load_dataset(args.data)
    plan = CvPlan(folds=args.folds, lambda_grid=args.lambda_grid, seed=args.seed)
    best_lam, results = cross_validate(
        data, Algorithm(args.algo), plan,
        epsilon=args.epsilon, delta=args.delta,
        solver_cfg=_solver_config(args), misvm_max_outer=args.misvm_max_outer,
    )
    lines = ["lambda,mean_group_auc,mean_candidate_auc,folds_used"]
    for r in results:
        lines.append(f"{r.lam!r},{r.mean_group_auc!r},"
                     f"{r.mean_candidate_auc!r},{r.folds_used}")
    lines.append(f"# best_lambda={best_lam!r}")
    with open(args.report_out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    _write_manifest(
        args.report_out, "cv",
        {"algo": args.algo, "folds": args.folds,
         "lambda_grid": list(args.lambda_grid), "seed": args.seed,
         "epsilon": args.epsilon, "delta": args.delta,
         "misvm_max_outer": args.misvm_max_outer, "data": str(args.data),
         "report_out": str(args.report_out)},
        [args.data], started,
        extra={"best_lambda": best_lam, "seed": args.seed},
        threads=args.threads,
    )
    print(f"best_lambda={best_lam!r}")
    return EXIT_OK


def cmd_compare(args) -> int:
    started = time.perf_counter()
    data = load_dataset(args.data)
    datasets = [args.data]
    if args.test_data:
        train_data, test_data = data, load_dataset(args.test_data)
        datasets.append(args.test_data)
    else:
        train_data, test_data = split_groups(data, args.split_fraction, args.seed)
    reports = compare_algorithms(
        train_data, test_data, args.lam,
        epsilon=args.epsilon, delta=args.delta,
        solver_cfg=_solver_config(args), misvm_max_outer=args.misvm_max_outer,
    )
    lines = ["algo,candidate_auc,group_auc"]
    for algo in Algorithm:
        rep = reports[algo]
        lines.append(f"{algo.value},{rep.candidate_auc!r},{rep.group_auc!r}")
    with open(args.report_out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    _write_manifest(
        args.report_out, "compare",
        {"lambda": args.lam, "epsilon": args.epsilon, "delta": args.delta,
         "split_fraction": args.split_fraction, "seed": args.seed,
         "misvm_max_outer": args.misvm_max_outer,
         "data": str(args.data), "test_data": str(args.test_data or ""),
         "report_out": str(args.report_out)},
        datasets, started,
        extra={"seed": args.seed}, threads=args.threads,
    )
    for algo in Algorithm:
        rep = reports[algo]
        print(f"{algo.value:12s} candidate_auc={rep.candidate_auc:.4f} "
              f"group_auc={rep.group_auc:.4f}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gcm",
        description="Group-level convex training of linear classifiers",
    )
    parser.add_argument("--threads", type=int, default=1,
                        help="BLAS thread cap recorded in the manifest")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic grouped dataset")
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=("binary", "text"), default="binary")
    p.add_argument("--preset", choices=sorted(PRESETS))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--pos-groups", dest="n_pos_groups", type=int)
    p.add_argument("--neg-groups", dest="n_neg_groups", type=int)
    p.add_argument("--group-size-min", type=int)
    p.add_argument("--group-size-max", type=int)
    p.add_argument("--d", type=int)
    p.add_argument("--key-shift", type=float)
    p.add_argument("--noise-scale", type=_positive_float)
    p.add_argument("--outlier-rate", type=_nonneg_float)
    p.add_argument("--outlier-shift", type=float)
    p.add_argument("--decoy-shift", type=float)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="train one algorithm on a dataset")
    p.add_argument("--data", required=True)
    p.add_argument("--model-out", required=True)
    p.add_argument("--algo", choices=[a.value for a in Algorithm], required=True)
    _add_common_hyper_flags(p)
    p.add_argument("--expand-degree", type=int)
    p.add_argument("--standardize", action="store_true",
                   help="fit and apply a per-feature standardizer")
    p.add_argument("--misvm-c", type=_positive_float,
                   help="MI-SVM trade-off C; default derives from lambda")
    p.add_argument("--misvm-delta", type=_nonneg_float, default=0.0)
    p.add_argument("--misvm-max-outer", type=int, default=50)
    _add_solver_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="score a model on a dataset")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--report-out", required=True)
    p.add_argument("--groups-out",
                   help="per-group score table; default <report-out>.groups.csv")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("cv", help="cross-validate the trade-off on a grid")
    p.add_argument("--data", required=True)
    p.add_argument("--algo", choices=[a.value for a in Algorithm], required=True)
    p.add_argument("--folds", type=_folds_arg, default=5)
    p.add_argument("--lambda-grid", type=_grid_arg, default=DEFAULT_LAMBDA_GRID)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--epsilon", type=_positive_float, default=DEFAULT_EPSILON)
    p.add_argument("--delta", type=_nonneg_float, default=DEFAULT_DELTA)
    p.add_argument("--misvm-max-outer", type=int, default=50)
    p.add_argument("--report-out", required=True)
    _add_solver_flags(p)
    p.set_defaults(func=cmd_cv)

    p = sub.add_parser(
        "compare",
        help="train all four algorithms on a shared split and tabulate AUCs",
    )
    p.add_argument("--data", required=True)
    p.add_argument("--test-data")
    p.add_argument("--split-fraction", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=0)
    _add_common_hyper_flags(p)
    p.add_argument("--misvm-max-outer", type=int, default=50)
    p.add_argument("--report-out", required=True)
    _add_solver_flags(p)
    p.set_defaults(func=cmd_compare)

    return parser


def _thread_limit(threads: int):
    try:
        from threadpoolctl import threadpool_limits
    except ImportError:
        if threads != 1:
            warnings.warn("threadpoolctl unavailable; --threads ignored")
        return nullcontext()
    return threadpool_limits(limits=threads)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        with _thread_limit(args.threads):
            return args.func(args)
    except DataFormatError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (DimensionMismatchError, ConfigurationError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except DomainError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (GcmError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
