"""Command-line interface: ``cptport {evaluate,optimize,synth,report}``."""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from .core import DEFAULT_PARAMS, CptParams, ReturnsMatrix, cpt_utility, weights_at
from .data import ReturnsFileError, fit_gmm, load_returns_csv, sample_gmm, write_returns_csv
from .report import SCHEMA_VERSION, _jsonable
from .runner import METHODS, RunConfig, compare_methods, format_table, run


class UsageError(Exception):
    pass


def _params(text: str | None) -> CptParams:
    return DEFAULT_PARAMS if text is None else CptParams.parse(text)


def _threads(value: int | None) -> int:
    if value is not None:
        return value
    env = os.environ.get("CPTPORT_THREADS")
    if env:
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"CPTPORT_THREADS must be an integer, got {env!r}") from None
    return 1


def _write_json(payload: dict, out: str | None) -> None:
    text = json.dumps(payload, indent=2)
    if out:
        Path(out).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)


def _load(path: str) -> ReturnsMatrix:
    try:
        return load_returns_csv(path)
    except (FileNotFoundError, ReturnsFileError) as exc:
        raise UsageError(str(exc)) from None


def cmd_evaluate(args) -> int:
    errors = []
    try:
        params = _params(args.params)
    except ValueError as exc:
        errors.append(f"--params: {exc}")
    try:
        weights = np.array([float(x) for x in args.weights.split(",")])
    except ValueError:
        errors.append(f"--weights: not a comma-separated list of numbers: {args.weights!r}")
    if errors:
        raise UsageError("; ".join(errors))
    R = _load(args.returns)
    if weights.shape[0] != R.n_assets:
        raise UsageError(f"--weights has {weights.shape[0]} entries, dataset has {R.n_assets} assets")
    utility = cpt_utility(weights, R, params)
    dw = weights_at(weights, R, params)
    payload = {
        "schema_version": SCHEMA_VERSION,
        "utility": utility,
        "weights": weights.tolist(),
        "params": list(params.as_tuple()),
        "n_pos": dw.n_pos,
        "n_neg": dw.n_neg,
        "sum_pi_pos": float(dw.tail_pos.sum()),
        "sum_pi_neg": float(dw.tail_neg.sum()),
    }
    print(f"CPT utility: {utility!r}")
    print(f"gains N+ = {dw.n_pos}, losses N- = {dw.n_neg}, "
          f"sum pi+ = {payload['sum_pi_pos']:.6f}, sum pi- = {payload['sum_pi_neg']:.6f}")
    if args.out:
        _write_json(payload, args.out)
    return 0


def _config_from_args(args) -> RunConfig:
    errors = []
    params = DEFAULT_PARAMS
    try:
        params = _params(args.params)
    except ValueError as exc:
        errors.append(f"--params: {exc}")
    config = RunConfig(
        method=args.method, params=params, lower=args.lower,
        upper=np.inf if args.upper is None else args.upper, starts=args.starts, seed=args.seed,
        threads=_threads(args.threads), grid_step=args.grid_step, max_iter=args.max_iter,
        steps=args.steps, trust_radius=args.trust_radius,
    )
    return config, errors


def _write_traces(report, out: str) -> Path:
    trace_dir = Path(out).with_suffix("").with_name(Path(out).stem + "_traces")
    trace_dir.mkdir(parents=True, exist_ok=True)
    for i, rec in enumerate(report.records):
        lines = ["iteration,utility"] + [f"{k},{u!r}" for k, u in enumerate(rec.utility_trace)]
        (trace_dir / f"start_{i:04d}.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    return trace_dir


def cmd_optimize(args) -> int:
    config, errors = _config_from_args(args)
    R = None
    try:
        R = load_returns_csv(args.returns)
    except (FileNotFoundError, ReturnsFileError) as exc:
        errors.append(str(exc))
    errors += config.validate(R.n_assets if R is not None else None)
    if errors:
        raise UsageError("\n".join(errors))
    report = run(config, R)
    payload = report.to_dict()
    payload["asset_names"] = list(R.asset_names)
    _write_json(payload, args.out)
    best = report.best
    print(f"{config.method}: best utility {best.utility!r} at "
          + ", ".join(f"{name}={w:.4f}" for name, w in zip(R.asset_names, best.weights)),
          file=sys.stderr if not args.out else sys.stdout)
    if args.out:
        trace_dir = _write_traces(report, args.out)
        print(f"report written to {args.out}, traces in {trace_dir}")
    return 0


def cmd_synth(args) -> int:
    if args.factor < 1:
        raise UsageError("--factor must be at least 1")
    if not args.out:
        raise UsageError("--out is required for synth")
    R = _load(args.returns)
    extra = (args.factor - 1) * R.n_samples
    rows = [R.values]
    if extra > 0:
        model = fit_gmm(R, k=3, seed=args.seed)
        rows.append(sample_gmm(model, extra, seed=args.seed))
    write_returns_csv(args.out, np.vstack(rows), R.asset_names)
    print(f"wrote {R.n_samples + extra} rows to {args.out}")
    return 0


def cmd_report(args) -> int:
    errors = []
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    if not methods:
        errors.append("--methods must name at least one method")
    errors += [f"unknown method {m!r}" for m in methods if m not in METHODS]
    config, cfg_errors = _config_from_args(args)
    errors += cfg_errors
    R = None
    try:
        R = load_returns_csv(args.returns)
    except (FileNotFoundError, ReturnsFileError) as exc:
        errors.append(str(exc))
    if R is not None:
        errors += [e for e in config.validate(R.n_assets) if "method" not in e]
        if "grid" in methods and R.n_assets > 3:
            errors.append("grid needs at most 3 assets")
        if "cc" in methods and not config.params.loss_averse:
            errors.append("cc needs gamma_neg > gamma_pos")
    if errors:
        raise UsageError("\n".join(errors))
    result = compare_methods(R, config.params, methods, config.seed, config)
    print(format_table(result))
    payload = {"schema_version": SCHEMA_VERSION, "config": config.echo(), "methods": methods,
               **_jsonable(result)}
    if args.out:
        _write_json(payload, args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cptport", description="CPT utility portfolio optimization")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, returns=True):
        if returns:
            p.add_argument("--returns", required=True, help="CSV with a header of asset names")
        p.add_argument("--params", help="gamma+,gamma-,delta+,delta- (default 8.4,11.4,0.77,0.79)")
        p.add_argument("--out", help="output path")

    def solver_opts(p):
        p.add_argument("--starts", default="equal", help="equal | mv | dirichlet:<count> | w1,w2,...[;...]")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--threads", type=int, default=None, help="worker threads (env CPTPORT_THREADS)")
        p.add_argument("--grid-step", type=float, default=0.005)
        p.add_argument("--max-iter", type=int, default=None, help="outer iterations for mm/cc")
        p.add_argument("--steps", type=int, default=2000, help="gradient ascent steps")
        p.add_argument("--trust-radius", type=float, default=0.1, help="initial cc trust radius")
        p.add_argument("--lower", type=float, default=0.0, help="per-asset lower bound")
        p.add_argument("--upper", type=float, default=None, help="per-asset upper bound")

    p = sub.add_parser("evaluate", help="CPT utility of given weights")
    common(p)
    p.add_argument("--weights", required=True, help="comma-separated portfolio weights")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("optimize", help="maximize CPT utility")
    common(p)
    p.add_argument("--method", default="mm", help=" | ".join(METHODS))
    solver_opts(p)
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("synth", help="extend a returns file with GMM samples")
    p.add_argument("--returns", required=True)
    p.add_argument("--factor", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("report", help="compare methods from equal and MV starts")
    common(p)
    p.add_argument("--methods", default="mv,mm,cc,ga")
    p.set_defaults(method="mm")
    solver_opts(p)
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, FloatingPointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
