"""Method dispatch shared by the CLI and scripts."""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .cc import CcOptions, cc_optimize
from .constraints import ConstraintSet, project
from .core import DEFAULT_PARAMS, CptParams, as_returns, cpt_utility
from .data import dirichlet_starts
from .frontier import mv_heuristic
from .ga import GaOptions, ga_optimize, ga_softmax_optimize
from .mm import MmOptions, mm_optimize
from .oracle import grid_search
from .report import SolveReport, StartRecord, dataset_fingerprint, merge_reports

METHODS = ("mm", "cc", "ga", "ga-softmax", "mv", "grid")


@dataclass
class RunConfig:
    method: str = "mm"
    params: CptParams = DEFAULT_PARAMS
    lower: float = 0.0
    upper: float = np.inf
    starts: str = "equal"
    seed: int = 0
    threads: int = 1
    grid_step: float = 0.005
    max_iter: int | None = None
    steps: int = 2000
    trust_radius: float = 0.1
    frontier_points: int = 100
    extra: dict = field(default_factory=dict)

    def constraints(self, n: int) -> ConstraintSet:
        return ConstraintSet.box(n, self.lower, self.upper)

    def validate(self, n_assets: int | None = None) -> list[str]:
        errors = []
        if self.method not in METHODS:
            errors.append(f"unknown method {self.method!r}; choose from {', '.join(METHODS)}")
        if self.lower > self.upper:
            errors.append("lower bound exceeds upper bound")
        if n_assets is not None:
            if not (n_assets * self.lower <= 1.0 <= n_assets * self.upper):
                errors.append(f"bounds [{self.lower}, {self.upper}] are infeasible for {n_assets} assets")
            if self.method == "grid" and n_assets > 3:
                errors.append(f"grid search needs at most 3 assets, dataset has {n_assets}")
            if self.method == "grid" and n_assets < 2:
                errors.append("grid search needs at least 2 assets")
            try:
                parse_starts(self.starts, n_assets, 0)
            except ValueError as exc:
                errors.append(str(exc))
        if self.method == "ga-softmax" and not (self.lower == 0 and np.isinf(self.upper)):
            errors.append("ga-softmax only supports long-only constraints (lower=0, no upper bound)")
        if self.method == "cc" and not self.params.loss_averse:
            errors.append("cc needs gamma_neg > gamma_pos")
        if self.method == "grid" and not (0 < self.grid_step <= 0.1):
            errors.append("grid step must lie in (0, 0.1]")
        if self.steps < 1:
            errors.append("steps must be at least 1")
        if self.max_iter is not None and self.max_iter < 1:
            errors.append("max-iter must be at least 1")
        if not self.trust_radius > 0:
            errors.append("trust radius must be positive")
        if self.threads < 1:
            errors.append("threads must be at least 1")
        return errors

    def echo(self) -> dict:
        return {
            "method": self.method,
            "params": list(self.params.as_tuple()),
            "lower": self.lower,
            "upper": None if np.isinf(self.upper) else self.upper,
            "starts": self.starts,
            "seed": self.seed,
            "threads": self.threads,
            "grid_step": self.grid_step,
            "max_iter": self.max_iter,
            "steps": self.steps,
            "trust_radius": self.trust_radius,
        }


def parse_starts(spec: str, n: int, seed: int):
    """Start policy: ``equal``, ``mv``, ``dirichlet:<count>`` or explicit ``w1,w2,...[;...]``."""
    spec = spec.strip()
    if spec == "equal":
        return np.full((1, n), 1.0 / n)
    if spec == "mv":
        return "mv"
    if spec.startswith("dirichlet:"):
        try:
            count = int(spec.split(":", 1)[1])
        except ValueError:
            raise ValueError(f"bad start count in {spec!r}") from None
        if count < 1:
            raise ValueError("dirichlet start count must be at least 1")
        return dirichlet_starts(n, count, 1.0, seed)
    try:
        rows = [[float(x) for x in part.split(",")] for part in spec.split(";") if part.strip()]
    except ValueError:
        raise ValueError(f"unrecognized start specification {spec!r}") from None
    if not rows or any(len(r) != n for r in rows):
        raise ValueError(f"explicit starts must have {n} weights each")
    return np.array(rows)


def run(config: RunConfig, R) -> SolveReport:
    R = as_returns(R)
    n = R.shape[1]
    errors = config.validate(n)
    if errors:
        raise ValueError("; ".join(errors))
    C = config.constraints(n)
    params = config.params
    timings = {}
    extra = {}

    starts = parse_starts(config.starts, n, config.seed)
    if isinstance(starts, str) or config.method == "mv":
        t = time.perf_counter()
        mv = mv_heuristic(R, params, C, config.frontier_points)
        timings["mv_heuristic"] = time.perf_counter() - t
        extra["mv"] = {"weights": mv.weights, "utility": mv.utility, "gamma": mv.gamma,
                       "degenerate_frontier": mv.frontier.degenerate}
        if isinstance(starts, str):
            starts = mv.weights[None, :]
    starts = np.atleast_2d(starts)

    t = time.perf_counter()
    method = config.method
    if method == "mv":
        rec = StartRecord(start=mv.weights, weights=mv.weights, utility=mv.utility,
                          iterations=len(mv.frontier), utility_trace=mv.utilities.tolist(),
                          termination="frontier", extra={"gamma": mv.gamma})
        rep = SolveReport("mv", [rec])
    elif method == "grid":
        g = grid_search(R, params, C, config.grid_step, threads=config.threads)
        rec = StartRecord(start=g.weights, weights=g.weights, utility=g.utility,
                          iterations=len(g.points), utility_trace=[g.utility], termination="exhaustive")
        rep = SolveReport("grid", [rec])
        extra["local_maxima"] = [{"weights": w, "utility": u} for w, u in g.local_maxima[:1000]]
        extra["n_local_maxima"] = len(g.local_maxima)
    elif method in ("mm", "cc"):
        reports = []
        for w0 in starts:
            if method == "mm":
                opts = MmOptions(max_outer=config.max_iter or 100)
                reports.append(mm_optimize(w0, R, params, C, opts))
            else:
                opts = CcOptions(max_outer=config.max_iter or 200, trust_radius=config.trust_radius)
                reports.append(cc_optimize(w0, R, params, C, opts))
        rep = merge_reports(method, reports)
    elif method == "ga":
        rep = ga_optimize(starts, R, params, C, GaOptions(steps=config.steps, threads=config.threads))
    else:
        rep = ga_softmax_optimize(np.clip(starts, 0, None), R, params,
                                  GaOptions(steps=config.steps, threads=config.threads))
    timings["solve"] = time.perf_counter() - t
    rep.timings = timings
    rep.config = config.echo()
    rep.dataset = dataset_fingerprint(R)
    rep.extra = extra
    return rep


def compare_methods(R, params: CptParams, methods, seed: int = 0, config: RunConfig | None = None) -> dict:
    """Run each method from equal weights and from the MV heuristic portfolio."""
    R = as_returns(R)
    n = R.shape[1]
    base = config or RunConfig(params=params, seed=seed)
    C = base.constraints(n)
    t = time.perf_counter()
    mv = mv_heuristic(R, params, C, base.frontier_points)
    mv_time = time.perf_counter() - t
    rows = []
    starts = {"equal": project(np.full(n, 1.0 / n), C), "mv": mv.weights}
    for method in methods:
        if method == "mv":
            rows.append({"method": "mv", "start": "frontier", "utility": mv.utility,
                         "weights": mv.weights, "wall_time": mv_time})
            continue
        if method == "grid":
            cfg = RunConfig(**{**base.__dict__, "method": "grid"})
            t = time.perf_counter()
            rep = run(cfg, R)
            rows.append({"method": "grid", "start": "exhaustive", "utility": rep.best.utility,
                         "weights": rep.best.weights, "wall_time": time.perf_counter() - t})
            continue
        for label, w0 in starts.items():
            cfg = RunConfig(**{**base.__dict__, "method": method,
                               "starts": ",".join(repr(float(x)) for x in w0)})
            t = time.perf_counter()
            rep = run(cfg, R)
            rows.append({"method": method, "start": label, "utility": rep.best.utility,
                         "weights": rep.best.weights, "iterations": rep.best.iterations,
                         "wall_time": time.perf_counter() - t})
    for row in rows:
        row["utility_check"] = cpt_utility(row["weights"], R, params)
    return {"mv_gamma": mv.gamma, "rows": rows, "dataset": dataset_fingerprint(R)}


def format_table(result: dict) -> str:
    lines = [f"{'method':<11}{'start':<12}{'utility':>12}{'time [s]':>11}"]
    for row in result["rows"]:
        lines.append(f"{row['method']:<11}{row['start']:<12}{row['utility']:>12.6f}{row['wall_time']:>11.3f}")
    return "\n".join(lines)
