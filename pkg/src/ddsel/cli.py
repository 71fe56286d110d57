"""Command-line front end.

Subcommands cover the whole pipeline: ``gen`` writes synthetic
instances to disk, ``solve`` runs one estimator at one constraint
level, ``path`` sweeps a delta grid, ``bounds`` exports cap sets,
``bench`` runs replicated comparisons to a metrics CSV, and
``compare`` prints the estimator battery side by side.

Exit codes: 0 success, 2 argument or input error, 3 infeasible model,
4 budget exhausted without a feasible incumbent, 1 anything else.
Progress logging honors DDSEL_LOG (quiet, progress, debug).
"""

from __future__ import annotations

import argparse
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np

from . import bench as bench_mod
from . import io as io_mod
from .bounds import coef_bounds, coef_bounds_refined, warm_start_bounds
from .core import ProblemData, Solution, standardize
from .exceptions import (
    DdselError,
    Infeasible,
    InfeasibleAugmentedPolytope,
    InfeasibleRegion,
    InfeasibleWarmStart,
    MalformedProblem,
)
from .lp import solve_l1_dantzig
from .milo import MiloConfig, solve_with_intelligence

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INFEASIBLE = 3
EXIT_NO_INCUMBENT = 4


@dataclass
class RunConfig:
    """Normalized arguments for one invocation."""

    command: str
    x: Optional[str] = None
    y: Optional[str] = None
    truth: Optional[str] = None
    instance_dir: Optional[str] = None
    out: Optional[str] = None
    delta: Optional[str] = None
    deltas: Optional[Tuple[float, ...]] = None
    grid_num: int = bench_mod.GRID_NUM
    grid_low: float = bench_mod.GRID_LOW
    grid_high: float = bench_mod.GRID_HIGH
    method: str = "l0"
    big_m: float = 1e3
    bounds_mode: str = "auto"
    cap_scale: float = 2.0
    structured: bool = False
    warm_start: Optional[str] = None
    do_standardize: bool = False
    node_limit: Optional[int] = None
    time_limit: Optional[float] = None
    gap_limit: float = 0.0
    heuristic: bool = True
    workers: int = 1
    seed: int = 0
    log_path: Optional[str] = None
    profile_csv: Optional[str] = None
    representative: bool = False
    # generator parameters
    gen_type: str = "synth"
    n: int = 50
    p: int = 20
    k: int = 3
    rho: float = 0.0
    snr: float = 10.0
    tau: float = 1.0 / 22.0
    corr: float = 0.7
    replicates: int = 10
    estimators: Tuple[str, ...] = bench_mod.ESTIMATORS

    def __post_init__(self):
        for name in ("node_limit", "time_limit"):
            v = getattr(self, name)
            if v is not None and v <= 0:
                raise MalformedProblem(f"{name} must be positive")
        if self.gap_limit < 0:
            raise MalformedProblem("gap_limit must be nonnegative")
        if self.workers < 1:
            raise MalformedProblem("workers must be at least 1")


def _milo_config(cfg: RunConfig) -> MiloConfig:
    return MiloConfig(
        big_m=cfg.big_m,
        bounds_mode=cfg.bounds_mode,
        tau=cfg.cap_scale,
        use_fitted_caps=cfg.structured,
        node_limit=cfg.node_limit,
        time_limit=cfg.time_limit,
        gap_limit=cfg.gap_limit,
        heuristic=cfg.heuristic,
    )


def _load_problem_inputs(cfg: RunConfig):
    """Returns (design, response, truth dict or None)."""
    if cfg.instance_dir is not None:
        inst = io_mod.load_instance(cfg.instance_dir)
        truth = io_mod.load_json(
            f"{cfg.instance_dir}/{io_mod.TRUTH_FILE}"
        )
        return inst.design, inst.response, truth
    if cfg.x is None or cfg.y is None:
        raise MalformedProblem("need --instance or both --x and --y")
    design, y = io_mod.load_data(cfg.x, cfg.y)
    truth = io_mod.load_json(cfg.truth) if cfg.truth else None
    if cfg.do_standardize:
        design, y = standardize(design, y)
    return design, y, truth


def _resolve_delta(cfg: RunConfig, truth) -> float:
    if cfg.delta is None:
        raise MalformedProblem("this command needs --delta")
    if cfg.delta == "ref":
        if not truth or truth.get("reference_delta") is None:
            raise MalformedProblem(
                "--delta ref needs a generated instance with truth data"
            )
        return float(truth["reference_delta"])
    try:
        v = float(cfg.delta)
    except ValueError:
        raise MalformedProblem(f"bad --delta value {cfg.delta!r}")
    if not (math.isfinite(v) and v >= 0):
        raise MalformedProblem("--delta must be finite and nonnegative")
    return v


def _resolve_grid(cfg: RunConfig, truth) -> Tuple[float, ...]:
    if cfg.deltas is not None:
        return cfg.deltas
    if not truth or truth.get("reference_delta") in (None, 0):
        raise MalformedProblem(
            "no --deltas given and no positive reference delta in truth data"
        )
    return bench_mod.delta_grid(
        float(truth["reference_delta"]),
        num=cfg.grid_num,
        low=cfg.grid_low,
        high=cfg.grid_high,
    )


def _log_stream(cfg: RunConfig):
    if cfg.log_path:
        return open(cfg.log_path, "w")
    return None


# ----------------------------------------------------------------------
# commands


def _cmd_gen(cfg: RunConfig) -> int:
    if cfg.out is None:
        raise MalformedProblem("gen needs --out DIR")
    if cfg.gen_type == "synth":
        spec = bench_mod.SynthSpec(
            n=cfg.n, p=cfg.p, rho=cfg.rho, k_star=cfg.k, snr=cfg.snr, seed=cfg.seed
        )
        inst = bench_mod.gen_type_synth(spec)
        generator = {
            "type": "synth",
            "n": cfg.n,
            "p": cfg.p,
            "rho": cfg.rho,
            "k_star": cfg.k,
            "snr": cfg.snr,
            "seed": cfg.seed,
        }
    elif cfg.gen_type == "example1":
        inst = bench_mod.gen_example1(cfg.n, cfg.tau, snr=cfg.snr, seed=cfg.seed)
        generator = {
            "type": "example1",
            "n": cfg.n,
            "tau": cfg.tau,
            "snr": None if math.isinf(cfg.snr) else cfg.snr,
            "seed": cfg.seed,
        }
    elif cfg.gen_type == "corr-pair":
        inst = bench_mod.gen_example_corr_pair(
            cfg.n, cfg.p, corr=cfg.corr, snr=cfg.snr, seed=cfg.seed
        )
        generator = {
            "type": "corr-pair",
            "n": cfg.n,
            "p": cfg.p,
            "corr": cfg.corr,
            "snr": cfg.snr,
            "seed": cfg.seed,
        }
    else:
        raise MalformedProblem(f"unknown generator type {cfg.gen_type!r}")
    io_mod.save_instance(cfg.out, inst, generator)
    print(
        f"wrote {cfg.out}: n={inst.design.n} p={inst.design.p} "
        f"sigma={inst.sigma:.6g} reference_delta={inst.reference_delta:.6g}"
    )
    return EXIT_OK


def _cmd_solve(cfg: RunConfig) -> int:
    design, y, truth = _load_problem_inputs(cfg)
    delta = _resolve_delta(cfg, truth)
    problem = ProblemData(design, y, delta)
    if cfg.method == "l1":
        sol = solve_l1_dantzig(problem)
        record = {"method": "l1", "solution": io_mod.solution_to_dict(sol)}
        print(
            f"l1: nonzeros={sol.objective} l1_norm={sol.l1_norm():.6g} "
            f"residual_inf={sol.residual_inf:.6g} delta={delta:.6g}"
        )
        if cfg.out:
            io_mod.save_json(cfg.out, record)
        return EXIT_OK
    if cfg.method != "l0":
        raise MalformedProblem(f"unknown method {cfg.method!r}")
    warm = None
    if cfg.warm_start:
        warm = io_mod.solution_from_dict(io_mod.load_json(cfg.warm_start))
        warm = Solution.from_beta(problem, warm.beta)
    stream = _log_stream(cfg)
    try:
        res = solve_with_intelligence(
            problem, warm_start=warm, config=_milo_config(cfg), log_stream=stream
        )
    finally:
        if stream is not None:
            stream.close()
    record = {"method": "l0", **io_mod.milo_result_to_dict(res)}
    if cfg.out:
        io_mod.save_json(cfg.out, record)
    if res.incumbent is None:
        print(f"l0: {res.status}, no incumbent after {res.nodes_explored} nodes")
        return EXIT_NO_INCUMBENT if res.status != "infeasible" else EXIT_INFEASIBLE
    print(
        f"l0: {res.status} objective={res.incumbent.objective} "
        f"lower={res.lower_bound:.0f} gap={res.gap:.4f} "
        f"nodes={res.nodes_explored} delta={delta:.6g}"
    )
    return EXIT_OK


def _cmd_path(cfg: RunConfig) -> int:
    design, y, truth = _load_problem_inputs(cfg)
    grid = _resolve_grid(cfg, truth)
    problem = ProblemData(design, y, 0.0)
    res = bench_mod.path_run(
        problem, grid, method=cfg.method, config=_milo_config(cfg)
    )
    sizes = res.nonzero_counts()
    print(f"path ({cfg.method}): {len(res.grid)} grid points")
    for d, k, st in zip(res.grid, sizes, res.statuses):
        print(f"  delta={d:.6g} nonzeros={k} status={st}")
    if cfg.out:
        io_mod.save_json(cfg.out, io_mod.path_result_to_dict(res))
    if cfg.profile_csv:
        bench_mod.write_profile_csv(
            cfg.profile_csv, res, representative=cfg.representative
        )
    if all(s is None for s in res.solutions):
        return EXIT_NO_INCUMBENT
    return EXIT_OK


def _cmd_bounds(cfg: RunConfig) -> int:
    design, y, truth = _load_problem_inputs(cfg)
    delta = _resolve_delta(cfg, truth)
    problem = ProblemData(design, y, delta)
    if cfg.bounds_mode == "lp":
        bset = coef_bounds(problem)
    elif cfg.bounds_mode in ("auto", "refined"):
        cap = min(cfg.k, problem.p) if cfg.k >= 1 else problem.p
        bset = coef_bounds_refined(problem, support_cap=cap)
    elif cfg.bounds_mode == "warm":
        from .heuristics import hybrid_run

        warm = hybrid_run(problem).solution
        bset = warm_start_bounds(
            problem, warm, tau=cfg.cap_scale, fallback_big_m=cfg.big_m
        )
    else:
        raise MalformedProblem(f"unknown bounds mode {cfg.bounds_mode!r}")
    record = io_mod.boundset_to_dict(bset)
    if cfg.out:
        io_mod.save_json(cfg.out, record)
    cu = bset.coef_upper
    print(
        f"bounds ({bset.provenance}): max coef cap {float(np.max(cu)):.6g}, "
        f"l1 budget {bset.l1_budget if bset.l1_budget is not None else 'none'}"
    )
    return EXIT_OK


def _bench_one(seed: int, cfg: RunConfig):
    spec = bench_mod.SynthSpec(
        n=cfg.n, p=cfg.p, rho=cfg.rho, k_star=cfg.k, snr=cfg.snr, seed=seed
    )
    inst = bench_mod.gen_type_synth(spec)
    grid = bench_mod.delta_grid(
        inst.reference_delta, num=cfg.grid_num, low=cfg.grid_low, high=cfg.grid_high
    )
    return bench_mod.compare_on_grid(
        inst, grid=grid, config=_milo_config(cfg), estimators=cfg.estimators
    )


def _cmd_bench(cfg: RunConfig) -> int:
    if cfg.out is None:
        raise MalformedProblem("bench needs --out FILE")
    seeds = [cfg.seed + i for i in range(cfg.replicates)]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(_bench_one, seeds, [cfg] * len(seeds)))
    else:
        results = [_bench_one(s, cfg) for s in seeds]
    import csv as _csv

    with open(cfg.out, "w", newline="") as fh:
        w = _csv.writer(fh)
        w.writerow(("replicate", "seed") + bench_mod.METRICS_HEADER)
        for rep, (seed, comp) in enumerate(zip(seeds, results)):
            for row in comp.metric_rows():
                w.writerow((rep, seed) + row)
    print(
        f"wrote {cfg.out}: {cfg.replicates} replicates x "
        f"{len(cfg.estimators)} estimators x {cfg.grid_num} grid points"
    )
    for name in cfg.estimators:
        objs = [c.chosen[name].metrics.est_error for c in results]
        nzs = [c.chosen[name].metrics.nonzeros for c in results]
        print(
            f"  {name}: median est_error {float(np.median(objs)):.4g} "
            f"median nonzeros {float(np.median(nzs)):.1f}"
        )
    return EXIT_OK


def _cmd_compare(cfg: RunConfig) -> int:
    design, y, truth = _load_problem_inputs(cfg)
    if not truth or "beta_star" not in truth:
        raise MalformedProblem("compare needs truth data with beta_star")
    inst = bench_mod.Instance(
        design=design,
        response=y,
        beta_star=np.asarray(truth["beta_star"], dtype=float),
        sigma=float(truth.get("sigma") or 0.0),
    )
    grid = _resolve_grid(cfg, truth)
    comp = bench_mod.compare_on_grid(
        inst, grid=grid, config=_milo_config(cfg), estimators=cfg.estimators
    )
    if cfg.out:
        bench_mod.write_metrics_csv(cfg.out, comp)
    header = ("estimator", "delta_opt", "est_error", "sel_error", "pred_error",
              "nonzeros", "status")
    rows = [header]
    for name in cfg.estimators:
        r = comp.chosen[name]
        m = r.metrics
        rows.append(
            (
                name,
                f"{r.delta:.4g}",
                f"{m.est_error:.4g}",
                str(m.selection_error),
                "-" if m.pred_error is None else f"{m.pred_error:.4g}",
                str(m.nonzeros),
                r.status,
            )
        )
    widths = [max(len(row[i]) for row in rows) for i in range(len(header))]
    for row in rows:
        print("  ".join(cell.ljust(w) for cell, w in zip(row, widths)))
    return EXIT_OK


# ----------------------------------------------------------------------
# argument parsing


def _add_data_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--x", help="design CSV, headerless")
    p.add_argument("--y", help="response CSV, one value per row")
    p.add_argument("--truth", help="truth JSON sidecar")
    p.add_argument("--instance", dest="instance_dir", help="generated instance dir")
    p.add_argument("--standardize", action="store_true", dest="do_standardize")


def _add_solver_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--big-m", type=float, default=1e3, dest="big_m")
    p.add_argument(
        "--bounds-mode",
        default="auto",
        choices=("auto", "warm", "lp", "none"),
        dest="bounds_mode",
    )
    p.add_argument("--cap-scale", type=float, default=2.0, dest="cap_scale")
    p.add_argument("--structured", action="store_true")
    p.add_argument("--node-limit", type=int, dest="node_limit")
    p.add_argument("--time-limit", type=float, dest="time_limit")
    p.add_argument("--gap-limit", type=float, default=0.0, dest="gap_limit")
    p.add_argument(
        "--no-heuristic", action="store_false", dest="heuristic"
    )


def _add_grid_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--deltas", help="comma-separated explicit delta grid")
    p.add_argument("--num", type=int, default=bench_mod.GRID_NUM, dest="grid_num")
    p.add_argument("--low", type=float, default=bench_mod.GRID_LOW, dest="grid_low")
    p.add_argument("--high", type=float, default=bench_mod.GRID_HIGH, dest="grid_high")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="ddsel",
        description="Support-minimizing sparse regression over the "
        "correlation-residual polytope",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="write a synthetic instance to a directory")
    g.add_argument("--type", default="synth", dest="gen_type",
                   choices=("synth", "example1", "corr-pair"))
    g.add_argument("--n", type=int, default=50)
    g.add_argument("--p", type=int, default=20)
    g.add_argument("--k", type=int, default=3)
    g.add_argument("--rho", type=float, default=0.0)
    g.add_argument("--snr", type=float, default=10.0)
    g.add_argument("--tau", type=float, default=1.0 / 22.0)
    g.add_argument("--corr", type=float, default=0.7)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)

    s = sub.add_parser("solve", help="solve at one delta")
    _add_data_args(s)
    _add_solver_args(s)
    s.add_argument("--delta", required=True, help="number, or 'ref' for the "
                   "reference level of a generated instance")
    s.add_argument("--method", default="l0", choices=("l0", "l1"))
    s.add_argument("--warm-start", dest="warm_start", help="solution JSON")
    s.add_argument("--out", help="result JSON")
    s.add_argument("--log", dest="log_path", help="progress log file")

    t = sub.add_parser("path", help="sweep a delta grid")
    _add_data_args(t)
    _add_solver_args(t)
    _add_grid_args(t)
    t.add_argument("--method", default="l0", choices=("l0", "l1"))
    t.add_argument("--out", help="path JSON")
    t.add_argument("--profile-csv", dest="profile_csv")
    t.add_argument("--representative", action="store_true")

    b = sub.add_parser("bounds", help="export coefficient caps")
    _add_data_args(b)
    b.add_argument("--delta", required=True)
    b.add_argument("--mode", default="refined", dest="bounds_mode",
                   choices=("lp", "refined", "warm"))
    b.add_argument("--support-cap", type=int, default=0, dest="k",
                   help="budget cap for refined mode; 0 means p")
    b.add_argument("--cap-scale", type=float, default=2.0, dest="cap_scale")
    b.add_argument("--big-m", type=float, default=1e3, dest="big_m")
    b.add_argument("--out", help="bounds JSON")

    e = sub.add_parser("bench", help="replicated estimator comparison to CSV")
    _add_solver_args(e)
    _add_grid_args(e)
    e.add_argument("--n", type=int, default=50)
    e.add_argument("--p", type=int, default=20)
    e.add_argument("--k", type=int, default=3)
    e.add_argument("--rho", type=float, default=0.0)
    e.add_argument("--snr", type=float, default=10.0)
    e.add_argument("--replicates", type=int, default=10)
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--estimators", default=",".join(bench_mod.ESTIMATORS))
    e.add_argument("--workers", type=int, default=1)
    e.add_argument("--out", required=True)

    c = sub.add_parser("compare", help="estimator battery on one instance")
    _add_data_args(c)
    _add_solver_args(c)
    _add_grid_args(c)
    c.add_argument("--estimators", default=",".join(bench_mod.ESTIMATORS))
    c.add_argument("--out", help="per-delta metrics CSV")

    return ap


def config_from_args(args: argparse.Namespace) -> RunConfig:
    d = vars(args).copy()
    if "deltas" in d and d["deltas"] is not None:
        try:
            d["deltas"] = tuple(
                float(v) for v in str(d["deltas"]).split(",") if v.strip()
            )
        except ValueError:
            raise MalformedProblem(f"bad --deltas list {d['deltas']!r}")
        if not d["deltas"]:
            raise MalformedProblem("--deltas list is empty")
    if "estimators" in d and isinstance(d["estimators"], str):
        d["estimators"] = tuple(
            v.strip() for v in d["estimators"].split(",") if v.strip()
        )
    known = {f for f in RunConfig.__dataclass_fields__}
    return RunConfig(**{k: v for k, v in d.items() if k in known})


_DISPATCH = {
    "gen": _cmd_gen,
    "solve": _cmd_solve,
    "path": _cmd_path,
    "bounds": _cmd_bounds,
    "bench": _cmd_bench,
    "compare": _cmd_compare,
}


def run(config: RunConfig) -> int:
    """Execute one parsed invocation; returns the exit code."""
    try:
        return _DISPATCH[config.command](config)
    except (Infeasible, InfeasibleRegion, InfeasibleWarmStart,
            InfeasibleAugmentedPolytope) as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (MalformedProblem, FileNotFoundError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DdselError as exc:
        print(f"solver failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = config_from_args(args)
    except MalformedProblem as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return run(config)


if __name__ == "__main__":
    raise SystemExit(main())
