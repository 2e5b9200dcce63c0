"""Command-line interface: generate / solve / bench / verify.

Exit codes: 0 success, 2 tolerance failure in `verify`, 1 any error
(including bad flags).
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Optional

import numpy as np

from . import cones, generators, probio
from .model import primal_residuals, validate_problem
from .solver import SolverConfig, bundle_alm_solve

__all__ = ["main"]

BUNDLES = ("segment", "hull3", "spectral", "singleton")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bundlealm",
        description="Bundle-based augmented Lagrangian solver for conic "
                    "problems over compact sets.")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="write a seeded problem instance")
    gen.add_argument("--kind", required=True,
                     choices=["lp2d", "rank1-sdp", "matrix-completion"])
    gen.add_argument("--n", type=int, default=20)
    gen.add_argument("--m", type=int, default=20)
    gen.add_argument("--half-dim", type=int, default=25)
    gen.add_argument("--obs-prob", type=float, default=0.2)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--bound", type=float, default=None,
                     help="override the feasible-set bound where applicable")
    gen.add_argument("--out", required=True)

    sol = sub.add_parser("solve", help="solve a problem file")
    sol.add_argument("problem")
    sol.add_argument("--bundle", choices=BUNDLES, default="segment")
    sol.add_argument("--rho", type=float, default=1.0)
    sol.add_argument("--beta", type=float, default=0.25)
    sol.add_argument("--max-iters", type=int, default=1000)
    sol.add_argument("--rp", type=int, default=3)
    sol.add_argument("--rc", type=int, default=2)
    sol.add_argument("--tol-affine", type=float, default=1e-8)
    sol.add_argument("--tol-gap", type=float, default=1e-8)
    sol.add_argument("--trace", default=None, help="write per-iteration CSV")
    sol.add_argument("--trace-bound", type=float, default=None,
                     help="feasible-set trace bound (required for SDPA input)")
    sol.add_argument("--out", default=None, help="write solution JSON")
    sol.add_argument("--log-every", type=int, default=0)

    ben = sub.add_parser("bench", help="run a benchmark suite")
    ben.add_argument("--suite", required=True,
                     choices=["lp2d", "rank1", "completion"])
    ben.add_argument("--seeds", default="1,2,3",
                     help="comma-separated instance seeds")
    ben.add_argument("--jobs", type=int, default=1)
    ben.add_argument("--max-iters", type=int, default=None)
    ben.add_argument("--out-dir", default=None,
                     help="output directory (default ./bench-<suite>)")

    ver = sub.add_parser("verify", help="check a solution against a problem")
    ver.add_argument("problem")
    ver.add_argument("solution")
    ver.add_argument("--tol", type=float, default=1e-6)
    return parser


# ---------------------------------------------------------------------------
# generate
# ---------------------------------------------------------------------------

def _cmd_generate(args) -> int:
    kind = args.kind.replace("-", "_")
    spec = generators.GeneratorSpec(kind=kind, seed=args.seed, n=args.n,
                                    m=args.m, half_dim=args.half_dim,
                                    obs_prob=args.obs_prob, bound=args.bound)
    prob = generators.generate(spec)
    validate_problem(prob)
    probio.write_problem(prob, args.out)
    print(f"wrote {args.out}: {kind} (dim {prob.dim}, m {prob.m})")
    return 0


# ---------------------------------------------------------------------------
# solve
# ---------------------------------------------------------------------------

def _load_problem(path: str, trace_bound: Optional[float]):
    if path.endswith(".dat-s"):
        if trace_bound is None:
            raise probio.ProblemFormatError(
                "SDPA input carries no compactness bound; pass --trace-bound")
        return probio.read_sdpa(path, trace_bound)
    if trace_bound is not None:
        raise probio.ProblemFormatError(
            "--trace-bound applies only to SDPA input; the JSON format "
            "stores the bound itself")
    return probio.read_problem(path)


def _cmd_solve(args) -> int:
    prob = _load_problem(args.problem, args.trace_bound)
    config = SolverConfig(rho=args.rho, beta=args.beta,
                          max_iters=args.max_iters,
                          tol_affine=args.tol_affine, tol_gap=args.tol_gap,
                          bundle_policy=args.bundle, r_p=args.rp, r_c=args.rc,
                          log_every=args.log_every)
    result = bundle_alm_solve(prob, config, trace_path=args.trace)
    affine, cost_gap = primal_residuals(prob, result.x)
    print(f"status: {result.status} after {len(result.trace)} iterations")
    print(f"g(y) = {result.state.g_y:+.12e}  affine residual = {affine:.3e}")
    if cost_gap is not None:
        print(f"cost gap vs certificate = {cost_gap:+.3e}")
    if args.out:
        probio.write_solution(result, args.out)
        print(f"wrote {args.out}")
    return 0 if result.status != "subsolver_failure" else 1


# ---------------------------------------------------------------------------
# bench
# ---------------------------------------------------------------------------

def _bench_jobs(suite: str, seeds, max_iters: Optional[int]):
    """(name, generator args, config) for each run in the suite."""
    jobs = []
    if suite == "lp2d":
        iters = max_iters or 2000
        for policy in ("singleton", "segment", "hull3"):
            cfg = SolverConfig(rho=1.5, beta=0.25, max_iters=iters,
                               bundle_policy=policy)
            jobs.append((f"lp2d-{policy}", ("lp2d", 0), cfg))
    elif suite == "rank1":
        iters = max_iters or 5000
        for seed in seeds:
            cfg = SolverConfig(rho=1.0, beta=0.25, max_iters=iters,
                               bundle_policy="spectral", r_p=3, r_c=2)
            jobs.append((f"rank1-n20-seed{seed}", ("rank1", seed), cfg))
    else:
        iters = max_iters or 10000
        for seed in seeds:
            cfg = SolverConfig(rho=100.0, beta=0.25, max_iters=iters,
                               bundle_policy="spectral", r_p=3, r_c=2,
                               tol_affine=1e-6)
            jobs.append((f"completion-h25-seed{seed}", ("completion", seed),
                         cfg))
    return jobs


def _bench_worker(task):
    """Run one bench instance; must stay importable for process pools."""
    name, (kind, seed), config, out_dir = task
    if kind == "lp2d":
        prob = generators.gen_2d_lp()
    elif kind == "rank1":
        prob = generators.gen_rank1_sdp(20, 20, seed)
    else:
        prob = generators.gen_matrix_completion(25, 0.2, seed)
    trace_path = str(Path(out_dir) / f"{name}.csv")
    result = bundle_alm_solve(prob, config, trace_path=trace_path)
    affine, cost_gap = primal_residuals(prob, result.x)
    return {
        "name": name,
        "status": result.status,
        "iterations": len(result.trace),
        "g_y": float(result.state.g_y),
        "affine": affine,
        "cost_gap": cost_gap,
        "wall_s": float(sum(r.wall_time for r in result.trace)),
    }


def _cmd_bench(args) -> int:
    seeds = [int(s) for s in args.seeds.split(",") if s.strip() != ""]
    out_dir = Path(args.out_dir or f"bench-{args.suite}")
    out_dir.mkdir(parents=True, exist_ok=True)
    jobs = [(name, genargs, cfg, str(out_dir))
            for name, genargs, cfg in _bench_jobs(args.suite, seeds,
                                                  args.max_iters)]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            summaries = list(pool.map(_bench_worker, jobs))
    else:
        summaries = [_bench_worker(job) for job in jobs]
    for s in summaries:
        print(f"{s['name']:28s} {s['status']:12s} iters={s['iterations']:6d} "
              f"affine={s['affine']:.3e} wall={s['wall_s']:.2f}s")
    with open(out_dir / "summary.json", "w") as fh:
        json.dump(summaries, fh, indent=1)
        fh.write("\n")
    print(f"traces and summary.json in {out_dir}/")
    return 0


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------

def _cmd_verify(args) -> int:
    prob = probio.read_problem(args.problem)
    sol = probio.read_solution(args.solution)
    x = sol["x"]
    if x.size != prob.dim:
        raise probio.ProblemDimensionError(
            f"solution x has length {x.size}, problem dimension is {prob.dim}")
    tol = args.tol
    failures = 0

    member = cones.membership(prob.cone, x, tol=tol)
    print(f"feasible-set membership: {'ok' if member else 'FAIL'}")
    failures += not member

    affine, cost_gap = primal_residuals(prob, x)
    aff_ok = affine <= tol * (1.0 + float(np.linalg.norm(prob.b)))
    print(f"affine residual {affine:.3e}: {'ok' if aff_ok else 'FAIL'}")
    failures += not aff_ok

    if cost_gap is not None:
        p_star = prob.certificate.p_star
        cost_ok = abs(cost_gap) <= tol * (1.0 + abs(p_star))
        print(f"cost gap vs certificate {cost_gap:+.3e}: "
              f"{'ok' if cost_ok else 'FAIL'}")
        failures += not cost_ok

    return 0 if failures == 0 else 2


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 0 for --help and 2 for usage errors; fold usage
        # errors into the generic error code
        return 0 if exc.code == 0 else 1
    try:
        if args.command == "generate":
            return _cmd_generate(args)
        if args.command == "solve":
            return _cmd_solve(args)
        if args.command == "bench":
            return _cmd_bench(args)
        return _cmd_verify(args)
    except (probio.ProblemFormatError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
