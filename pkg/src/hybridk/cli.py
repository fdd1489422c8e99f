"""Command line front door: instance generation, solving, oracle runs,
solution evaluation, and benchmark sweeps.

Exit codes are a stable contract: 0 ok, 2 parse or usage failure, 3
infeasible, 4 enumeration budget refused. The master seed falls back to the
HYBRIDK_SEED environment variable when --seed is not given.
"""

from __future__ import annotations

import os
import sys
import time

import click
import numpy as np

from .errors import BudgetExceededError, InfeasibleError, ParseError
from .geometry import Instance, evaluate_solution
from .instances import (
    ResultRecord,
    format_instance,
    format_record,
    gen_gaussian_mixture,
    gen_two_scale,
    gen_uniform,
    parse_instance_file,
)
from .oracle import DEFAULT_ENUM_BUDGET, brute_force_continuous
from .solver import AlgoConfig, full_pipeline

EXIT_PARSE = 2
EXIT_INFEASIBLE = 3
EXIT_BUDGET = 4


def _fail(code: int, exc: Exception) -> None:
    click.echo(f"error: {exc}", err=True)
    sys.exit(code)


def _env_seed() -> int:
    try:
        return int(os.environ.get("HYBRIDK_SEED", "0"))
    except ValueError:
        return 0


def _emit(rec: ResultRecord, pretty: bool) -> None:
    click.echo(format_record(rec, pretty=pretty))


@click.group()
def main():
    """Hybrid k-clustering toolbox."""


@main.command()
@click.option("--dist", type=click.Choice(["uniform", "gaussian-mixture", "two-scale"]), default="uniform")
@click.option("--n", type=int, required=True)
@click.option("--d", type=int, default=2)
@click.option("--seed", type=int, default=None)
@click.option("--box", type=float, default=10.0)
@click.option("--mixture-k", type=int, default=3)
@click.option("--spread", type=float, default=1.0)
@click.option("--blob-centers", type=str, default=None, help="semicolon-separated points, e.g. '3,3;6,6'")
@click.option("--blob-std", type=float, default=0.3)
@click.option("--stragglers", type=int, default=4)
@click.option("--straggler-lo", type=float, default=2.0)
@click.option("--straggler-hi", type=float, default=2.8)
@click.option("--out", type=click.Path(writable=True), default=None, help="write here instead of stdout")
def gen(dist, n, d, seed, box, mixture_k, spread, blob_centers, blob_std,
        stragglers, straggler_lo, straggler_hi, out):
    """Generate a deterministic instance file."""
    seed = _env_seed() if seed is None else seed
    try:
        if n < 1 or d < 1:
            raise InfeasibleError("need n >= 1 and d >= 1")
        if dist == "uniform":
            P = gen_uniform(n, d, seed, box=box)
        elif dist == "gaussian-mixture":
            P = gen_gaussian_mixture(n, d, seed, mixture_k=mixture_k, spread=spread, box=box)
        else:
            centers = None
            if blob_centers:
                centers = [[float(v) for v in part.split(",")] for part in blob_centers.split(";")]
            P = gen_two_scale(
                n, d, seed, blob_centers=centers, blob_std=blob_std,
                stragglers=stragglers, straggler_lo=straggler_lo,
                straggler_hi=straggler_hi, box=box,
            )
    except InfeasibleError as exc:
        _fail(EXIT_INFEASIBLE, exc)
    except ValueError as exc:
        _fail(EXIT_PARSE, exc)
    text = format_instance(P)
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        click.echo(text, nl=False)


def _solve_one(P, k, r, z, cfg: AlgoConfig) -> ResultRecord:
    t0 = time.perf_counter()
    instance = Instance(points=P, k=k, r=r, z=z)
    sol = full_pipeline(instance, cfg)
    wall = (time.perf_counter() - t0) * 1000.0
    report = evaluate_solution(P, sol.centers, r, z, sol.radius_factor)
    return ResultRecord(
        algorithm=sol.source,
        k=k,
        r=r,
        z=z,
        eps=cfg.eps,
        radius_factor=sol.radius_factor,
        cost=sol.cost,
        covered_count=report.covered_count,
        seed=cfg.seed,
        wall_time_ms=wall,
        centers=sol.centers.tolist(),
    )


@main.command()
@click.option("--instance", "instance_path", type=click.Path(exists=True), required=True)
@click.option("--k", type=int, required=True)
@click.option("--r", type=float, default=0.0)
@click.option("--z", type=int, default=1)
@click.option("--eps", type=float, default=0.5)
@click.option("--seed", type=int, default=None)
@click.option("--mode", type=click.Choice(["practical", "theory"]), default="practical")
@click.option("--branch-cap", type=int, default=400)
@click.option("--subset-cap", type=int, default=200)
@click.option("--beta", type=int, default=10)
@click.option("--beta-prime", type=int, default=None)
@click.option("--repetitions", type=int, default=10)
@click.option("--grid-cap", type=int, default=256)
@click.option("--guess-cap", type=int, default=None)
@click.option("--pretty", is_flag=True)
def solve(instance_path, k, r, z, eps, seed, mode, branch_cap, subset_cap,
          beta, beta_prime, repetitions, grid_cap, guess_cap, pretty):
    """Run the approximation pipeline on an instance file."""
    seed = _env_seed() if seed is None else seed
    try:
        P = parse_instance_file(instance_path)
    except ParseError as exc:
        _fail(EXIT_PARSE, exc)
    try:
        cfg = AlgoConfig(
            eps=eps, seed=seed, beta=beta, beta_prime=beta_prime,
            branch_cap=branch_cap, subset_cap=subset_cap,
            repetitions=repetitions, mode=mode, grid_cap=grid_cap,
            guess_cap=guess_cap,
        )
        rec = _solve_one(P, k, r, z, cfg)
    except BudgetExceededError as exc:
        _fail(EXIT_BUDGET, exc)
    except (InfeasibleError, ValueError) as exc:
        _fail(EXIT_INFEASIBLE, exc)
    _emit(rec, pretty)


@main.command()
@click.option("--instance", "instance_path", type=click.Path(exists=True), required=True)
@click.option("--k", type=int, required=True)
@click.option("--r", type=float, default=0.0)
@click.option("--z", type=int, default=1)
@click.option("--resolution", type=float, default=0.05)
@click.option("--budget", type=int, default=DEFAULT_ENUM_BUDGET)
@click.option("--pretty", is_flag=True)
def oracle(instance_path, k, r, z, resolution, budget, pretty):
    """Brute-force ground truth over a grid of candidate centers."""
    try:
        P = parse_instance_file(instance_path)
    except ParseError as exc:
        _fail(EXIT_PARSE, exc)
    t0 = time.perf_counter()
    try:
        res = brute_force_continuous(P, k, r, z, resolution, budget=budget)
    except BudgetExceededError as exc:
        _fail(EXIT_BUDGET, exc)
    except ValueError as exc:
        _fail(EXIT_INFEASIBLE, exc)
    wall = (time.perf_counter() - t0) * 1000.0
    report = evaluate_solution(P, res.centers, r, z, 1.0)
    rec = ResultRecord(
        algorithm="oracle",
        k=k,
        r=r,
        z=z,
        eps=0.0,
        radius_factor=1.0,
        cost=res.cost,
        covered_count=report.covered_count,
        seed=0,
        wall_time_ms=wall,
        centers=res.centers.tolist(),
        extras={
            "candidate_count": res.candidate_count,
            "grid_resolution": repr(float(res.grid_resolution)),
        },
    )
    _emit(rec, pretty)


@main.command("eval")
@click.option("--instance", "instance_path", type=click.Path(exists=True), required=True)
@click.option("--centers", "centers_path", type=click.Path(exists=True), required=True)
@click.option("--r", type=float, default=0.0)
@click.option("--z", type=int, default=1)
@click.option("--radius-factor", type=float, default=1.0)
@click.option("--pretty", is_flag=True)
def eval_cmd(instance_path, centers_path, r, z, radius_factor, pretty):
    """Re-score a centers file (instance file format) against an instance."""
    try:
        P = parse_instance_file(instance_path)
        F = parse_instance_file(centers_path)
    except ParseError as exc:
        _fail(EXIT_PARSE, exc)
    t0 = time.perf_counter()
    try:
        report = evaluate_solution(P, F, r, z, radius_factor)
    except ValueError as exc:
        _fail(EXIT_PARSE, exc)
    wall = (time.perf_counter() - t0) * 1000.0
    rec = ResultRecord(
        algorithm="eval",
        k=F.shape[0],
        r=r,
        z=z,
        eps=0.0,
        radius_factor=radius_factor,
        cost=report.total_cost,
        covered_count=report.covered_count,
        seed=0,
        wall_time_ms=wall,
        centers=F.tolist(),
    )
    _emit(rec, pretty)


def _int_list(text: str) -> list[int]:
    return [int(v) for v in text.split(",") if v != ""]


def _float_list(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v != ""]


def _bench_cell(args):
    (idx, n, d, k, r, z, eps, trial, master, dist, box, oracle_max_n,
     resolution, solver_opts) = args
    cell_seed = int(np.random.SeedSequence(entropy=master, spawn_key=(idx,)).generate_state(1)[0])
    try:
        if dist == "two-scale":
            P = gen_two_scale(n, d, cell_seed)
        elif dist == "gaussian-mixture":
            P = gen_gaussian_mixture(n, d, cell_seed)
        else:
            P = gen_uniform(n, d, cell_seed, box=box)
        cfg = AlgoConfig(eps=eps, seed=cell_seed, **solver_opts)
        rec = _solve_one(P, k, r, z=z, cfg=cfg)
        rec.extras = {"n": n, "d": d, "cell": idx, "trial": trial}
        if n <= oracle_max_n:
            orc = brute_force_continuous(P, k, r, z, resolution)
            rec.extras["oracle_cost"] = repr(float(orc.cost))
            if orc.cost > 0:
                rec.extras["ratio"] = repr(float(rec.cost / orc.cost))
        return format_record(rec)
    except Exception as exc:  # per-cell failures stay in-row, the sweep continues
        msg = str(exc).replace(" ", "_")[:120]
        return f"cell={idx} n={n} d={d} k={k} r={repr(float(r))} eps={repr(float(eps))} error={msg}"


@main.command()
@click.option("--n", "n_list", type=str, default="12")
@click.option("--d", "d_list", type=str, default="2")
@click.option("--k", "k_list", type=str, default="2")
@click.option("--r", "r_list", type=str, default="0.0")
@click.option("--z", type=int, default=1)
@click.option("--eps", "eps_list", type=str, default="0.5")
@click.option("--seeds", type=int, default=1, help="trials per cell")
@click.option("--seed", type=int, default=None, help="master seed")
@click.option("--dist", type=click.Choice(["uniform", "gaussian-mixture", "two-scale"]), default="uniform")
@click.option("--box", type=float, default=10.0)
@click.option("--oracle-max-n", type=int, default=0, help="attach oracle column when n is at most this")
@click.option("--resolution", type=float, default=0.05)
@click.option("--branch-cap", type=int, default=40)
@click.option("--subset-cap", type=int, default=20)
@click.option("--repetitions", type=int, default=2)
@click.option("--grid-cap", type=int, default=96)
@click.option("--guess-cap", type=int, default=4)
@click.option("--workers", type=int, default=1)
def bench(n_list, d_list, k_list, r_list, z, eps_list, seeds, seed, dist, box,
          oracle_max_n, resolution, branch_cap, subset_cap, repetitions,
          grid_cap, guess_cap, workers):
    """Sweep the cartesian product of parameter lists; one record per line.

    Per-cell seeds derive from the master seed and the cell index, so results
    do not depend on worker count or ordering.
    """
    master = _env_seed() if seed is None else seed
    solver_opts = dict(
        branch_cap=branch_cap, subset_cap=subset_cap,
        repetitions=repetitions, grid_cap=grid_cap, guess_cap=guess_cap,
    )
    cells = []
    idx = 0
    for n in _int_list(n_list):
        for d in _int_list(d_list):
            for k in _int_list(k_list):
                for r in _float_list(r_list):
                    for eps in _float_list(eps_list):
                        for trial in range(seeds):
                            cells.append(
                                (idx, n, d, k, r, z, eps, trial, master, dist, box,
                                 oracle_max_n, resolution, solver_opts)
                            )
                            idx += 1
    if workers > 1:
        from multiprocessing import Pool

        with Pool(workers) as pool:
            lines = pool.map(_bench_cell, cells)
    else:
        lines = [_bench_cell(cell) for cell in cells]
    for line in lines:
        click.echo(line)


if __name__ == "__main__":
    main()
