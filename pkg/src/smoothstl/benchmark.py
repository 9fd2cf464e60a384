"""Seeded benchmark sweeps over the SCP fixtures.

Every realization is independent, so sweeps can fan out over a process pool.
Rows are sorted by ``(scp, srm, k, seed)`` before writing; with timing
disabled the CSV output is byte-identical across runs.
"""

from __future__ import annotations

import csv
import io
import os
import time
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .gradients import finite_diff_grad, grad_wrt_controls, relative_error
from .scp import build_scp
from .smooth_semantics import SRM, SmoothConfig, smooth_robustness
from .synthesis import SolveOptions, optimize

COLUMNS = [
    "scp", "srm", "k1", "k2", "seed", "control_cost", "smooth_cost", "smooth_rho",
    "L", "U", "width", "exact_rho", "exact_cost", "iters", "wall_ms",
]
MEAN_COLUMNS = [c for c in COLUMNS if c not in ("scp", "srm", "k1", "k2", "seed")]


class SandwichViolation(AssertionError):
    pass


@dataclass(frozen=True)
class _Job:
    scp: int
    srm: str
    k: float
    seed: int
    max_iters: int
    noise: float
    timing: bool


def _run(job: _Job) -> dict:
    prob = build_scp(job.scp, noise=job.noise)
    cfg = SmoothConfig(job.srm, job.k, job.k)
    opts = SolveOptions(max_iters=job.max_iters, seed=job.seed, record_bounds=False)
    t0 = time.perf_counter()
    res = optimize(prob, cfg, opts)
    wall = (time.perf_counter() - t0) * 1e3 if job.timing else 0.0
    if not res.certified_range.contains(res.exact_value, 1e-9):
        raise SandwichViolation(
            f"SCP{job.scp} {job.srm} k={job.k} seed={job.seed}: exact {res.exact_value} "
            f"outside {res.certified_range}"
        )
    iv = res.error_interval
    return {
        "scp": job.scp,
        "srm": job.srm,
        "k1": job.k,
        "k2": job.k,
        "seed": job.seed,
        "control_cost": res.control_cost,
        "smooth_cost": res.smooth_cost,
        "smooth_rho": res.smooth_value,
        "L": iv.lo,
        "U": iv.hi,
        "width": iv.width,
        "exact_rho": res.exact_value,
        "exact_cost": res.exact_cost,
        "iters": res.iterations,
        "wall_ms": wall,
    }


def _fmt(v):
    return repr(float(v)) if isinstance(v, (float, np.floating)) else str(v)


def _csv(rows, cols) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in rows:
        w.writerow([_fmt(r[c]) for c in cols])
    return buf.getvalue()


def aggregate(rows) -> list[dict]:
    """Mean of every numeric column per ``(scp, srm, k1, k2)`` group."""
    groups = defaultdict(list)
    for r in rows:
        groups[(r["scp"], r["srm"], r["k1"], r["k2"])].append(r)
    out = []
    for key in sorted(groups):
        g = groups[key]
        rec = dict(zip(("scp", "srm", "k1", "k2"), key))
        rec["realizations"] = len(g)
        for c in MEAN_COLUMNS:
            rec[c] = float(np.mean([r[c] for r in g]))
        out.append(rec)
    return out


def run_benchmark(
    scp_ids,
    srm_list,
    k_list,
    realizations: int,
    out_path=None,
    *,
    max_iters: int = 500,
    noise: float = 0.0,
    workers: int = 1,
    timing: bool = True,
    first_seed: int = 0,
) -> tuple[list[dict], list[dict]]:
    """Run every ``(scp, srm, k, seed)`` combination and write ``results.csv`` and ``means.csv``.

    ``out_path`` is a directory (created if missing). Returns ``(rows, means)``.
    """
    if realizations < 1:
        raise ValueError("realizations must be at least 1")
    srms = [SRM.parse(s).value for s in srm_list]
    jobs = [
        _Job(int(scp), srm, float(k), first_seed + i, max_iters, noise, timing)
        for scp in scp_ids
        for srm in srms
        for k in k_list
        for i in range(realizations)
    ]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_run, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    else:
        rows = [_run(j) for j in jobs]
    rows.sort(key=lambda r: (r["scp"], r["srm"], r["k1"], r["seed"]))
    means = aggregate(rows)
    if out_path is not None:
        os.makedirs(out_path, exist_ok=True)
        with open(os.path.join(out_path, "results.csv"), "w", newline="") as fh:
            fh.write(_csv(rows, COLUMNS))
        with open(os.path.join(out_path, "means.csv"), "w", newline="") as fh:
            fh.write(_csv(means, ["scp", "srm", "k1", "k2", "realizations"] + MEAN_COLUMNS))
    return rows, means


def gradient_check(prob, cfg: SmoothConfig, trials: int = 10, seed: int = 0, step: float = 1e-6, scale: float = 0.5) -> dict:
    """Compare explicit control gradients with central differences at random controls.

    Reports the worst relative error, the worst adjoint-vs-dense discrepancy
    and mean wall times of both gradient routes.
    """
    rng = np.random.default_rng(seed)
    shape = (prob.T + 1, prob.system.m)
    worst_rel = worst_dense = 0.0
    t_exp = t_fd = 0.0
    for _ in range(trials):
        u = rng.uniform(-scale, scale, size=shape)
        t0 = time.perf_counter()
        g = grad_wrt_controls(prob.formula, prob.system, u, prob.x0, cfg)
        t1 = time.perf_counter()
        fd = finite_diff_grad(lambda v: smooth_robustness(prob.formula, prob.signal(v), cfg), u, step).ravel()
        t2 = time.perf_counter()
        gd = grad_wrt_controls(prob.formula, prob.system, u, prob.x0, cfg, method="dense")
        t_exp += t1 - t0
        t_fd += t2 - t1
        worst_rel = max(worst_rel, relative_error(g, fd))
        worst_dense = max(worst_dense, float(np.max(np.abs(g - gd))))
    return {
        "trials": trials,
        "max_relative_error": worst_rel,
        "max_adjoint_dense_diff": worst_dense,
        "explicit_ms": 1e3 * t_exp / trials,
        "finite_diff_ms": 1e3 * t_fd / trials,
        "time_ratio": t_exp / t_fd if t_fd > 0 else float("nan"),
    }
