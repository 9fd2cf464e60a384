"""Command-line interface: ``smoothstl {eval,bounds,synth,bench,grad-check}``."""

from __future__ import annotations

import argparse
import json
import os
import sys

from .benchmark import gradient_check, run_benchmark
from .error_semantics import SampleDependentNoiseError, error_interval, error_interval_signal_free
from .formula import NNFError, PredicateTable, format_formula, to_nnf
from .parser import STLSyntaxError, parse
from .scp import build_scp
from .semantics import HorizonError, Signal, robustness
from .smooth_semantics import SRM, SmoothConfig, smooth_robustness
from .synthesis import SolveOptions, load_problem, optimize, optimize_switching, warm_start_chain


def _read_text(arg: str) -> str:
    if os.path.isfile(arg):
        with open(arg) as fh:
            return fh.read().strip()
    return arg


def _table(path: str | None, q: int | None) -> PredicateTable:
    """Predicate table from a JSON file holding either ``{name: spec}`` or a problem's ``predicates``."""
    if path is None:
        return PredicateTable(q=q)
    with open(path) as fh:
        d = json.load(fh)
    d = d.get("predicates", d)
    if q is None:
        # Without a signal, the widest predicate fixes the sample length.
        q = max(
            (len(spec["c"]) if "c" in spec else max(spec["channels"]) + 1 for spec in d.values()),
            default=None,
        )
    table = PredicateTable(q=q)
    for name, spec in d.items():
        noise = tuple(spec.get("noise", (0.0, 0.0)))
        if spec.get("type", "affine") == "box":
            table.box(name, spec["channels"], spec["lo"], spec["hi"], noise)
        else:
            table.affine(name, spec["c"], spec.get("b", 0.0), noise)
    return table


def _cfg(args, base: SmoothConfig | None = None) -> SmoothConfig:
    base = base or SmoothConfig()
    changes = {}
    if getattr(args, "srm", None):
        changes["srm"] = SRM.parse(args.srm)
    if getattr(args, "k1", None) is not None:
        changes["k1"] = args.k1
    if getattr(args, "k2", None) is not None:
        changes["k2"] = args.k2
    return base.replace(**changes)


def _add_smooth(p, srm_default=None):
    p.add_argument("--srm", default=srm_default, help="SRM1..SRM4")
    p.add_argument("--k1", type=float, help="smooth-min parameter")
    p.add_argument("--k2", type=float, help="smooth-max parameter")


def _problem(args):
    if args.problem is None and args.scp is None:
        raise SystemExit("one of --problem or --scp is required")
    if args.problem is not None:
        return load_problem(args.problem)
    return build_scp(args.scp), None


def cmd_eval(args):
    sig = Signal.from_csv(args.signal)
    table = _table(args.predicates, sig.q)
    f = to_nnf(parse(_read_text(args.formula), table))
    cfg = _cfg(args)
    rep = error_interval(f, sig, cfg)
    out = {
        "formula": format_formula(f),
        "exact": robustness(f, sig),
        "smooth": smooth_robustness(f, sig, cfg),
        "L": rep.lo,
        "U": rep.hi,
        "width": rep.width,
    }
    print(json.dumps(out, indent=2))


def cmd_bounds(args):
    table = _table(args.predicates, None)
    f = to_nnf(parse(_read_text(args.formula), table))
    rep = error_interval_signal_free(f, _cfg(args), args.range_bound)
    print(json.dumps({"L": rep.lo, "U": rep.hi, "width": rep.width}, indent=2))


def cmd_synth(args):
    prob, file_cfg = _problem(args)
    cfg = _cfg(args, file_cfg)
    opts = SolveOptions(
        max_iters=args.max_iters,
        step_size=args.step_size,
        seed=args.seed,
        stop_threshold=args.stop_threshold,
        tune_every=args.tune_every,
    )
    gap = None
    if args.switch_period:
        res, gap = optimize_switching(prob, cfg.replace(srm=SRM.SRM2), cfg.replace(srm=SRM.SRM3), args.switch_period, opts)
    elif args.warm_start:
        stages = [(cfg, opts)] + [(cfg.replace(srm=SRM.parse(s)), opts) for s in args.warm_start.split(",")]
        res = warm_start_chain(prob, stages)
    else:
        res = optimize(prob, cfg, opts)
    out = res.to_dict()
    if gap is not None:
        out["gap"] = gap
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, "result.json"), "w") as fh:
            json.dump(out, fh, indent=2)
        prob.signal(res.u_star).to_csv(os.path.join(args.out, "trajectory.csv"))
        with open(os.path.join(args.out, "trace.csv"), "w") as fh:
            fh.write(res.trace_csv())
    summary = {k: v for k, v in out.items() if k != "u_star"}
    print(json.dumps(summary, indent=2))


def _list(text, cast):
    return [cast(v) for v in text.split(",") if v.strip()]


def cmd_bench(args):
    srms = [s.value for s in SRM] if args.srm == "all" else _list(args.srm, str)
    rows, means = run_benchmark(
        _list(args.scp, int),
        srms,
        _list(args.k, float),
        args.realizations,
        args.out,
        max_iters=args.max_iters,
        noise=args.noise,
        workers=args.workers,
        timing=not args.no_timing,
    )
    print(f"wrote {len(rows)} rows and {len(means)} aggregate rows to {args.out}")


def cmd_grad_check(args):
    prob, file_cfg = _problem(args)
    cfg = _cfg(args, file_cfg)
    print(json.dumps(gradient_check(prob, cfg, args.trials, args.seed), indent=2))


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="smoothstl", description="Smooth STL robustness: evaluation, bounds and synthesis.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("eval", help="exact and smooth robustness of a formula on a signal")
    p.add_argument("--formula", required=True, help="formula text or a file containing it")
    p.add_argument("--signal", required=True, help="CSV with columns t,s0,...")
    p.add_argument("--predicates", help="JSON predicate definitions")
    _add_smooth(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("bounds", help="signal-free error interval")
    p.add_argument("--formula", required=True)
    p.add_argument("--predicates", help="JSON predicate definitions")
    p.add_argument("--range-bound", type=float, help="bound on operand spread (needed by Soft operators)")
    _add_smooth(p)
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("synth", help="synthesize controls for a problem")
    p.add_argument("--problem", help="problem JSON")
    p.add_argument("--scp", type=int, help="use a built-in SCP fixture instead of --problem")
    _add_smooth(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-iters", type=int, default=500)
    p.add_argument("--step-size", type=float, default=0.05)
    p.add_argument("--stop-threshold", type=float)
    p.add_argument("--switch-period", type=int, help="alternate SRM2/SRM3 every N iterations")
    p.add_argument("--warm-start", help="comma-separated SRMs run after the first stage, e.g. SRM1")
    p.add_argument("--tune-every", type=int)
    p.add_argument("--out", help="directory for result.json, trajectory.csv and trace.csv")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("bench", help="seeded benchmark sweep over SCP fixtures")
    p.add_argument("--scp", default="1,2,3,4")
    p.add_argument("--srm", default="all")
    p.add_argument("--k", default="1,3,5,7,9")
    p.add_argument("--realizations", type=int, default=50)
    p.add_argument("--max-iters", type=int, default=500)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--no-timing", action="store_true", help="write wall_ms as 0 so outputs are reproducible byte for byte")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("grad-check", help="explicit vs finite-difference control gradients")
    p.add_argument("--problem")
    p.add_argument("--scp", type=int)
    _add_smooth(p)
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_grad_check)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except (STLSyntaxError, HorizonError, NNFError, SampleDependentNoiseError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
