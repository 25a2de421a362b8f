"""Command line entry point: ``isd {gen,solve,testset,tnsp,kd}``."""
from __future__ import annotations

import argparse
import json
import logging
import sys

import numpy as np

from . import bench
from .linop import make_gaussian, make_partial_dct
from .oracles import KdParams, kd_profile, tnsp_gamma
from .signals import add_noise, gen_signal, make_rng, read_signal, write_signal

log = logging.getLogger("isd")


def _algos(text):
    return tuple(a.strip() for a in text.split(",") if a.strip())


def cmd_gen(args):
    sig = gen_signal(args.kind, args.n, args.k, args.lam, args.seed)
    if args.out:
        write_signal(sig, args.out)
    else:
        for v in sig.values:
            print(f"{v:.17g}")
    return 0


def cmd_solve(args):
    if args.signal:
        sig = read_signal(args.signal)
        rng = make_rng(args.seed, 1)
    else:
        rng = make_rng(args.seed)
        sig = gen_signal(args.kind, args.n, args.k, args.lam, rng=rng)
    if args.operator == "dct":
        op = make_partial_dct(sig.n, args.m, rng=rng)
    else:
        op = make_gaussian(args.m, sig.n, rng=rng)
    b = add_noise(op.apply(sig.values), args.sigma, rng=rng)
    spec = bench.ExperimentSpec(algos=(args.algo,), n=sig.n, k=sig.k, sigma=args.sigma, m_values=(args.m,),
                                reps=1, preset=args.preset, signal=sig.kind, lam=sig.lam, rule=args.rule,
                                threshold=args.threshold)
    preset = bench.make_preset(args.preset, args.sigma)
    x, outer, inner, detected = bench.run_algo(args.algo, op, b, spec, preset, sig)
    met = bench.evaluate(x, sig, args.threshold, detected)
    out = {"algo": args.algo, "n": sig.n, "m": args.m, "k": sig.k, "outer_iters": outer,
           "inner_iters": inner, **met}
    text = json.dumps(out, indent=1)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    print(text)
    return 0


def cmd_testset(args):
    overrides = {}
    for name in ("n", "k", "sigma", "reps", "seed", "threshold", "preset", "rule", "lam"):
        val = getattr(args, name)
        if val is not None:
            overrides[name] = val
    if args.m_range:
        overrides["m_values"] = bench.parse_mrange(args.m_range)
    if args.algo:
        overrides["algos"] = _algos(args.algo)
    if args.signal:
        overrides["signal"] = args.signal
    spec = bench.spec_for_testset(args.testset, **overrides)
    rows = bench.run_experiment(spec, jobs=args.jobs)
    if args.out:
        fmt = args.format or ("json" if args.out.endswith(".json") else "csv")
        bench.emit_results(rows, fmt, args.out, spec)
    else:
        sys.stdout.write(bench.rows_to_csv(rows))
    for (algo, m), freq in sorted(bench.success_table(rows).items(), key=lambda kv: (kv[0][1], kv[0][0])):
        log.info("m=%d %-5s success %.2f", m, algo, freq)
    return 0


def cmd_tnsp(args):
    rng = make_rng(args.seed)
    A = rng.standard_normal((args.m, args.n))
    rep = tnsp_gamma(A, args.t, args.L, mode=args.mode, samples=args.samples, seed=args.seed)
    print(json.dumps({"t": rep.t, "L": rep.L, "mode": rep.mode, "gamma_bar": rep.gamma_bar,
                      "unbounded": rep.unbounded}))
    return 0


def cmd_kd(args):
    prof = kd_profile(KdParams(args.n, args.m, args.d, args.c))
    print(json.dumps({k: (bool(v) if isinstance(v, (bool, np.bool_)) else float(v))
                      for k, v in prof._asdict().items()}))
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="isd", description=__doc__)
    p.add_argument("--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a test signal")
    g.add_argument("--kind", default="gaussian",
                   choices=["gaussian", "bernoulli", "power-law", "power-law-sparse"])
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--k", type=int, required=True)
    g.add_argument("--lam", type=float)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out")
    g.set_defaults(func=cmd_gen)

    s = sub.add_parser("solve", help="recover one signal")
    s.add_argument("--signal", help="signal file written by 'gen'")
    s.add_argument("--kind", default="gaussian")
    s.add_argument("--n", type=int, default=200)
    s.add_argument("--k", type=int, default=25)
    s.add_argument("--lam", type=float)
    s.add_argument("--m", type=int, required=True)
    s.add_argument("--operator", default="gaussian", choices=["gaussian", "dct"])
    s.add_argument("--algo", default="isd", choices=bench.ALGOS)
    s.add_argument("--rule", default="firstjump")
    s.add_argument("--sigma", type=float, default=0.0)
    s.add_argument("--preset", default="default")
    s.add_argument("--threshold", type=float, default=1e-3)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out")
    s.set_defaults(func=cmd_solve)

    t = sub.add_parser("testset", help="run a recoverability sweep")
    t.add_argument("testset", choices=["1", "2", "3", "4", "5"])
    t.add_argument("--m-range", help="start:step:stop or a comma list")
    t.add_argument("--algo", help="comma list from bp,isd,irl1,irls")
    t.add_argument("--n", type=int)
    t.add_argument("--k", type=int)
    t.add_argument("--sigma", type=float)
    t.add_argument("--lam", type=float)
    t.add_argument("--signal")
    t.add_argument("--reps", type=int)
    t.add_argument("--seed", type=int)
    t.add_argument("--threshold", type=float)
    t.add_argument("--preset")
    t.add_argument("--rule")
    t.add_argument("--jobs", type=int)
    t.add_argument("--format", choices=["csv", "json"])
    t.add_argument("--out")
    t.set_defaults(func=cmd_testset)

    n = sub.add_parser("tnsp", help="t-NSP constant of a random Gaussian matrix")
    n.add_argument("--m", type=int, required=True)
    n.add_argument("--n", type=int, required=True)
    n.add_argument("--t", type=int, required=True)
    n.add_argument("--L", type=int, required=True)
    n.add_argument("--mode", default="exact", choices=["exact", "sampled"])
    n.add_argument("--samples", type=int, default=2000)
    n.add_argument("--seed", type=int, default=0)
    n.set_defaults(func=cmd_tnsp)

    k = sub.add_parser("kd", help="evaluate k(d) and its derivative")
    k.add_argument("--n", type=int, required=True)
    k.add_argument("--m", type=int, required=True)
    k.add_argument("--d", type=float, default=0.0)
    k.add_argument("--c", type=float, default=1.0)
    k.set_defaults(func=cmd_kd)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ValueError, TypeError, OSError) as exc:
        print(f"isd {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
