"""Experiment runner: recoverability sweeps, error metrics, CSV/JSON output."""
from __future__ import annotations

import csv
import io
import json
import logging
import math
import os
import platform
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .core import FirstJump, Geometric, IsdConfig, Toll, isd_run, support_diagnostics
from .linop import SynthesisTransform, compose_synthesis, make_gaussian, make_partial_dct
from .reweighted import ReweightConfig, irl1_run, irls_run
from .signals import Signal, add_noise, gen_signal, haar2d_analyze, make_rng, shepp_logan
from .wl1 import SolverConfig, default_rho, solve_weighted_l1

__all__ = [
    "ALGOS",
    "CSV_HEADER",
    "ExperimentSpec",
    "Preset",
    "ResultRow",
    "ZeroTruth",
    "evaluate",
    "emit_results",
    "read_results",
    "make_preset",
    "parse_mrange",
    "parse_rule",
    "phantom_signal",
    "run_experiment",
    "run_algo",
    "run_trial",
    "spec_for_testset",
    "trial_seed",
]

log = logging.getLogger(__name__)

ALGOS = ("bp", "isd", "irl1", "irls")

CSV_HEADER = (
    "testset,algo,n,m,k,sigma,seed,rel_err_l2,rel_err_l1,success,"
    "outer_iters,inner_iters,wall_seconds,det,c_det,w_det"
)

# Fraction of Haar coefficients kept when sparsifying the phantom
# (1685 significant coefficients out of 128*128 pixels).
PHANTOM_KEEP = 1685 / 16384


class ZeroTruth(ValueError):
    """Relative errors are undefined for a zero reference signal."""


@dataclass
class ResultRow:
    testset: str
    algo: str
    n: int
    m: int
    k: int
    sigma: float
    seed: int
    rel_err_l2: float
    rel_err_l1: float
    success: bool
    outer_iters: int
    inner_iters: int
    wall_seconds: float
    det: int
    c_det: int
    w_det: int


assert CSV_HEADER == ",".join(f.name for f in fields(ResultRow))


@dataclass(frozen=True)
class Preset:
    """Tolerance and smoothing schedules for one family of experiments."""

    name: str
    isd: IsdConfig
    bp_tol: float
    irl1: ReweightConfig
    irls: ReweightConfig


def make_preset(name="default", sigma=0.0):
    """Build a named preset.

    ``default`` covers noiseless Gaussian sweeps, ``power-law`` and
    ``bernoulli`` change only the IRLS schedule, ``noisy`` derives every
    final tolerance from ``sigma`` and ``image`` relaxes the final
    tolerance for transform-sparse images.
    """
    isd = IsdConfig()
    irl1 = ReweightConfig()
    irls = ReweightConfig()
    bp_tol = 1e-6
    if name == "default":
        pass
    elif name == "power-law":
        irls = replace(irls, irls_eps="power-law", zeta_floor=1e-9)
    elif name == "bernoulli":
        irls = replace(irls, irls_eps="bernoulli", zeta_floor=1e-10)
    elif name == "noisy":
        if sigma <= 0:
            raise ValueError("the noisy preset needs sigma > 0")
        eps = math.sqrt(sigma) / 100
        isd = replace(isd, tol_final=min(eps, isd.tol_middle))
        bp_tol = eps
        irl1 = replace(irl1, eps_inner=eps)
        irls = replace(irls, eps_final=eps, irls_eps_min=eps)
    elif name == "image":
        eps = max(1e-4, sigma / 10)
        isd = replace(isd, tol_final=eps)
        bp_tol = eps
        irl1 = replace(irl1, eps_inner=eps)
    else:
        raise ValueError(f"unknown preset {name!r}")
    return Preset(name, isd, bp_tol, irl1, irls)


@dataclass(frozen=True)
class ExperimentSpec:
    testset: str = "custom"
    algos: tuple = ALGOS
    n: int = 600
    k: int = 40
    sigma: float = 0.0
    m_values: tuple = (100,)
    reps: int = 20
    seed: int = 0
    threshold: float = 1e-3
    preset: str = "default"
    signal: str = "gaussian"
    lam: float | None = None
    operator: str = "gaussian"
    rule: str = "firstjump"
    levels: int = 0

    def __post_init__(self):
        if self.reps < 1:
            raise ValueError("reps must be at least 1")
        bad = [a for a in self.algos if a not in ALGOS]
        if bad:
            raise ValueError(f"unknown algorithms {bad}")
        if not self.m_values or any(not 1 <= m <= self.n for m in self.m_values):
            raise ValueError(f"m values must lie in [1, {self.n}]")
        if self.signal == "phantom" and int(round(math.sqrt(self.n))) ** 2 != self.n:
            raise ValueError("phantom experiments need a square n")
        parse_rule(self.rule, self.signal, self.lam)


def parse_mrange(text):
    """'start:step:stop' (inclusive) or a comma list -> tuple of ints."""
    if ":" in text:
        start, step, stop = (int(v) for v in text.split(":"))
        if step <= 0:
            raise ValueError("m-range step must be positive")
        return tuple(range(start, stop + 1, step))
    return tuple(int(v) for v in text.split(","))


def parse_rule(text, signal="gaussian", lam=None):
    """'firstjump', 'geometric[:beta]' or 'toll:c1,c2,...'."""
    name, _, arg = text.partition(":")
    if name == "firstjump":
        if signal == "phantom":
            return FirstJump.for_signal("wavelet")
        if signal.startswith("power-law"):
            return FirstJump.for_signal("power-law", lam)
        if signal == "bernoulli":
            return FirstJump(1, 8, 8)
        return FirstJump.for_signal("gaussian")
    if name == "geometric":
        return Geometric(float(arg) if arg else 5.0)
    if name == "toll":
        return Toll(tuple(int(v) for v in arg.split(",")) if arg else Toll().cardinality_schedule)
    raise ValueError(f"unknown detection rule {text!r}")


def spec_for_testset(testset, **overrides):
    """Desk-scale defaults for the five test sets."""
    base = {
        "1": dict(n=600, k=40, m_values=tuple(range(80, 221, 10)), reps=20),
        "2": dict(n=3000, k=100, m_values=tuple(range(200, 801, 50)), reps=5),
        "3": dict(n=2000, k=100, m_values=(325,), sigma=1e-3, reps=20, preset="noisy"),
        "4": dict(n=600, k=40, m_values=tuple(range(80, 241, 20)), reps=20,
                  signal="power-law-sparse", lam=1.0, preset="power-law"),
        "5": dict(n=1024, k=0, m_values=tuple(range(256, 513, 64)), reps=10,
                  signal="phantom", operator="dct", algos=("bp", "isd", "irl1"), preset="image",
                  levels=5),
    }
    key = str(testset)
    if key not in base:
        raise ValueError(f"unknown test set {testset!r}")
    params = {**base[key], **overrides}
    if params.get("signal") == "bernoulli" and "preset" not in overrides:
        params["preset"] = "bernoulli"
    if params.get("preset") == "noisy" and params.get("sigma", 0) <= 0:
        params["preset"] = "default"
    return ExperimentSpec(testset=key, **params)


def phantom_signal(side, levels, keep=PHANTOM_KEEP):
    """Haar coefficients of the phantom, hard-thresholded to the largest ``keep`` fraction."""
    coeffs = haar2d_analyze(shepp_logan(side), levels)
    count = max(1, int(round(keep * coeffs.size)))
    order = np.argsort(-np.abs(coeffs), kind="stable")
    sparse = np.zeros_like(coeffs)
    sparse[order[:count]] = coeffs[order[:count]]
    return Signal(sparse, "phantom", count)


def trial_seed(master, m, rep):
    """Integer seed of trial (m, rep); a pure function of its arguments."""
    return int(np.random.SeedSequence([int(master), int(m), int(rep)]).generate_state(1)[0])


def evaluate(x, truth, threshold=1e-3, detected=None):
    """Relative l2/l1 errors, success flag and optional detection counts."""
    truth_v = truth.values if isinstance(truth, Signal) else np.asarray(truth, dtype=float)
    x = np.asarray(x, dtype=float)
    if x.shape != truth_v.shape:
        raise ValueError("length mismatch")
    n2 = np.linalg.norm(truth_v)
    if n2 == 0:
        raise ZeroTruth("reference signal is zero")
    l2 = float(np.linalg.norm(x - truth_v) / n2)
    l1 = float(np.abs(x - truth_v).sum() / np.abs(truth_v).sum())
    out = {"rel_err_l2": l2, "rel_err_l1": l1, "success": bool(l2 <= threshold)}
    if detected is not None:
        d = support_diagnostics(detected, truth_v)
        out.update(det=d.det, c_det=d.c_det, w_det=d.w_det)
    return out


def _make_problem(spec: ExperimentSpec, m, seed):
    rng = make_rng(seed)
    if spec.signal == "phantom":
        side = int(round(math.sqrt(spec.n)))
        sig = phantom_signal(side, spec.levels)
    else:
        sig = gen_signal(spec.signal, spec.n, spec.k, spec.lam, seed, rng=rng)
    if spec.operator == "gaussian":
        op = make_gaussian(m, spec.n, seed, rng=rng)
    elif spec.operator == "dct":
        op = make_partial_dct(spec.n, m, seed, rng=rng)
    else:
        raise ValueError(f"unknown operator {spec.operator!r}")
    if spec.signal == "phantom" and spec.levels:
        side = int(round(math.sqrt(spec.n)))
        op = compose_synthesis(op, SynthesisTransform(side, spec.levels))
    b = add_noise(op.apply(sig.values), spec.sigma, rng=rng)
    return sig, op, b


def run_algo(algo, op, b, spec: ExperimentSpec, preset: Preset, truth):
    rho = default_rho(spec.sigma, op.m) if spec.sigma > 0 else 0.0
    detected = None
    if algo == "bp":
        x, st = solve_weighted_l1(op, b, np.ones(op.n), SolverConfig(rho=rho, tol=preset.bp_tol))
        outer, inner = 1, st.inner_iters
    elif algo == "isd":
        rep = isd_run(op, b, parse_rule(spec.rule, spec.signal, spec.lam), preset.isd,
                      sigma=spec.sigma, rho=rho)
        x, outer, inner, detected = rep.x_final, rep.outer_iters, rep.inner_iters_total, rep.final_support
    elif algo == "irl1":
        rep = irl1_run(op, b, preset.irl1, rho=rho)
        x, outer, inner = rep.x_final, rep.outer_iters, rep.inner_iters_total
    elif algo == "irls":
        rep = irls_run(op, b, preset.irls)
        x, outer, inner = rep.x_final, rep.outer_iters, rep.inner_iters_total
    else:
        raise ValueError(f"unknown algorithm {algo!r}")
    return x, outer, inner, detected


def run_trial(spec: ExperimentSpec, m, rep):
    """Every algorithm of ``spec`` on trial (m, rep); failures become NaN rows."""
    seed = trial_seed(spec.seed, m, rep)
    sig, op, b = _make_problem(spec, m, seed)
    preset = make_preset(spec.preset, spec.sigma)
    rows = []
    for algo in spec.algos:
        t0 = time.perf_counter()
        base = dict(testset=spec.testset, algo=algo, n=spec.n, m=m, k=sig.k, sigma=spec.sigma, seed=seed)
        try:
            x, outer, inner, detected = run_algo(algo, op, b, spec, preset, sig)
            met = evaluate(x, sig, spec.threshold, detected if detected is not None else ())
        except Exception as exc:  # a failed trial must not abort the sweep
            log.warning("trial m=%d rep=%d algo=%s failed: %s", m, rep, algo, exc)
            met = dict(rel_err_l2=math.nan, rel_err_l1=math.nan, success=False, det=0, c_det=0, w_det=0)
            outer = inner = 0
        rows.append(ResultRow(**base, **met, outer_iters=outer, inner_iters=inner,
                              wall_seconds=time.perf_counter() - t0))
    return rows


def _trial_job(args):
    return run_trial(*args)


def run_experiment(spec: ExperimentSpec, jobs=None):
    """All (m, rep) trials of ``spec``; rows sorted by (m, rep, algo).

    ``jobs`` defaults to the ``ISD_BENCH_JOBS`` environment variable, else 1.
    """
    if jobs is None:
        jobs = int(os.environ.get("ISD_BENCH_JOBS", "1"))
    tasks = [(spec, m, rep) for m in spec.m_values for rep in range(spec.reps)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            chunks = list(pool.map(_trial_job, tasks))
    else:
        chunks = [_trial_job(t) for t in tasks]
    keyed = []
    for (_, m, rep), rows in zip(tasks, chunks):
        keyed += [((m, rep, r.algo), r) for r in rows]
    keyed.sort(key=lambda kr: kr[0])
    return [r for _, r in keyed]


def _fmt(v):
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def rows_to_csv(rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER.split(","))
    for r in rows:
        writer.writerow([_fmt(getattr(r, f.name)) for f in fields(ResultRow)])
    return buf.getvalue()


def manifest(spec: ExperimentSpec | None):
    return {
        "spec": None if spec is None else asdict(spec),
        "master_seed": None if spec is None else spec.seed,
        "versions": {
            "isd": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "python": platform.python_version(),
        },
    }


def emit_results(rows, fmt, path, spec: ExperimentSpec | None = None):
    """Write rows as CSV (fixed header) or JSON (rows plus a manifest)."""
    path = Path(path)
    if fmt == "csv":
        path.write_text(rows_to_csv(rows))
    elif fmt == "json":
        payload = {"manifest": manifest(spec), "rows": [asdict(r) for r in rows]}
        path.write_text(json.dumps(payload, indent=1))
    else:
        raise ValueError(f"unknown format {fmt!r}")
    return path


def _coerce(name, value):
    kind = {f.name: f.type for f in fields(ResultRow)}[name]
    if kind == "bool":
        return value in ("1", "True", "true", True, 1)
    if kind == "int":
        return int(value)
    if kind == "float":
        return float(value)
    return str(value)


def read_results(path):
    """Inverse of :func:`emit_results` for either format."""
    path = Path(path)
    text = path.read_text()
    if text.lstrip().startswith("{"):
        data = json.loads(text)
        return [ResultRow(**{k: _coerce(k, v) for k, v in row.items()}) for row in data["rows"]]
    reader = csv.DictReader(io.StringIO(text))
    return [ResultRow(**{k: _coerce(k, v) for k, v in row.items()}) for row in reader]


def success_table(rows):
    """{(algo, m): success frequency}."""
    acc = {}
    for r in rows:
        hit, tot = acc.get((r.algo, r.m), (0, 0))
        acc[(r.algo, r.m)] = (hit + bool(r.success), tot + 1)
    return {key: hit / tot for key, (hit, tot) in acc.items()}
